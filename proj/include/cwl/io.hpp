#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "json.hpp"

#include "cwl/herglotz.hpp"
#include "cwl/medium.hpp"
#include "cwl/scatter.hpp"
#include "cwl/teig.hpp"

namespace cwl::io {

using json = nlohmann::json;

// Config does not match the expected schema.
class SchemaError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

inline void write_mesh(std::ostream& os, const TriMesh& m) {
  os << "nodes " << m.nodes.size() << " triangles " << m.triangles.size() << " boundary " << m.boundary.size() << "\n";
  os << std::setprecision(17);
  for (auto& p : m.nodes) os << p.x() << " " << p.y() << "\n";
  for (auto& t : m.triangles) os << t[0] << " " << t[1] << " " << t[2] << "\n";
  for (auto& b : m.boundary) os << b[0] << " " << b[1] << " " << b[2] << "\n";
}

inline TriMesh read_mesh(std::istream& is) {
  std::string w1, w2, w3;
  std::size_t n = 0, t = 0, b = 0;
  if (!(is >> w1 >> n >> w2 >> t >> w3 >> b) || w1 != "nodes" || w2 != "triangles" || w3 != "boundary")
    throw SchemaError("read_mesh: bad header");
  TriMesh m;
  m.nodes.resize(n);
  m.triangles.resize(t);
  m.boundary.resize(b);
  m.region.assign(t, 0);
  for (auto& p : m.nodes)
    if (!(is >> p.x() >> p.y())) throw SchemaError("read_mesh: truncated node list");
  for (auto& tri : m.triangles)
    if (!(is >> tri[0] >> tri[1] >> tri[2])) throw SchemaError("read_mesh: truncated triangle list");
  for (auto& e : m.boundary)
    if (!(is >> e[0] >> e[1] >> e[2])) throw SchemaError("read_mesh: truncated boundary list");
  for (auto& tri : m.triangles)
    for (int v : tri)
      if (v < 0 || static_cast<std::size_t>(v) >= n) throw SchemaError("read_mesh: node index out of range");
  m.validate();
  return m;
}

// One line per node: re im.
inline void write_field(std::ostream& os, const CVec& u) {
  os << "nodes " << u.size() << "\n" << std::setprecision(17);
  for (Eigen::Index i = 0; i < u.size(); ++i) os << u[i].real() << " " << u[i].imag() << "\n";
}

inline std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::string comment;
};

inline void write_csv(std::ostream& os, const CsvTable& t) {
  if (!t.comment.empty()) os << "# " << t.comment << "\n";
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << "\n";
  for (auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << fmt(r[i]);
    os << "\n";
  }
}

inline CsvTable far_field_table(const FarField& f) {
  CsvTable t{{"theta", "re", "im"}, {}, "rows " + std::to_string(f.values.size())};
  for (std::size_t j = 0; j < f.values.size(); ++j) t.rows.push_back({f.theta[j], f.values[j].real(), f.values[j].imag()});
  return t;
}

inline FarField read_far_field(std::istream& is, double k) {
  FarField f;
  f.k = k;
  std::string line;
  std::size_t expect = 0;
  bool header = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream c(line.substr(1));
      std::string w;
      if (c >> w && w == "rows") c >> expect;
      continue;
    }
    if (!header) {
      if (line != "theta,re,im") throw SchemaError("read_far_field: expected header theta,re,im");
      header = true;
      continue;
    }
    std::istringstream r(line);
    double th, re, im;
    char c1, c2;
    if (!(r >> th >> c1 >> re >> c2 >> im) || c1 != ',' || c2 != ',') throw SchemaError("read_far_field: bad row");
    f.theta.push_back(th);
    f.values.emplace_back(re, im);
  }
  if (expect && expect != f.values.size()) throw SchemaError("read_far_field: row count does not match header");
  return f;
}

// ---- JSON helpers ----

inline cplx complex_from(const json& j, const std::string& what) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) return {j[0].get<double>(), j[1].get<double>()};
  throw SchemaError(what + ": expected a number or [re, im]");
}

inline json complex_to(cplx z) { return json::array({z.real(), z.imag()}); }

inline Vec2 point_from(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw SchemaError(what + ": expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

template <class T>
T get_or(const json& j, const std::string& key, T def) {
  if (!j.contains(key)) return def;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw SchemaError("config: field '" + key + "' has the wrong type");
  }
}

inline void only_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where + ": expected an object");
  for (auto& [k, v] : j.items()) {
    bool ok = false;
    for (auto* a : keys) ok = ok || k == a;
    if (!ok) throw SchemaError(where + ": unknown field '" + k + "'");
  }
}

inline FourierKernel kernel_from_json(const json& j) {
  only_keys(j, {"k", "coeffs"}, "kernel");
  if (!j.contains("k") || !j.contains("coeffs") || !j["coeffs"].is_array()) throw SchemaError("kernel: need k and coeffs");
  std::vector<cplx> c;
  for (auto& e : j["coeffs"]) c.push_back(complex_from(e, "kernel.coeffs"));
  try {
    return FourierKernel::make(j["k"].get<double>(), std::move(c));
  } catch (const InvalidInput& e) {
    throw SchemaError(e.what());
  }
}

inline json kernel_to_json(const FourierKernel& g) {
  json c = json::array();
  for (auto& v : g.coeffs) c.push_back(complex_to(v));
  return {{"k", g.k}, {"coeffs", c}};
}

inline Domain domain_from_json(const json& j) {
  only_keys(j, {"type", "vertices", "center", "radius"}, "domain");
  const std::string type = get_or<std::string>(j, "type", "");
  try {
    if (type == "polygon") {
      if (!j.contains("vertices") || !j["vertices"].is_array()) throw SchemaError("domain: polygon needs vertices");
      std::vector<Vec2> v;
      for (auto& p : j["vertices"]) v.push_back(point_from(p, "domain.vertices"));
      return Polygon::make(v);
    }
    if (type == "disk") {
      if (!j.contains("radius")) throw SchemaError("domain: disk needs radius");
      Vec2 c = j.contains("center") ? point_from(j["center"], "domain.center") : Vec2(0.0, 0.0);
      return Disk::make(c, get_or<double>(j, "radius", 0.0));
    }
  } catch (const SchemaError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw SchemaError(e.what());
  }
  throw SchemaError("domain: type must be 'polygon' or 'disk'");
}

inline json domain_to_json(const Domain& d) {
  if (auto* p = std::get_if<Polygon>(&d)) {
    json v = json::array();
    for (auto& x : p->vertices) v.push_back({x.x(), x.y()});
    return {{"type", "polygon"}, {"vertices", v}};
  }
  auto& c = std::get<Disk>(d);
  return {{"type", "disk"}, {"center", {c.center.x(), c.center.y()}}, {"radius", c.radius}};
}

// {"domain": {...}, "q": [value | {"region": [[x,y],...], "value": v}, ...],
//  "eta": {"default": v, "edges": [[tag, re, im], ...]}}
inline ConductiveMedium medium_from_json(const json& j) {
  only_keys(j, {"domain", "q", "eta"}, "medium");
  if (!j.contains("domain")) throw SchemaError("medium: missing domain");
  ConductiveMedium m;
  m.domain = domain_from_json(j["domain"]);
  if (j.contains("q")) {
    const json& q = j["q"];
    if (!q.is_array()) throw SchemaError("medium.q: expected an array");
    for (auto& e : q) {
      if (e.is_object()) {
        only_keys(e, {"region", "value"}, "medium.q");
        if (!e.contains("region") || !e.contains("value")) throw SchemaError("medium.q: patch needs region and value");
        std::vector<Vec2> v;
        for (auto& p : e["region"]) v.push_back(point_from(p, "medium.q.region"));
        try {
          m.q_patches.push_back({Polygon::make(v), complex_from(e["value"], "medium.q.value")});
        } catch (const SchemaError&) {
          throw;
        } catch (const InvalidInput& ex) {
          throw SchemaError(ex.what());
        }
      } else {
        m.q = complex_from(e, "medium.q");
      }
    }
  }
  if (j.contains("eta")) {
    const json& e = j["eta"];
    only_keys(e, {"default", "edges"}, "medium.eta");
    if (e.contains("default")) m.eta = complex_from(e["default"], "medium.eta.default");
    if (e.contains("edges")) {
      for (auto& r : e["edges"]) {
        if (!r.is_array() || r.size() != 3 || !r[0].is_number_integer() || !r[1].is_number() || !r[2].is_number())
          throw SchemaError("medium.eta.edges: rows must be [tag, re, im]");
        m.eta_edges[r[0].get<int>()] = {r[1].get<double>(), r[2].get<double>()};
      }
    }
  }
  try {
    m.validate();
  } catch (const InvalidInput& ex) {
    throw SchemaError(ex.what());
  }
  return m;
}

inline json medium_to_json(const ConductiveMedium& m) {
  json q = json::array({complex_to(m.q)});
  for (auto& p : m.q_patches) {
    json v = json::array();
    for (auto& x : p.region.vertices) v.push_back({x.x(), x.y()});
    q.push_back({{"region", v}, {"value", complex_to(p.value)}});
  }
  json edges = json::array();
  for (auto& [t, v] : m.eta_edges) edges.push_back({t, v.real(), v.imag()});
  return {{"domain", domain_to_json(m.domain)}, {"q", q}, {"eta", {{"default", complex_to(m.eta)}, {"edges", edges}}}};
}

inline json eigen_summary(const EigenPair& p) {
  return {{"k_re", p.k.real()},
          {"k_im", p.k.imag()},
          {"residuals",
           {{"pde_v", p.residuals.pde_v},
            {"pde_w", p.residuals.pde_w},
            {"bc_dirichlet", p.residuals.bc_dirichlet},
            {"bc_conductive", p.residuals.bc_conductive}}}};
}

// ---- SVG ----

struct Series {
  std::string label;
  std::vector<double> x, y;
};

// Static log-log line plot.
inline std::string loglog_svg(const std::vector<Series>& series, const std::string& xlabel, const std::string& ylabel) {
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (s.x[i] > 0 && s.y[i] > 0) {
        x0 = std::min(x0, std::log10(s.x[i]));
        x1 = std::max(x1, std::log10(s.x[i]));
        y0 = std::min(y0, std::log10(s.y[i]));
        y1 = std::max(y1, std::log10(s.y[i]));
      }
  if (x0 > x1) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-12) x1 = x0 + 1;
  if (y1 - y0 < 1e-12) y1 = y0 + 1;
  const double W = 480, H = 360, ml = 60, mb = 40, mt = 20, mr = 20;
  auto px = [&](double x) { return ml + (std::log10(x) - x0) / (x1 - x0) * (W - ml - mr); };
  auto py = [&](double y) { return H - mb - (std::log10(y) - y0) / (y1 - y0) * (H - mb - mt); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  std::ostringstream o;
  o << std::setprecision(6);
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  o << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << W - ml - mr << "\" height=\"" << H - mb - mt
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"" << H - 8 << "\" text-anchor=\"middle\" font-size=\"12\">" << xlabel << "</text>\n";
  o << "<text x=\"14\" y=\"" << H / 2 << "\" transform=\"rotate(-90 14 " << H / 2
    << ")\" text-anchor=\"middle\" font-size=\"12\">" << ylabel << "</text>\n";
  o << "<text x=\"" << ml << "\" y=\"" << H - mb + 14 << "\" font-size=\"10\">1e" << fmt(std::round(x0 * 100) / 100)
    << "</text>\n";
  o << "<text x=\"" << W - mr << "\" y=\"" << H - mb + 14 << "\" text-anchor=\"end\" font-size=\"10\">1e"
    << fmt(std::round(x1 * 100) / 100) << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    auto& s = series[k];
    o << "<polyline fill=\"none\" stroke=\"" << colors[k % 4] << "\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (s.x[i] > 0 && s.y[i] > 0) o << px(s.x[i]) << "," << py(s.y[i]) << " ";
    o << "\"/>\n";
    o << "<text x=\"" << ml + 8 << "\" y=\"" << mt + 14 * (k + 1) << "\" font-size=\"11\" fill=\"" << colors[k % 4]
      << "\">" << s.label << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

// ---- artifacts ----

inline std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 || EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx, md, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha256: digest failed");
  }
  EVP_MD_CTX_free(ctx);
  std::ostringstream o;
  for (unsigned int i = 0; i < len; ++i) o << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return o.str();
}

// Writes files under one directory and records each with its hash.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

  void write(const std::string& name, const std::string& content) {
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir_ / name).string());
    f << content;
    entries_.push_back({name, sha256_hex(content), content.size()});
  }
  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }
  void write_csv(const std::string& name, const CsvTable& t) {
    std::ostringstream o;
    io::write_csv(o, t);
    write(name, o.str());
  }
  void write_mesh(const std::string& name, const TriMesh& m) {
    std::ostringstream o;
    io::write_mesh(o, m);
    write(name, o.str());
  }
  void write_field(const std::string& name, const CVec& u) {
    std::ostringstream o;
    io::write_field(o, u);
    write(name, o.str());
  }
  void finish() {
    json a = json::array();
    for (auto& e : entries_) a.push_back({{"path", e.name}, {"sha256", e.hash}, {"bytes", e.bytes}});
    std::ofstream f(dir_ / "manifest.json");
    f << json{{"artifacts", a}}.dump(2) << "\n";
  }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  struct Entry {
    std::string name, hash;
    std::size_t bytes;
  };
  std::filesystem::path dir_;
  std::vector<Entry> entries_;
};

}  // namespace cwl::io
