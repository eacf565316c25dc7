#include <cstdlib>
#include <fstream>
#include <future>
#include <iostream>
#include <random>

#include "CLI11.hpp"

#include "cwl/cgo.hpp"
#include "cwl/dimred3d.hpp"
#include "cwl/inverse.hpp"
#include "cwl/io.hpp"

using namespace cwl;
using io::json;
using io::SchemaError;

namespace {

int log_level() {
  const char* e = std::getenv("CWL_LOG");
  if (!e) return 1;
  std::string s(e);
  if (s == "quiet" || s == "0") return 0;
  if (s == "debug" || s == "2") return 2;
  return 1;
}

void logf(int level, const std::string& msg) {
  static const int lv = log_level();
  if (level <= lv) std::cerr << "[cwl] " << msg << "\n";
}

struct Run {
  json cfg;
  io::ArtifactWriter out;
  int jobs = 1;
  std::uint64_t seed = 0;
};

// Evaluates f(0..n-1) with at most `jobs` tasks in flight; results keep index order.
template <class F>
auto parallel_map(int n, int jobs, F&& f) {
  using T = decltype(f(0));
  std::vector<T> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int start = 0; start < n; start += jobs) {
    std::vector<std::future<T>> batch;
    for (int i = start; i < std::min(n, start + jobs); ++i) batch.push_back(std::async(std::launch::async, f, i));
    for (auto& b : batch) out.push_back(b.get());
  }
  return out;
}

template <class T>
T num(const json& j, const std::string& key, T def) {
  return io::get_or<T>(j, key, def);
}

std::vector<double> num_list(const json& j, const std::string& key, std::vector<double> def) {
  if (!j.contains(key)) return def;
  if (!j[key].is_array()) throw SchemaError("config: '" + key + "' must be an array of numbers");
  std::vector<double> v;
  for (auto& e : j[key]) {
    if (!e.is_number()) throw SchemaError("config: '" + key + "' must be an array of numbers");
    v.push_back(e.get<double>());
  }
  return v;
}

Vec2 unit_dir(const json& j, const std::string& key) {
  Vec2 d = j.contains(key) ? io::point_from(j[key], key) : Vec2(1.0, 0.0);
  if (d.norm() == 0.0) throw SchemaError(key + ": direction must be non-zero");
  return d.normalized();
}

ConductiveMedium medium_of(const json& cfg) {
  if (!cfg.contains("medium")) throw SchemaError("config: missing 'medium'");
  return io::medium_from_json(cfg["medium"]);
}

MeshOptions mesh_options(const json& cfg) {
  MeshOptions o;
  o.h = num<double>(cfg, "h", 0.1);
  if (!(o.h > 0.0)) throw SchemaError("config: h must be positive");
  if (cfg.contains("grading")) {
    for (auto& g : cfg["grading"]) {
      io::only_keys(g, {"point", "h_min", "rate"}, "grading");
      Grading gr;
      gr.point = io::point_from(g.at("point"), "grading.point");
      gr.h_min = num<double>(g, "h_min", 0.01);
      gr.rate = num<double>(g, "rate", 0.3);
      o.gradings.push_back(gr);
    }
  }
  return o;
}

TriMesh mesh_domain(const Domain& d, const MeshOptions& o) {
  if (auto* p = std::get_if<Polygon>(&d)) return mesh_polygon(*p, o);
  return mesh_disk(std::get<Disk>(d), o);
}

cplx target_of(const json& cfg) { return io::complex_from(cfg.at("target"), "target"); }

// ---- verify-cgo ----

void cmd_verify_cgo(Run& r) {
  const json& c = r.cfg;
  io::only_keys(c, {"sectors", "h", "alphas", "zetas", "omega", "s_min", "s_max", "n_s", "closed_form_s", "mu_step"},
                "verify-cgo");
  std::vector<std::array<double, 2>> sectors;
  if (c.contains("sectors")) {
    for (auto& s : c["sectors"]) {
      if (!s.is_array() || s.size() != 2) throw SchemaError("verify-cgo: sectors are [theta_m, theta_M] pairs");
      sectors.push_back({s[0].get<double>(), s[1].get<double>()});
    }
  } else {
    sectors = {{-pi / 3, pi / 3}, {-0.5, 1.0}, {-2.5, 2.0}};
  }
  if (sectors.empty()) throw SchemaError("verify-cgo: need at least one sector");
  const double h = num<double>(c, "h", 0.5);
  const auto alphas = num_list(c, "alphas", {0.25, 0.5, 0.75});
  const auto zetas = num_list(c, "zetas", {0.5, 1.0, 2.0});
  const double om = num<double>(c, "omega", 0.9);
  const auto grid = geometric_grid(num<double>(c, "s_min", 1e2), num<double>(c, "s_max", 1e6), num<int>(c, "n_s", 9));
  const auto cf_s = num_list(c, "closed_form_s", {1.0, 10.0, 100.0});

  std::vector<Sector> secs;
  for (auto& s : sectors) {
    try {
      secs.push_back(Sector::make(s[0], s[1], h));
    } catch (const InvalidInput& e) {
      throw SchemaError(e.what());
    }
  }

  struct SectorOut {
    io::CsvTable xalpha, l2, u0l2, tail;
    json slopes, closed;
  };
  auto work = [&](int i) {
    const Sector& sec = secs[static_cast<std::size_t>(i)];
    SectorOut o;
    o.xalpha = {{"sector", "alpha", "s", "value", "bound"}, {}, ""};
    o.l2 = {{"sector", "alpha", "s", "norm", "bound"}, {}, ""};
    o.u0l2 = {{"sector", "s", "norm_sq", "majorant", "theta"}, {}, ""};
    o.tail = {{"sector", "s", "value", "bound", "majorant"}, {}, ""};
    o.slopes = json::array();
    for (double a : alphas) {
      std::vector<double> vx, vl;
      for (double s : grid) {
        double x = xalpha_integral(sec, s, a), l = std::sqrt(weighted_l2_norm_sq(sec, s, a));
        vx.push_back(x);
        vl.push_back(l);
        o.xalpha.rows.push_back({double(i), a, s, x, xalpha_bound(sec, s, a)});
        o.l2.rows.push_back({double(i), a, s, l, std::sqrt(weighted_l2_bound(sec, s, a))});
      }
      std::vector<double> gs(grid.begin() + 2, grid.end());
      o.slopes.push_back({{"quantity", "xalpha"}, {"alpha", a}, {"slope", loglog_slope(gs, {vx.begin() + 2, vx.end()})},
                          {"expected", -(a + 2.0)}});
      o.slopes.push_back({{"quantity", "weighted_l2"}, {"alpha", a}, {"slope", loglog_slope(gs, {vl.begin() + 2, vl.end()})},
                          {"expected", -(a + 1.0)}});
    }
    for (double s : grid) {
      auto u = u0_l2_check(sec, s);
      o.u0l2.rows.push_back({double(i), s, u.norm_sq, u.majorant, u.theta_mv});
      o.tail.rows.push_back({double(i), s, tail_integral_abs_u0(sec, s), tail_bound(sec, s, sec.h), tail_majorant(sec, s, sec.h)});
    }
    o.closed = json::array();
    for (double s : cf_s) {
      auto k = sector_integral_check(sec.theta_m, sec.theta_M, s);
      cplx b = boundary_integral_u0(sec.theta_M, s, sec.h);
      auto f = [&](double rr) -> cplx { return eval_u0(s, rr, sec.theta_M); };
      cplx bq = integrate(f, 0.0, sec.h, {1e-300, 1e-13, 100000, 40}).value;
      o.closed.push_back({{"sector", i},
                          {"s", s},
                          {"closed_form", io::complex_to(k.closed_form)},
                          {"quadrature", io::complex_to(k.quadrature)},
                          {"h", k.h},
                          {"tail_majorant", k.tail_bound},
                          {"rel_err", k.rel_err},
                          {"boundary_rel_err", std::abs(b - bq) / std::abs(bq)}});
    }
    logf(2, "verify-cgo: sector " + std::to_string(i) + " done");
    return o;
  };
  auto res = parallel_map(static_cast<int>(secs.size()), r.jobs, work);

  io::CsvTable xa{{"sector", "alpha", "s", "value", "bound"}, {}, ""}, l2 = xa, u0 = xa, tl = xa;
  l2.columns = res[0].l2.columns;
  u0.columns = res[0].u0l2.columns;
  tl.columns = res[0].tail.columns;
  json slopes = json::array(), closed = json::array();
  std::vector<io::Series> plot;
  for (auto& o : res) {
    for (auto& row : o.xalpha.rows) xa.rows.push_back(row);
    for (auto& row : o.l2.rows) l2.rows.push_back(row);
    for (auto& row : o.u0l2.rows) u0.rows.push_back(row);
    for (auto& row : o.tail.rows) tl.rows.push_back(row);
    for (auto& s : o.slopes) slopes.push_back(s);
    for (auto& s : o.closed) closed.push_back(s);
  }
  io::CsvTable zt{{"zeta", "s", "value"}, {}, "omega " + io::fmt(om) + " h " + io::fmt(h)};
  for (double z : zetas) {
    io::Series se{"zeta " + io::fmt(z), {}, {}};
    for (double s : grid) {
      double v = zeta_integral(s, z, om, h);
      zt.rows.push_back({z, s, v});
      se.x.push_back(s);
      se.y.push_back(v);
    }
    slopes.push_back({{"quantity", "zeta"}, {"zeta", z}, {"slope", decay_slope([&](double s) { return zeta_integral(s, z, om, h); }, grid)},
                      {"expected", -(z + 1.0)}});
    plot.push_back(se);
  }
  const double step = num<double>(c, "mu_step", 0.01);
  int zeros = 0, mismatched = 0, pairs = 0;
  for (double tm = -pi + step; tm < pi; tm += step) {
    std::vector<double> tops;
    for (double tM = tm + step; tM < pi; tM += step) tops.push_back(tM);
    if (tm + pi < pi) tops.push_back(tm + pi);
    for (double tM : tops) {
      bool zero = std::abs(mu_sum(tm, tM)) < 1e-12;
      bool degenerate = std::abs((tM - tm) - pi) < 1e-12;
      ++pairs;
      zeros += zero;
      mismatched += zero != degenerate;
    }
  }
  r.out.write_csv("xalpha.csv", xa);
  r.out.write_csv("weighted_l2.csv", l2);
  r.out.write_csv("u0_l2.csv", u0);
  r.out.write_csv("tail.csv", tl);
  r.out.write_csv("zeta.csv", zt);
  r.out.write_json("slopes.json", slopes);
  r.out.write_json("closed_form.json", closed);
  r.out.write_json("mu_sum.json", {{"step", step}, {"pairs", pairs}, {"zeros", zeros}, {"mismatched", mismatched}});
  r.out.write("zeta.svg", io::loglog_svg(plot, "s", "integral"));
}

// ---- fit-herglotz ----

void cmd_fit_herglotz(Run& r) {
  const json& c = r.cfg;
  io::only_keys(c, {"domain", "h", "k", "P", "reg_lambda", "target"}, "fit-herglotz");
  if (!c.contains("domain") || !c.contains("target")) throw SchemaError("fit-herglotz: need domain and target");
  Domain d = io::domain_from_json(c["domain"]);
  const double k = num<double>(c, "k", 1.0);
  const int P = num<int>(c, "P", 12);
  TriMesh mesh = mesh_domain(d, mesh_options(c));
  const json& t = c["target"];
  io::only_keys(t, {"plane_wave", "kernel"}, "fit-herglotz.target");
  CVec target;
  if (t.contains("plane_wave")) {
    Vec2 dir = unit_dir(t, "plane_wave");
    target = interpolate(mesh, [&](const Vec2& x) { return std::exp(I * k * x.dot(dir)); });
  } else if (t.contains("kernel")) {
    FourierKernel g = io::kernel_from_json(t["kernel"]);
    target = interpolate(mesh, [&](const Vec2& x) { return eval_quadrature(g, x); });
  } else {
    throw SchemaError("fit-herglotz: target needs plane_wave or kernel");
  }
  auto [g, rep] = fit_kernel(mesh, target, k, P, num<double>(c, "reg_lambda", -1.0));
  logf(1, "fit-herglotz: H1 residual " + io::fmt(rep.residual_h1));
  r.out.write_json("kernel.json", io::kernel_to_json(g));
  r.out.write_json("report.json", {{"residual_h1", rep.residual_h1},
                                   {"kernel_norm", rep.kernel_norm},
                                   {"reg_lambda", rep.reg_lambda},
                                   {"P", rep.P},
                                   {"nodes", mesh.nodes.size()}});
}

// ---- eig ----

void cmd_eig(Run& r) {
  const json& c = r.cfg;
  io::only_keys(c, {"medium", "h", "grading", "target", "nev", "window"}, "eig");
  ConductiveMedium m = medium_of(c);
  TriMesh mesh = mesh_domain(m.domain, mesh_options(c));
  TransmissionSystem S = assemble(m, mesh);
  logf(1, "eig: " + std::to_string(S.dim()) + " unknowns");
  std::vector<EigenPair> pairs;
  if (c.contains("target")) {
    pairs = solve_near(S, target_of(c), num<int>(c, "nev", 4));
  } else {
    SearchWindow w = default_window(mesh);
    if (c.contains("window")) {
      const json& j = c["window"];
      io::only_keys(j, {"k_re_min", "k_re_max", "k_im_max"}, "eig.window");
      w.k_re_min = num<double>(j, "k_re_min", w.k_re_min);
      w.k_re_max = num<double>(j, "k_re_max", w.k_re_max);
      w.k_im_max = num<double>(j, "k_im_max", w.k_im_max);
    }
    pairs = solve_dense_qz(S, w);
  }
  json list = json::array();
  for (auto& p : pairs) list.push_back(io::eigen_summary(p));
  r.out.write_json("eigenvalues.json", list);
  r.out.write_mesh("mesh.txt", mesh);
  if (!pairs.empty()) {
    r.out.write_field("v0.txt", pairs[0].v);
    r.out.write_field("w0.txt", pairs[0].w);
  }
}

// ---- corner-profile ----

void cmd_corner_profile(Run& r) {
  const json& c = r.cfg;
  io::only_keys(c, {"medium", "h", "grading", "target", "corner", "flat_point", "rho_max", "levels", "nev"},
                "corner-profile");
  ConductiveMedium m = medium_of(c);
  auto* poly = std::get_if<Polygon>(&m.domain);
  if (!poly) throw SchemaError("corner-profile: domain must be a polygon");
  const int ci = num<int>(c, "corner", 0);
  if (ci < 0 || ci >= static_cast<int>(poly->size())) throw SchemaError("corner-profile: corner index out of range");
  const Vec2 vtx = (*poly)[static_cast<std::size_t>(ci)];
  const Vec2 flat = c.contains("flat_point") ? io::point_from(c["flat_point"], "flat_point")
                                             : Vec2(0.5 * (vtx + (*poly)[static_cast<std::size_t>(ci + 1) % poly->size()]));
  const double rho_max = num<double>(c, "rho_max", 0.2);
  const int levels = num<int>(c, "levels", 5);
  MeshOptions o = mesh_options(c);
  if (!c.contains("grading")) {
    const double hmin = 0.1 * o.h;
    o.gradings = {{vtx, hmin, 0.3}, {flat, hmin, 0.3}};
  }
  TriMesh mesh = mesh_polygon(*poly, o);
  TransmissionSystem S = assemble(m, mesh);
  if (!c.contains("target")) throw SchemaError("corner-profile: need target [re, im]");
  EigenPair p = solve_near(S, target_of(c), num<int>(c, "nev", 3)).at(0);
  logf(1, "corner-profile: k = " + io::fmt(p.k.real()) + " " + io::fmt(p.k.imag()) + "i");
  auto cp = corner_vanishing_profile(mesh, p, CornerProbe::dyadic(vtx, rho_max, levels));
  auto fp = corner_vanishing_profile(mesh, p, CornerProbe::dyadic(flat, rho_max, levels));
  auto iv = interior_indicator(mesh, p, CornerProbe::dyadic(vtx, rho_max, levels),
                               [&m](const Vec2& x) { return m.q_at(x) - 1.0; });
  io::CsvTable t{{"rho", "corner", "flat", "vw", "resolved"}, {}, ""};
  io::Series sc{"corner", {}, {}}, sf{"flat", {}, {}}, sv{"V w", {}, {}};
  for (std::size_t i = 0; i < cp.size(); ++i) {
    t.rows.push_back({cp[i].rho, std::abs(cp[i].value), std::abs(fp[i].value), std::abs(iv[i].value),
                      cp[i].resolved && fp[i].resolved ? 1.0 : 0.0});
    sc.x.push_back(cp[i].rho);
    sc.y.push_back(std::abs(cp[i].value));
    sf.x.push_back(fp[i].rho);
    sf.y.push_back(std::abs(fp[i].value));
    sv.x.push_back(iv[i].rho);
    sv.y.push_back(std::abs(iv[i].value));
  }
  auto ratio = [](const std::vector<BallAverage>& a) { return std::abs(a.back().value) / std::abs(a.front().value); };
  bool monotone = true;
  for (std::size_t i = 1; i < iv.size(); ++i) monotone = monotone && std::abs(iv[i].value) < std::abs(iv[i - 1].value);
  r.out.write_csv("profile.csv", t);
  r.out.write("profile.svg", io::loglog_svg({sc, sf, sv}, "rho", "|ball average|"));
  r.out.write_json("summary.json", {{"eigenpair", io::eigen_summary(p)},
                                    {"corner", {vtx.x(), vtx.y()}},
                                    {"flat_point", {flat.x(), flat.y()}},
                                    {"corner_ratio", ratio(cp)},
                                    {"flat_ratio", ratio(fp)},
                                    {"vw_monotone", monotone},
                                    {"nodes", mesh.nodes.size()}});
}

// ---- forward / farfield ----

struct ForwardInputs {
  ConductiveMedium medium;
  IncidentWave inc;
  InverseOptions opt;
};

ForwardInputs forward_inputs(const json& c) {
  ForwardInputs f;
  f.medium = medium_of(c);
  try {
    f.inc = IncidentWave::make(num<double>(c, "k", 1.0), unit_dir(c, "d"));
  } catch (const SchemaError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw SchemaError(e.what());
  }
  f.opt.h = num<double>(c, "h", 0.1);
  f.opt.ring_R = num<double>(c, "ring_R", 0.0);
  f.opt.n_ring = num<int>(c, "n_ring", 0);
  return f;
}

void cmd_forward(Run& r) {
  const json& c = r.cfg;
  io::only_keys(c, {"medium", "k", "d", "h", "ring_R", "n_ring"}, "forward");
  ForwardInputs in = forward_inputs(c);
  ForwardSetup s = forward_setup(in.medium.domain, in.inc.k, in.opt, in.opt.h);
  ForwardResult res = solve_forward(in.medium, in.inc, s.mesh, s.ring);
  FarField ff = res.far_field(s.mesh);
  r.out.write_mesh("mesh.txt", s.mesh);
  r.out.write_field("u.txt", res.u);
  r.out.write_csv("far_field.csv", io::far_field_table(ff));
  r.out.write_json("summary.json", {{"nodes", s.mesh.nodes.size()},
                                    {"ring_R", s.ring.R},
                                    {"modes", s.ring.N},
                                    {"energy_flux", energy_flux(s.mesh, res)},
                                    {"aliasing_warning", ff.aliasing_warning}});
}

void cmd_farfield(Run& r) {
  const json& c = r.cfg;
  io::only_keys(c, {"medium", "k", "d", "h", "ring_R", "n_ring", "method", "n_angles"}, "farfield");
  ForwardInputs in = forward_inputs(c);
  const std::string method = num<std::string>(c, "method", "fem");
  FarField ff;
  if (method == "series") {
    if (!std::holds_alternative<Disk>(in.medium.domain)) throw SchemaError("farfield: series needs a disk medium");
    DiskSeries s = disk_series_forward(in.medium, in.inc);
    ff = s.far_field(uniform_angles(static_cast<std::size_t>(num<int>(c, "n_angles", 128))));
  } else if (method == "fem") {
    ff = simulate_far_field({in.medium, in.inc}, in.opt, in.opt.h);
  } else {
    throw SchemaError("farfield: method must be 'fem' or 'series'");
  }
  r.out.write_csv("far_field.csv", io::far_field_table(ff));
  r.out.write_json("summary.json", {{"method", method}, {"l2_norm", far_field_l2(ff)}, {"aliasing_warning", ff.aliasing_warning}});
}

// ---- distinguish ----

json flags_json(const AdmissibilityFlags& f) {
  return {{"ok", f.ok()},
          {"nonvanishing", f.nonvanishing},
          {"min_average", f.min_average},
          {"corners_nondegenerate", f.corners_nondegenerate},
          {"q_constant_near_corners", f.q_constant_near_corners}};
}

void cmd_distinguish(Run& r) {
  const json& c = r.cfg;
  io::only_keys(c, {"config1", "config2", "k", "d", "h", "ring_R", "n_ring"}, "distinguish");
  if (!c.contains("config1") || !c.contains("config2")) throw SchemaError("distinguish: need config1 and config2");
  json base = c;
  base.erase("config1");
  base.erase("config2");
  base["medium"] = c["config1"];
  ForwardInputs a = forward_inputs(base);
  base["medium"] = c["config2"];
  ForwardInputs b = forward_inputs(base);
  auto rep = distinguish({a.medium, a.inc}, {b.medium, b.inc}, a.opt);
  json corners = json::array();
  for (auto& v : rep.corners) corners.push_back({v.x(), v.y()});
  logf(1, "distinguish: distance " + io::fmt(rep.distance) + " floor " + io::fmt(rep.floor));
  r.out.write_json("report.json", {{"distance", rep.distance},
                                   {"floor", rep.floor},
                                   {"verdict", rep.verdict},
                                   {"admissible1", flags_json(rep.admissible1)},
                                   {"admissible2", flags_json(rep.admissible2)},
                                   {"corners", corners}});
}

// ---- recover-eta ----

void cmd_recover_eta(Run& r) {
  const json& c = r.cfg;
  io::only_keys(c, {"medium", "k", "d", "h", "ring_R", "n_ring", "observed", "truth_eta", "noise", "search"},
                "recover-eta");
  ForwardInputs in = forward_inputs(c);
  FarField obs;
  if (c.contains("observed")) {
    std::ifstream f(c["observed"].get<std::string>());
    if (!f) throw SchemaError("recover-eta: cannot open observed far field");
    obs = io::read_far_field(f, in.inc.k);
  } else if (c.contains("truth_eta")) {
    ConductiveMedium truth = in.medium;
    truth.eta = io::complex_from(c["truth_eta"], "truth_eta");
    obs = simulate_far_field({truth, in.inc}, in.opt, in.opt.h);
  } else {
    throw SchemaError("recover-eta: need observed or truth_eta");
  }
  const double noise = num<double>(c, "noise", 0.0);
  if (noise > 0.0) obs = add_noise(obs, noise, r.seed);
  EtaSearch s;
  if (c.contains("search")) {
    const json& j = c["search"];
    io::only_keys(j, {"lo", "hi", "samples", "tol"}, "recover-eta.search");
    if (j.contains("lo")) s.lo = io::complex_from(j["lo"], "search.lo");
    if (j.contains("hi")) s.hi = io::complex_from(j["hi"], "search.hi");
    s.samples = num<int>(j, "samples", s.samples);
    s.tol = num<double>(j, "tol", s.tol);
  }
  auto rec = recover_eta(in.medium, in.inc, obs, s, in.opt);
  json curve = json::array();
  for (auto& [e, f] : rec.curve) curve.push_back({{"eta", io::complex_to(e)}, {"misfit", f}});
  r.out.write_csv("observed.csv", io::far_field_table(obs));
  r.out.write_json("report.json", {{"eta_hat", io::complex_to(rec.eta_hat)},
                                   {"misfit", rec.misfit},
                                   {"misfit_curve", curve},
                                   {"dirichlet_nearest_k", rec.dirichlet.nearest_k},
                                   {"dirichlet_margin", rec.dirichlet.margin},
                                   {"noise", noise},
                                   {"seed", r.seed}});
}

// ---- dimred-verify ----

void cmd_dimred_verify(Run& r) {
  const json& c = r.cfg;
  io::only_keys(c, {"L", "k", "h", "theta", "s", "r_grid", "trials"}, "dimred-verify");
  const auto Ls = num_list(c, "L", {0.1, 0.2});
  const auto ks = num_list(c, "k", {0.5, 1.0, 2.0});
  const double h = num<double>(c, "h", 0.5), theta = num<double>(c, "theta", 0.7);
  const auto sg = num_list(c, "s", {1e3, 1e4});
  const auto rg = num_list(c, "r_grid", {0.2, 0.5, 1.0});
  const int trials = num<int>(c, "trials", 10000);
  json checks = json::array();
  auto add = [&](const std::string& name, double v, double lo, double hi, bool pass) {
    checks.push_back({{"name", name}, {"value", v}, {"bracket_lo", lo}, {"bracket_hi", hi}, {"pass", pass}});
  };
  const std::vector<Vec2> samples{{0.1, 0.05}, {0.3, -0.1}, {0.02, 0.2}};
  for (double L : Ls) {
    auto psi = BumpFunction::make(0.0, L);
    const std::string tag = "L=" + io::fmt(L);
    add("c_psi " + tag, c_psi(psi), 0.0, HUGE_VAL, c_psi(psi) > 0.0);
    for (double k : ks) {
      const std::string kt = tag + " k=" + io::fmt(k);
      double res = std::max(reduction_pde_residual(plane_wave_cylinder(k, 0.6 * k, 0.4), psi, samples),
                            reduction_pde_residual(bessel_cylinder(k, 0.6 * k), psi, samples));
      add("pde_residual " + kt, res, 0.0, 1e-8, res < 1e-8);
      if (k * L >= 0.5 || k * k * (h * h + L * L) >= 1.0) continue;
      auto rep = c311_ratio(theta, psi, k, h, sg);
      for (std::size_t i = 0; i < rep.s.size(); ++i) {
        double v = rep.ratio[i].real();
        add("c311 " + kt + " s=" + io::fmt(rep.s[i]), v, rep.bracket_lo, rep.bracket_hi, v > rep.bracket_lo && v < rep.bracket_hi);
      }
    }
    for (auto& row : c1_psi_bound_check(psi, rg)) {
      if (row.skipped) continue;
      add("c1_bound " + tag + " r=" + io::fmt(row.r), row.c1, 0.0, row.bound, row.holds);
      add("c1_bound_arctan_L " + tag + " r=" + io::fmt(row.r), row.c1, 0.0, row.literal_bound, row.literal_holds);
    }
  }
  std::mt19937_64 rng(r.seed);
  std::uniform_real_distribution<double> ang(-pi, pi), unit(0.0, 1.0);
  const auto psi = BumpFunction::make(0.0, Ls.front());
  const double kk = ks.front(), kL = kk * psi.L, cp = c_psi(psi);
  const double lo = cp * (1.0 - 2.0 * kL * kL) / (1.0 - kL * kL), hi = cp / (1.0 - kL * kL);
  double min_abs = HUGE_VAL;
  int zeros = 0;
  for (int t = 0; t < trials; ++t) {
    double a = ang(rng), b = ang(rng);
    if (a > b) std::swap(a, b);
    if (a == b || std::abs((b - a) - pi) < 1e-9 || a <= -pi) continue;
    auto w = weighted_mu_sum_check(a, b, lo + (hi - lo) * unit(rng), lo + (hi - lo) * unit(rng));
    min_abs = std::min(min_abs, std::abs(w.value));
    zeros += !w.nonzero;
  }
  add("weighted_mu_sum_min", min_abs, 0.0, HUGE_VAL, zeros == 0);
  r.out.write_json("checks.json", checks);
}

void write_diagnostic(const std::string& out, const json& d) {
  std::cout << d.dump(2) << "\n";
  try {
    std::filesystem::create_directories(out);
    std::ofstream(std::filesystem::path(out) / "diagnostic.json") << d.dump(2) << "\n";
  } catch (...) {
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"corner scattering and transmission eigenvalue experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config, out = "out";
  int jobs = 1;
  std::uint64_t seed = 0;
  app.add_option("--config", config, "JSON experiment config");
  app.add_option("--out", out, "output directory");
  app.add_option("--jobs", jobs, "parallel jobs")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "random seed");

  using Cmd = void (*)(Run&);
  const std::vector<std::pair<std::string, Cmd>> cmds{
      {"verify-cgo", cmd_verify_cgo},   {"fit-herglotz", cmd_fit_herglotz}, {"eig", cmd_eig},
      {"corner-profile", cmd_corner_profile}, {"forward", cmd_forward},   {"farfield", cmd_farfield},
      {"distinguish", cmd_distinguish}, {"recover-eta", cmd_recover_eta}, {"dimred-verify", cmd_dimred_verify}};
  for (auto& [name, fn] : cmds) app.add_subcommand(name);
  CLI11_PARSE(app, argc, argv);

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    json cfg = json::object();
    if (!config.empty()) {
      std::ifstream f(config);
      if (!f) throw SchemaError("cannot open config " + config);
      try {
        cfg = json::parse(f);
      } catch (const json::exception& e) {
        throw SchemaError(std::string("config is not valid JSON: ") + e.what());
      }
    }
    Run run{cfg, io::ArtifactWriter(out), jobs, seed};
    for (auto& [n, fn] : cmds)
      if (n == name) {
        try {
          fn(run);
        } catch (const json::exception& e) {
          throw SchemaError(std::string("config: ") + e.what());
        }
      }
    run.out.finish();
    logf(1, name + ": wrote " + out);
    return 0;
  } catch (const InvalidInput& e) {
    std::cerr << "cwl " << name << ": " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    write_diagnostic(out, {{"command", name},
                           {"error", e.what()},
                           {"best_estimate", io::complex_to(e.best_estimate)},
                           {"error_estimate", e.error_estimate}});
    return 3;
  }
}
