#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <unordered_map>
#include <vector>

#include "cwl/geometry.hpp"

namespace cwl::detail {

struct PslgSegment {
  int a, b, tag;
  bool fixed = false;  // never split during refinement
};

struct Pslg {
  std::vector<Vec2> points;
  std::vector<PslgSegment> segments;
};

using SizeField = std::function<double(const Vec2&)>;

// Incremental Bowyer-Watson triangulation with Ruppert refinement. Segments
// are recovered by midpoint splitting, so the output is conforming: every
// input segment is a union of mesh edges.
class ConformingDelaunay {
 public:
  ConformingDelaunay(const Pslg& in, SizeField size, double min_angle_deg, std::size_t max_nodes)
      : size_(std::move(size)), max_nodes_(max_nodes) {
    min_sin_ = std::sin(min_angle_deg * pi / 180.0);
    require(in.points.size() >= 3, "mesher: need at least three points");
    Vec2 lo = in.points[0], hi = in.points[0];
    for (auto& p : in.points) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    scale_ = (hi - lo).norm();
    require(scale_ > 0.0, "mesher: degenerate input");
    floor_ = 1e-6 * scale_;
    Vec2 c = 0.5 * (lo + hi);
    double d = 20.0 * scale_;
    pts_ = {c + Vec2(-d, -d), c + Vec2(d, -d), c + Vec2(0.0, d)};
    vtri_ = {0, 0, 0};
    tris_.push_back({{0, 1, 2}, {-1, -1, -1}, true, false});
    for (auto& p : in.points) input_index_.push_back(insert(p, static_cast<int>(tris_.size()) - 1, -1));
    for (auto& s : in.segments) {
      require(s.a >= 0 && s.b >= 0 && s.a < static_cast<int>(in.points.size()) &&
                  s.b < static_cast<int>(in.points.size()) && s.a != s.b,
              "mesher: bad segment");
      subs_[add_sub(input_index_[s.a], input_index_[s.b], s.tag)].fixed = s.fixed;
    }
  }

  TriMesh build() {
    recover_segments();
    mark_inside();
    refine();
    return extract();
  }

 private:
  struct Tri {
    std::array<int, 3> v;
    std::array<int, 3> n;  // n[j] is across the edge opposite v[j]
    bool alive;
    bool inside;
  };
  struct Sub {
    int a, b, tag;
    bool alive;
    bool fixed = false;
  };

  SizeField size_;
  std::size_t max_nodes_;
  double min_sin_ = 0.0, scale_ = 1.0, floor_ = 0.0;
  std::vector<Vec2> pts_;
  std::vector<Tri> tris_;
  std::vector<int> vtri_;
  std::vector<Sub> subs_;
  std::unordered_map<std::uint64_t, int> segmap_;
  std::vector<int> input_index_;
  std::vector<int> mark_;
  int stamp_ = 0;
  std::uint64_t rng_ = 0x9e3779b97f4a7c15ULL;
  bool inside_known_ = false;
  std::deque<int> encq_, badq_;

  static std::uint64_t key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
  }
  unsigned next_rand() {
    rng_ ^= rng_ << 13;
    rng_ ^= rng_ >> 7;
    rng_ ^= rng_ << 17;
    return static_cast<unsigned>(rng_ >> 11);
  }
  bool is_super(int v) const { return v < 3; }
  bool is_sub_edge(int a, int b) const { return segmap_.count(key(a, b)) > 0; }

  static double incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
    long double adx = a.x() - d.x(), ady = a.y() - d.y();
    long double bdx = b.x() - d.x(), bdy = b.y() - d.y();
    long double cdx = c.x() - d.x(), cdy = c.y() - d.y();
    long double al = adx * adx + ady * ady, bl = bdx * bdx + bdy * bdy, cl = cdx * cdx + cdy * cdy;
    return static_cast<double>(al * (bdx * cdy - bdy * cdx) - bl * (adx * cdy - ady * cdx) +
                               cl * (adx * bdy - ady * bdx));
  }

  int add_sub(int a, int b, int tag) {
    int id = static_cast<int>(subs_.size());
    subs_.push_back({a, b, tag, true, false});
    segmap_[key(a, b)] = id;
    return id;
  }

  int locate(const Vec2& p, int t) const {
    if (t < 0 || t >= static_cast<int>(tris_.size()) || !tris_[t].alive) {
      t = static_cast<int>(tris_.size()) - 1;
      while (!tris_[t].alive) --t;
    }
    auto* self = const_cast<ConformingDelaunay*>(this);
    for (int steps = 0; steps < 10000000; ++steps) {
      const Tri& T = tris_[t];
      int r = static_cast<int>(self->next_rand() % 3);
      bool moved = false;
      for (int k = 0; k < 3; ++k) {
        int j = (r + k) % 3;
        if (orient(pts_[T.v[(j + 1) % 3]], pts_[T.v[(j + 2) % 3]], p) < 0.0) {
          t = T.n[j];
          moved = true;
          break;
        }
      }
      if (!moved) return t;
      if (t < 0) return -1;
    }
    return -1;
  }

  // Inserts p. `split` is the subsegment p bisects, or -1. Returns the vertex index.
  int insert(const Vec2& p, int start, int split) {
    int t0 = locate(p, start);
    if (t0 < 0) throw NumericalError("mesher: point location failed");
    for (int v : tris_[t0].v)
      if ((pts_[v] - p).norm() < 1e-12 * scale_) return v;
    if (pts_.size() >= max_nodes_ + 3) throw NumericalError("mesher: node budget exhausted");
    const int vi = static_cast<int>(pts_.size());
    pts_.push_back(p);
    vtri_.push_back(-1);
    std::uint64_t split_key = split >= 0 ? key(subs_[split].a, subs_[split].b) : ~0ULL;

    mark_.resize(tris_.size(), 0);
    ++stamp_;
    std::vector<int> cav{t0}, forced{t0};
    mark_[t0] = stamp_;
    {
      const Tri& T = tris_[t0];
      for (int j = 0; j < 3; ++j) {
        const Vec2 &a = pts_[T.v[(j + 1) % 3]], &b = pts_[T.v[(j + 2) % 3]];
        int nb = T.n[j];
        if (nb >= 0 && std::abs(orient(a, b, p)) <= 1e-13 * (b - a).squaredNorm()) {
          mark_[nb] = stamp_;
          cav.push_back(nb);
          forced.push_back(nb);
        }
      }
    }
    for (std::size_t i = 0; i < cav.size(); ++i) {
      const Tri& T = tris_[cav[i]];
      for (int j = 0; j < 3; ++j) {
        int nb = T.n[j];
        if (nb < 0 || mark_[nb] == stamp_) continue;
        int a = T.v[(j + 1) % 3], b = T.v[(j + 2) % 3];
        if (key(a, b) != split_key && is_sub_edge(a, b)) continue;
        const Tri& N = tris_[nb];
        if (incircle(pts_[N.v[0]], pts_[N.v[1]], pts_[N.v[2]], p) > 0.0) {
          mark_[nb] = stamp_;
          cav.push_back(nb);
        }
      }
    }
    // Shrink the cavity until p sees every boundary edge.
    struct BEdge {
      int a, b, outer, owner;
    };
    std::vector<BEdge> bnd;
    for (;;) {
      bnd.clear();
      int bad = -1;
      for (int t : cav) {
        if (mark_[t] != stamp_) continue;
        const Tri& T = tris_[t];
        for (int j = 0; j < 3; ++j) {
          int nb = T.n[j];
          if (nb >= 0 && mark_[nb] == stamp_) continue;
          int a = T.v[(j + 1) % 3], b = T.v[(j + 2) % 3];
          if (orient(pts_[a], pts_[b], p) <= 1e-14 * (pts_[b] - pts_[a]).squaredNorm() &&
              std::find(forced.begin(), forced.end(), t) == forced.end())
            bad = t;
          bnd.push_back({a, b, nb, t});
        }
      }
      if (bad < 0) break;
      mark_[bad] = 0;
    }
    std::unordered_map<int, int> starts, ends;
    std::vector<int> created;
    for (auto& e : bnd) {
      int id = static_cast<int>(tris_.size());
      tris_.push_back({{e.a, e.b, vi}, {-1, -1, e.outer}, true, tris_[e.owner].inside});
      created.push_back(id);
      starts[e.a] = id;
      ends[e.b] = id;
      if (e.outer >= 0) {
        Tri& O = tris_[e.outer];
        for (int j = 0; j < 3; ++j)
          if (O.n[j] == e.owner) O.n[j] = id;
      }
    }
    for (int id : created) {
      Tri& T = tris_[id];
      T.n[0] = starts.at(T.v[1]);
      T.n[1] = ends.at(T.v[0]);
      for (int v : T.v) vtri_[v] = id;
    }
    for (int t : cav)
      if (mark_[t] == stamp_) tris_[t].alive = false;
    mark_.resize(tris_.size(), 0);
    if (inside_known_) {
      for (int id : created)
        if (tris_[id].inside) badq_.push_back(id);
    }
    return vi;
  }

  // Triangle containing edge (a,b), or -1.
  int find_edge(int a, int b) const {
    int t = vtri_[a];
    if (t < 0) return -1;
    const int start = t;
    for (int guard = 0; guard < 100000; ++guard) {
      const Tri& T = tris_[t];
      int i = T.v[0] == a ? 0 : (T.v[1] == a ? 1 : 2);
      if (T.v[(i + 1) % 3] == b || T.v[(i + 2) % 3] == b) return t;
      t = T.n[(i + 2) % 3];
      if (t < 0 || t == start) return -1;
    }
    return -1;
  }

  int apex(int t, int a, int b) const {
    for (int v : tris_[t].v)
      if (v != a && v != b) return v;
    return -1;
  }
  int across(int t, int a, int b) const {
    const Tri& T = tris_[t];
    for (int j = 0; j < 3; ++j)
      if (T.v[j] != a && T.v[j] != b) return T.n[j];
    return -1;
  }

  int split_sub(int si) {
    Sub s = subs_[si];
    Vec2 m = 0.5 * (pts_[s.a] + pts_[s.b]);
    int t = find_edge(s.a, s.b);
    int vi = insert(m, t >= 0 ? t : vtri_[s.a], si);
    subs_[si].alive = false;
    segmap_.erase(key(s.a, s.b));
    int s1 = add_sub(s.a, vi, s.tag), s2 = add_sub(vi, s.b, s.tag);
    if (inside_known_) {
      check_sub(s1);
      check_sub(s2);
      after_insert(vi);
    }
    return vi;
  }

  void recover_segments() {
    for (bool changed = true; changed;) {
      changed = false;
      for (std::size_t i = 0; i < subs_.size(); ++i) {
        if (!subs_[i].alive) continue;
        if (find_edge(subs_[i].a, subs_[i].b) < 0) {
          split_sub(static_cast<int>(i));
          changed = true;
        }
      }
    }
  }

  void mark_inside() {
    for (auto& T : tris_) T.inside = T.alive;
    std::vector<int> stack;
    for (std::size_t t = 0; t < tris_.size(); ++t) {
      auto& T = tris_[t];
      if (T.alive && (is_super(T.v[0]) || is_super(T.v[1]) || is_super(T.v[2]))) {
        T.inside = false;
        stack.push_back(static_cast<int>(t));
      }
    }
    while (!stack.empty()) {
      int t = stack.back();
      stack.pop_back();
      for (int j = 0; j < 3; ++j) {
        int nb = tris_[t].n[j];
        if (nb < 0 || !tris_[nb].inside) continue;
        if (is_sub_edge(tris_[t].v[(j + 1) % 3], tris_[t].v[(j + 2) % 3])) continue;
        tris_[nb].inside = false;
        stack.push_back(nb);
      }
    }
    inside_known_ = true;
  }

  bool in_diametral(int si, const Vec2& p) const {
    const Sub& s = subs_[si];
    return (p - pts_[s.a]).dot(p - pts_[s.b]) < -1e-12 * (pts_[s.b] - pts_[s.a]).squaredNorm();
  }

  void check_sub(int si) {
    const Sub& s = subs_[si];
    Vec2 mid = 0.5 * (pts_[s.a] + pts_[s.b]);
    double len = (pts_[s.b] - pts_[s.a]).norm();
    if (len > 1.0001 * size_(mid)) {
      encq_.push_back(si);
      return;
    }
    int t = find_edge(s.a, s.b);
    if (t < 0) {
      encq_.push_back(si);
      return;
    }
    for (int tt : {t, across(t, s.a, s.b)}) {
      if (tt < 0) continue;
      int c = apex(tt, s.a, s.b);
      if (!is_super(c) && in_diametral(si, pts_[c])) {
        encq_.push_back(si);
        return;
      }
    }
  }

  void after_insert(int vi) {
    for (std::size_t i = 0; i < subs_.size(); ++i)
      if (subs_[i].alive && subs_[i].a != vi && subs_[i].b != vi && in_diametral(static_cast<int>(i), pts_[vi]))
        encq_.push_back(static_cast<int>(i));
  }

  bool is_bad(int t) const {
    const Tri& T = tris_[t];
    if (!T.alive || !T.inside) return false;
    const Vec2 &a = pts_[T.v[0]], &b = pts_[T.v[1]], &c = pts_[T.v[2]];
    double la = (b - c).norm(), lb = (c - a).norm(), lc = (a - b).norm();
    double lmax = std::max({la, lb, lc}), lmin = std::min({la, lb, lc});
    Vec2 g = (a + b + c) / 3.0;
    if (lmax > 1.0001 * size_(g)) return true;
    if (lmin < floor_) return false;
    // sine of the smallest angle, opposite the shortest edge
    double area2 = std::abs(orient(a, b, c));
    double prod = la * lb * lc;
    double smin = area2 * lmin / prod;
    return smin < min_sin_;
  }

  static Vec2 circumcenter(const Vec2& a, const Vec2& b, const Vec2& c) {
    Vec2 ba = b - a, ca = c - a;
    double d = 2.0 * cross2(ba, ca);
    double b2 = ba.squaredNorm(), c2 = ca.squaredNorm();
    return a + Vec2(ca.y() * b2 - ba.y() * c2, ba.x() * c2 - ca.x() * b2) / d;
  }

  bool splittable(int si) const {
    return !subs_[si].fixed && (pts_[subs_[si].b] - pts_[subs_[si].a]).norm() > 2.0 * floor_;
  }

  void drain_encroached() {
    while (!encq_.empty()) {
      int si = encq_.front();
      encq_.pop_front();
      if (!subs_[si].alive || !splittable(si)) continue;
      split_sub(si);
    }
  }

  void refine() {
    for (std::size_t i = 0; i < subs_.size(); ++i)
      if (subs_[i].alive) check_sub(static_cast<int>(i));
    for (std::size_t t = 0; t < tris_.size(); ++t)
      if (tris_[t].alive && tris_[t].inside) badq_.push_back(static_cast<int>(t));
    drain_encroached();
    while (!badq_.empty()) {
      int t = badq_.front();
      badq_.pop_front();
      if (!is_bad(t)) continue;
      const Tri& T = tris_[t];
      Vec2 cc = circumcenter(pts_[T.v[0]], pts_[T.v[1]], pts_[T.v[2]]);
      std::vector<int> enc;
      for (std::size_t i = 0; i < subs_.size(); ++i)
        if (subs_[i].alive && in_diametral(static_cast<int>(i), cc)) enc.push_back(static_cast<int>(i));
      if (!enc.empty()) {
        bool any = false;
        for (int si : enc)
          if (splittable(si)) {
            encq_.push_back(si);
            any = true;
          }
        if (any) {
          drain_encroached();
          badq_.push_back(t);
        }
        continue;
      }
      int loc = locate(cc, t);
      Vec2 p = cc;
      if (loc < 0 || !tris_[loc].inside) p = (pts_[T.v[0]] + pts_[T.v[1]] + pts_[T.v[2]]) / 3.0;
      int vi = insert(p, t, -1);
      after_insert(vi);
      drain_encroached();
    }
  }

  TriMesh extract() const {
    TriMesh m;
    std::vector<int> map(pts_.size(), -1);
    for (auto& T : tris_) {
      if (!T.alive || !T.inside) continue;
      for (int v : T.v)
        if (map[v] < 0) {
          map[v] = static_cast<int>(m.nodes.size());
          m.nodes.push_back(pts_[v]);
        }
    }
    for (std::size_t t = 0; t < tris_.size(); ++t) {
      const Tri& T = tris_[t];
      if (!T.alive || !T.inside) continue;
      m.triangles.push_back({map[T.v[0]], map[T.v[1]], map[T.v[2]]});
      for (int j = 0; j < 3; ++j) {
        int a = T.v[(j + 1) % 3], b = T.v[(j + 2) % 3];
        int nb = T.n[j];
        auto it = segmap_.find(key(a, b));
        int tag = it == segmap_.end() ? -1 : subs_[it->second].tag;
        if (nb < 0 || !tris_[nb].inside)
          m.boundary.push_back({map[a], map[b], tag});
        else if (tag >= 0 && a < b)
          m.interfaces.push_back({map[a], map[b], tag});
      }
    }
    m.region.assign(m.triangles.size(), 0);
    return m;
  }
};

}  // namespace cwl::detail
