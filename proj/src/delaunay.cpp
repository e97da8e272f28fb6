#include "delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <random>
#include <sstream>

#include "cornerpml/error.hpp"

namespace cpml::detail {
namespace {

using ld = long double;

ld orient_ld(Vec2 a, Vec2 b, Vec2 c) {
  const ld ax = a.x, ay = a.y;
  return (b.x - ax) * (c.y - ay) - (b.y - ay) * (c.x - ax);
}

// Positive when d lies inside the circumcircle of counterclockwise abc.
ld incircle_ld(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const ld adx = static_cast<ld>(a.x) - d.x, ady = static_cast<ld>(a.y) - d.y;
  const ld bdx = static_cast<ld>(b.x) - d.x, bdy = static_cast<ld>(b.y) - d.y;
  const ld cdx = static_cast<ld>(c.x) - d.x, cdy = static_cast<ld>(c.y) - d.y;
  const ld ad = adx * adx + ady * ady;
  const ld bd = bdx * bdx + bdy * bdy;
  const ld cd = cdx * cdx + cdy * cdy;
  return ad * (bdx * cdy - cdx * bdy) - bd * (adx * cdy - cdx * ady) + cd * (adx * bdy - bdx * ady);
}

Vec2 circumcenter(Vec2 a, Vec2 b, Vec2 c) {
  const double bx = b.x - a.x, by = b.y - a.y, cx = c.x - a.x, cy = c.y - a.y;
  const double d = 2.0 * (bx * cy - by * cx);
  const double b2 = bx * bx + by * by, c2 = cx * cx + cy * cy;
  return {a.x + (cy * b2 - by * c2) / d, a.y + (bx * c2 - cx * b2) / d};
}

// Strictly inside the diametral circle of segment ab.
bool in_diametral(Vec2 a, Vec2 b, Vec2 p) {
  return dot(a - p, b - p) < -1e-12 * dot(b - a, b - a);
}

struct Tri {
  std::array<int, 3> v{};
  std::array<int, 3> nb{-1, -1, -1};
  bool alive = false;
};

class Builder {
 public:
  Builder(const Pslg& pslg, const RefineOptions& opts) : pslg_(pslg), opts_(opts) {}

  Triangulation run();

 private:
  int insert(Vec2 p);
  // Orientation of p against edge (a, b), evaluated identically from both sides.
  ld side(int a, int b, Vec2 p) const {
    return a < b ? orient_ld(pts_[a], pts_[b], p) : -orient_ld(pts_[b], pts_[a], p);
  }
  int locate(Vec2 p);
  int new_tri(int a, int b, int c);
  int find_edge(int a, int b, int* opposite_local) const;
  void around(int v, std::vector<int>& out) const;
  bool segment_encroached(const Segment& s) const;
  Vec2 split_point(const Segment& s) const;
  void split_segment(std::size_t si);
  void recover_segments();
  void refine();
  bool in_domain_tri(int t) const;

  const Pslg& pslg_;
  const RefineOptions& opts_;
  std::vector<Vec2> pts_;
  std::vector<Tri> tris_;
  std::vector<int> free_;
  std::vector<int> vtri_;
  std::vector<int> mark_;
  int stamp_ = 0;
  int last_ = 0;
  std::minstd_rand rng_{12345};
  std::vector<int> created_;
  std::vector<Segment> segs_;
  std::vector<bool> seg_alive_;
  std::deque<std::size_t> seg_queue_;
  std::vector<char> is_corner_;
  double scale_ = 1.0;
  std::size_t skipped_ = 0;
};

int Builder::new_tri(int a, int b, int c) {
  int t;
  if (!free_.empty()) {
    t = free_.back();
    free_.pop_back();
  } else {
    t = static_cast<int>(tris_.size());
    tris_.emplace_back();
    mark_.push_back(0);
  }
  tris_[t].v = {a, b, c};
  tris_[t].nb = {-1, -1, -1};
  tris_[t].alive = true;
  mark_[t] = 0;
  return t;
}

int Builder::locate(Vec2 p) {
  int t = last_;
  if (t < 0 || t >= static_cast<int>(tris_.size()) || !tris_[t].alive) {
    t = -1;
    for (int i = static_cast<int>(tris_.size()) - 1; i >= 0; --i) {
      if (tris_[i].alive) {
        t = i;
        break;
      }
    }
  }
  for (std::size_t steps = 0; steps < 4 * tris_.size() + 16; ++steps) {
    const Tri& tr = tris_[t];
    int next = -1;
    const unsigned rot = static_cast<unsigned>(rng_() % 3);
    for (int k = 0; k < 3; ++k) {
      const int i = static_cast<int>((k + rot) % 3);
      if (side(tr.v[(i + 1) % 3], tr.v[(i + 2) % 3], p) < 0) {
        next = tr.nb[i];
        if (next < 0) throw MeshError("point outside the bounding triangle");
        break;
      }
    }
    if (next < 0) return t;
    t = next;
  }
  // Exhaustive fallback.
  for (int i = 0; i < static_cast<int>(tris_.size()); ++i) {
    const Tri& tr = tris_[i];
    if (!tr.alive) continue;
    if (side(tr.v[0], tr.v[1], p) >= 0 && side(tr.v[1], tr.v[2], p) >= 0 && side(tr.v[2], tr.v[0], p) >= 0) {
      return i;
    }
  }
  throw MeshError("point location did not terminate");
}

int Builder::insert(Vec2 p) {
  const int t0 = locate(p);
  for (int k = 0; k < 3; ++k) {
    const int v = tris_[t0].v[k];
    if (norm(pts_[v] - p) <= 1e-13 * scale_) return v;
  }
  const int pi = static_cast<int>(pts_.size());
  pts_.push_back(p);
  vtri_.push_back(-1);
  if (!is_corner_.empty()) is_corner_.push_back(0);

  // Cavity of triangles whose circumcircle contains p.
  ++stamp_;
  std::vector<int> cav{t0};
  mark_[t0] = stamp_;
  for (std::size_t i = 0; i < cav.size(); ++i) {
    const Tri& tr = tris_[cav[i]];
    for (int n : tr.nb) {
      if (n < 0 || mark_[n] == stamp_) continue;
      const Tri& tn = tris_[n];
      if (incircle_ld(pts_[tn.v[0]], pts_[tn.v[1]], pts_[tn.v[2]], p) > 0) {
        mark_[n] = stamp_;
        cav.push_back(n);
      }
    }
  }

  // Make the cavity star-shaped from p and keep it connected.
  struct Edge {
    int a, b, outer, owner;
  };
  std::vector<Edge> edges;
  int cur = stamp_;
  for (int guard = 0;; ++guard) {
    if (guard > 10000) throw MeshError("cavity repair failed");
    edges.clear();
    int bad_owner = -1;
    for (int c : cav) {
      const Tri& tr = tris_[c];
      for (int i = 0; i < 3; ++i) {
        const int n = tr.nb[i];
        if (n >= 0 && mark_[n] == cur) continue;
        const int a = tr.v[(i + 1) % 3], b = tr.v[(i + 2) % 3];
        edges.push_back({a, b, n, c});
        if (bad_owner < 0 && c != t0 && !(side(a, b, p) > 0)) bad_owner = c;
      }
    }
    // Every cavity vertex must stay on the cavity boundary.
    if (bad_owner < 0) {
      std::vector<int> on_boundary;
      for (const Edge& e : edges) on_boundary.push_back(e.a);
      std::sort(on_boundary.begin(), on_boundary.end());
      for (int c : cav) {
        if (c == t0 || bad_owner >= 0) continue;
        for (int v : tris_[c].v) {
          if (!std::binary_search(on_boundary.begin(), on_boundary.end(), v)) {
            bad_owner = c;
            break;
          }
        }
      }
    }
    if (bad_owner < 0) break;
    // Drop the offending triangle and keep the component containing t0.
    mark_[bad_owner] = 0;
    const int next = ++stamp_;
    std::vector<int> keep{t0};
    mark_[t0] = next;
    for (std::size_t i = 0; i < keep.size(); ++i) {
      for (int n : tris_[keep[i]].nb) {
        if (n >= 0 && mark_[n] == cur) {
          mark_[n] = next;
          keep.push_back(n);
        }
      }
    }
    cav.swap(keep);
    cur = next;
  }

  // Fan from p.
  created_.clear();
  std::vector<std::pair<int, int>> by_first, by_second;
  for (const Edge& e : edges) {
    const int t = new_tri(e.a, e.b, pi);
    created_.push_back(t);
    tris_[t].nb[2] = e.outer;
    if (e.outer >= 0) {
      Tri& o = tris_[e.outer];
      for (int k = 0; k < 3; ++k) {
        if (o.nb[k] == e.owner) o.nb[k] = t;
      }
    }
    by_first.push_back({e.a, t});
    by_second.push_back({e.b, t});
    vtri_[e.a] = t;
    vtri_[e.b] = t;
  }
  for (int c : cav) {
    tris_[c].alive = false;
    free_.push_back(c);
  }
  for (int t : created_) {
    Tri& tr = tris_[t];
    // Across edge (b, p): the new triangle starting at b.
    for (auto [v, u] : by_first) {
      if (v == tr.v[1]) tr.nb[0] = u;
    }
    // Across edge (p, a): the new triangle ending at a.
    for (auto [v, u] : by_second) {
      if (v == tr.v[0]) tr.nb[1] = u;
    }
  }
  vtri_[pi] = created_.front();
  last_ = created_.front();
  return pi;
}

void Builder::around(int v, std::vector<int>& out) const {
  out.clear();
  const int t0 = vtri_[v];
  if (t0 < 0) return;
  auto local = [&](int t) {
    int i = 0;
    while (tris_[t].v[i] != v) ++i;
    return i;
  };
  int t = t0;
  bool closed = false;
  for (std::size_t guard = 0; guard < 100000; ++guard) {
    out.push_back(t);
    const int next = tris_[t].nb[(local(t) + 1) % 3];
    if (next < 0) break;
    if (next == t0) {
      closed = true;
      break;
    }
    t = next;
  }
  if (closed) return;
  t = t0;
  for (std::size_t guard = 0; guard < 100000; ++guard) {
    const int prev = tris_[t].nb[(local(t) + 2) % 3];
    if (prev < 0) break;
    out.push_back(prev);
    t = prev;
  }
}

int Builder::find_edge(int a, int b, int* opposite_local) const {
  std::vector<int> fan;
  around(a, fan);
  for (int t : fan) {
    const Tri& tr = tris_[t];
    for (int i = 0; i < 3; ++i) {
      if (tr.v[i] != a) continue;
      if (tr.v[(i + 1) % 3] == b) {
        if (opposite_local) *opposite_local = (i + 2) % 3;
        return t;
      }
      if (tr.v[(i + 2) % 3] == b) {
        if (opposite_local) *opposite_local = (i + 1) % 3;
        return t;
      }
    }
  }
  return -1;
}

bool Builder::segment_encroached(const Segment& s) const {
  int k = 0;
  const int t = find_edge(s.a, s.b, &k);
  if (t < 0) return true;
  const Vec2 a = pts_[s.a], b = pts_[s.b];
  const Tri& tr = tris_[t];
  if (in_diametral(a, b, pts_[tr.v[k]])) return true;
  const int n = tr.nb[k];
  if (n >= 0) {
    for (int v : tris_[n].v) {
      if (v != s.a && v != s.b && in_diametral(a, b, pts_[v])) return true;
    }
  }
  return false;
}

Vec2 Builder::split_point(const Segment& s) const {
  const Vec2 a = pts_[s.a], b = pts_[s.b];
  const bool ca = is_corner_[s.a], cb = is_corner_[s.b];
  if (ca == cb) return 0.5 * (a + b);
  // Concentric shells around a corner vertex: split at a power-of-two distance.
  const Vec2 o = ca ? a : b;
  const Vec2 far = ca ? b : a;
  const double len = norm(far - o);
  const double d = std::exp2(std::round(std::log2(0.5 * len / scale_))) * scale_;
  const double t = std::clamp(d / len, 0.3, 0.7);
  return o + t * (far - o);
}

void Builder::split_segment(std::size_t si) {
  const Segment s = segs_[si];
  const int m = insert(split_point(s));
  if (m == s.a || m == s.b) throw MeshError("segment split collapsed onto an end point");
  seg_alive_[si] = false;
  Segment s1 = s, s2 = s;
  s1.b = m;
  s2.a = m;
  segs_.push_back(s1);
  seg_alive_.push_back(true);
  segs_.push_back(s2);
  seg_alive_.push_back(true);
  seg_queue_.push_back(segs_.size() - 2);
  seg_queue_.push_back(segs_.size() - 1);
  // The new point may encroach other segments.
  const Vec2 p = pts_[m];
  for (std::size_t j = 0; j + 2 < segs_.size(); ++j) {
    if (seg_alive_[j] && in_diametral(pts_[segs_[j].a], pts_[segs_[j].b], p)) {
      seg_queue_.push_back(j);
    }
  }
}

void Builder::recover_segments() {
  while (!seg_queue_.empty()) {
    const std::size_t si = seg_queue_.front();
    seg_queue_.pop_front();
    if (!seg_alive_[si]) continue;
    const Segment& s = segs_[si];
    if (!segment_encroached(s)) continue;
    if (s.splittable) {
      split_segment(si);
    } else if (find_edge(s.a, s.b, nullptr) < 0) {
      std::ostringstream msg;
      msg << "fixed boundary segment (" << pts_[s.a].x << "," << pts_[s.a].y << ")-("
          << pts_[s.b].x << "," << pts_[s.b].y << ") tag " << s.tag
          << " is not recoverable; a nearby point encroaches it";
      throw MeshError(msg.str());
    }
    if (pts_.size() > opts_.max_points) throw MeshError("segment recovery exceeded point budget");
  }
}

bool Builder::in_domain_tri(int t) const {
  const Tri& tr = tris_[t];
  for (int v : tr.v) {
    if (v < 3) return false;  // super-triangle vertex
  }
  const Vec2 c = (1.0 / 3.0) * (pts_[tr.v[0]] + pts_[tr.v[1]] + pts_[tr.v[2]]);
  return pslg_.inside(c);
}

void Builder::refine() {
  const double min_angle = opts_.min_angle_deg * std::numbers::pi / 180.0;
  const double ratio_bound = 1.0 / (2.0 * std::sin(min_angle));
  std::deque<int> queue;
  for (int t = 0; t < static_cast<int>(tris_.size()); ++t) {
    if (tris_[t].alive) queue.push_back(t);
  }
  std::vector<int> fan;
  while (!queue.empty()) {
    const int t = queue.front();
    queue.pop_front();
    if (!tris_[t].alive || !in_domain_tri(t)) continue;
    const Tri& tr = tris_[t];
    const Vec2 a = pts_[tr.v[0]], b = pts_[tr.v[1]], c = pts_[tr.v[2]];
    const double la = norm(b - c), lb = norm(c - a), lc = norm(a - b);
    const double area = 0.5 * std::abs(cross(b - a, c - a));
    const double circ_r = la * lb * lc / (4.0 * area);
    const double lmin = std::min({la, lb, lc});
    // Smallest angle sits opposite the shortest edge.
    const int at = (lmin == la) ? 0 : (lmin == lb ? 1 : 2);
    const bool exempt = is_corner_[tr.v[at]];
    const Vec2 cen = (1.0 / 3.0) * (a + b + c);
    const bool poor = !exempt && circ_r / lmin > ratio_bound;
    const bool big = circ_r > opts_.size(cen) / std::sqrt(3.0) * 1.05;
    if (!poor && !big) continue;

    const Vec2 cc = circumcenter(a, b, c);
    std::vector<std::size_t> enc;
    bool fixed_hit = false;
    for (std::size_t j = 0; j < segs_.size(); ++j) {
      if (!seg_alive_[j]) continue;
      if (in_diametral(pts_[segs_[j].a], pts_[segs_[j].b], cc)) {
        if (segs_[j].splittable) {
          enc.push_back(j);
        } else {
          fixed_hit = true;
        }
      }
    }
    if (!enc.empty()) {
      for (std::size_t j : enc) {
        if (seg_alive_[j]) split_segment(j);
      }
      recover_segments();
      queue.push_back(t);
      for (int s : created_) queue.push_back(s);
    } else if (fixed_hit || !pslg_.inside(cc)) {
      ++skipped_;
      continue;
    } else {
      insert(cc);
      recover_segments();
      for (int s : created_) queue.push_back(s);
      queue.push_back(t);
    }
    if (pts_.size() > opts_.max_points) {
      std::ostringstream msg;
      msg << "refinement exceeded " << opts_.max_points << " points near (" << cen.x << ", "
          << cen.y << "); a small input angle is probably not declared as a corner";
      throw MeshError(msg.str());
    }
  }
}

Triangulation Builder::run() {
  const auto& in = pslg_.points;
  if (in.size() < 3) throw MeshError("need at least three points");
  double xmin = in[0].x, xmax = in[0].x, ymin = in[0].y, ymax = in[0].y;
  for (Vec2 p : in) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  scale_ = std::max(xmax - xmin, ymax - ymin);
  const Vec2 mid{0.5 * (xmin + xmax), 0.5 * (ymin + ymax)};
  const double big = 50.0 * scale_;
  pts_ = {mid + Vec2{-big, -big}, mid + Vec2{big, -big}, mid + Vec2{0.0, big}};
  vtri_ = {0, 0, 0};
  new_tri(0, 1, 2);
  last_ = 0;

  std::vector<int> index(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    index[i] = insert(in[i]);
    if (index[i] != static_cast<int>(pts_.size()) - 1 && index[i] < 3) {
      throw MeshError("input point coincides with the bounding triangle");
    }
  }
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (index[i] != static_cast<int>(i) + 3) throw MeshError("duplicate input points");
  }
  is_corner_.assign(pts_.size(), 0);
  for (int c : pslg_.corners) is_corner_.at(static_cast<std::size_t>(c + 3)) = 1;

  for (const Segment& s : pslg_.segments) {
    Segment t = s;
    t.a += 3;
    t.b += 3;
    segs_.push_back(t);
    seg_alive_.push_back(true);
    seg_queue_.push_back(segs_.size() - 1);
  }
  recover_segments();
  refine();

  // Final conformity check of every segment.
  for (std::size_t j = 0; j < segs_.size(); ++j) {
    if (seg_alive_[j] && find_edge(segs_[j].a, segs_[j].b, nullptr) < 0) {
      throw MeshError("constraint segment missing after refinement");
    }
  }

  Triangulation out;
  out.points.assign(pts_.begin() + 3, pts_.end());
  for (int t = 0; t < static_cast<int>(tris_.size()); ++t) {
    if (!tris_[t].alive || !in_domain_tri(t)) continue;
    const auto& v = tris_[t].v;
    out.tris.push_back({v[0] - 3, v[1] - 3, v[2] - 3});
  }
  for (std::size_t j = 0; j < segs_.size(); ++j) {
    if (!seg_alive_[j]) continue;
    Segment s = segs_[j];
    s.a -= 3;
    s.b -= 3;
    out.segments.push_back(s);
  }
  out.skipped = skipped_;
  return out;
}

}  // namespace

Triangulation triangulate(const Pslg& pslg, const RefineOptions& opts) {
  if (!pslg.inside) throw MeshError("PSLG needs a domain predicate");
  if (!opts.size) throw MeshError("refinement needs a size function");
  Builder b(pslg, opts);
  return b.run();
}

}  // namespace cpml::detail
