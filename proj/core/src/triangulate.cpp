// Conforming Delaunay refinement (Ruppert) on top of Bowyer-Watson insertion.
//
// Boundary segments are kept conforming by splitting any subsegment whose
// diametral circle contains a vertex; once no subsegment is encroached every
// subsegment is a Delaunay edge, so the domain is recovered by dropping
// triangles whose centroid lies outside the outline.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <unordered_map>
#include <vector>

#include "stressfield/errors.hpp"
#include "stressfield/geometry.hpp"

namespace stressfield {

namespace {

struct Tri {
  std::array<int, 3> v;
  bool alive = true;
};

double orient(const Point2& a, const Point2& b, const Point2& c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

// > 0 when p lies strictly inside the circumcircle of CCW triangle abc.
double incircle(const Point2& a, const Point2& b, const Point2& c, const Point2& p) {
  const double adx = a.x - p.x, ady = a.y - p.y;
  const double bdx = b.x - p.x, bdy = b.y - p.y;
  const double cdx = c.x - p.x, cdy = c.y - p.y;
  const double ad = adx * adx + ady * ady;
  const double bd = bdx * bdx + bdy * bdy;
  const double cd = cdx * cdx + cdy * cdy;
  return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) +
         ad * (bdx * cdy - bdy * cdx);
}

Point2 circumcenter(const Point2& a, const Point2& b, const Point2& c) {
  const double bx = b.x - a.x, by = b.y - a.y;
  const double cx = c.x - a.x, cy = c.y - a.y;
  const double d = 2.0 * (bx * cy - by * cx);
  const double b2 = bx * bx + by * by;
  const double c2 = cx * cx + cy * cy;
  return {a.x + (cy * b2 - by * c2) / d, a.y + (bx * c2 - cx * b2) / d};
}

std::uint64_t directed(int a, int b) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

double dist2(const Point2& a, const Point2& b) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  return dx * dx + dy * dy;
}

class Refiner {
 public:
  Refiner(std::span<const Point2> outline, double h, const MeshingOptions& opt)
      : outline_(outline.begin(), outline.end()), h_(h), opt_(opt) {
    double xmin = outline[0].x, xmax = xmin, ymin = outline[0].y, ymax = ymin;
    for (const auto& p : outline) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
    const double size = std::max(xmax - xmin, ymax - ymin);
    const double cx = 0.5 * (xmin + xmax), cy = 0.5 * (ymin + ymax);
    pts_.push_back({cx - 20.0 * size, cy - 20.0 * size});
    pts_.push_back({cx + 20.0 * size, cy - 20.0 * size});
    pts_.push_back({cx, cy + 20.0 * size});
    add_triangle(0, 1, 2);
    scale2_ = size * size;
  }

  Mesh run() {
    seed_boundary();
    const double refine_sin = std::sin(opt_.refine_angle_deg * std::numbers::pi / 180.0);
    for (;;) {
      if (split_one_encroached()) continue;
      const int bad = worst_triangle(refine_sin);
      if (bad < 0) break;
      const auto& t = tris_[bad].v;
      const Point2 c = circumcenter(pts_[t[0]], pts_[t[1]], pts_[t[2]]);
      const int seg = first_encroached_by(c);
      if (seg >= 0) {
        split_segment(seg);
      } else if (!point_in_polygon(outline_, c)) {
        split_segment(nearest_segment(c));
      } else {
        insert(c);
      }
    }
    return extract();
  }

 private:
  void check_budget() const {
    if (static_cast<int>(pts_.size()) - 3 > opt_.max_nodes) {
      throw GeometryError("mesh refinement exceeded " + std::to_string(opt_.max_nodes) +
                          " nodes; outline likely has a sharp corner");
    }
  }

  void add_triangle(int a, int b, int c) {
    const int id = static_cast<int>(tris_.size());
    tris_.push_back({{a, b, c}, true});
    owner_[directed(a, b)] = id;
    owner_[directed(b, c)] = id;
    owner_[directed(c, a)] = id;
  }

  void kill_triangle(int id) {
    Tri& t = tris_[id];
    t.alive = false;
    for (int k = 0; k < 3; ++k) {
      auto it = owner_.find(directed(t.v[k], t.v[(k + 1) % 3]));
      if (it != owner_.end() && it->second == id) owner_.erase(it);
    }
  }

  int locate(const Point2& p) const {
    int best = -1;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < static_cast<int>(tris_.size()); ++i) {
      const Tri& t = tris_[i];
      if (!t.alive) continue;
      const Point2& a = pts_[t.v[0]];
      const Point2& b = pts_[t.v[1]];
      const Point2& c = pts_[t.v[2]];
      const double score = std::min({orient(a, b, p), orient(b, c, p), orient(c, a, p)});
      if (score >= 0.0) return i;
      if (score > best_score) {
        best_score = score;
        best = i;
      }
    }
    return best;
  }

  int insert(const Point2& p) {
    check_budget();
    const int seed = locate(p);
    const int pid = static_cast<int>(pts_.size());
    pts_.push_back(p);

    std::vector<int> cavity{seed};
    std::vector<char> in_cavity(tris_.size(), 0);
    in_cavity[seed] = 1;
    std::vector<std::array<int, 2>> rim;
    for (std::size_t k = 0; k < cavity.size(); ++k) {
      const auto v = tris_[cavity[k]].v;
      for (int e = 0; e < 3; ++e) {
        const int a = v[e], b = v[(e + 1) % 3];
        auto it = owner_.find(directed(b, a));
        if (it != owner_.end()) {
          const int nb = it->second;
          if (in_cavity[nb]) continue;
          const auto& w = tris_[nb].v;
          if (incircle(pts_[w[0]], pts_[w[1]], pts_[w[2]], p) > 0.0) {
            in_cavity[nb] = 1;
            cavity.push_back(nb);
            continue;
          }
        }
        rim.push_back({a, b});
      }
    }
    // A rim edge is shared with a cavity triangle when the neighbor joined
    // the cavity after the edge was recorded; drop those.
    std::erase_if(rim, [&](const std::array<int, 2>& e) {
      auto it = owner_.find(directed(e[1], e[0]));
      return it != owner_.end() && in_cavity[it->second];
    });
    for (int id : cavity) kill_triangle(id);
    for (const auto& e : rim) {
      if (orient(pts_[e[0]], pts_[e[1]], p) <= 0.0) {
        throw GeometryError("degenerate cavity during point insertion");
      }
      add_triangle(e[0], e[1], pid);
    }
    return pid;
  }

  void seed_boundary() {
    const std::size_t m = outline_.size();
    std::vector<int> corner(m);
    for (std::size_t i = 0; i < m; ++i) corner[i] = insert(outline_[i]);
    for (std::size_t i = 0; i < m; ++i) {
      const Point2& a = outline_[i];
      const Point2& b = outline_[(i + 1) % m];
      const double len = std::sqrt(dist2(a, b));
      const int pieces = std::max(1, static_cast<int>(std::ceil(len / h_ - 1e-9)));
      int prev = corner[i];
      for (int k = 1; k < pieces; ++k) {
        const double t = static_cast<double>(k) / pieces;
        const int id = insert({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
        segments_.push_back({prev, id});
        prev = id;
      }
      segments_.push_back({prev, corner[(i + 1) % m]});
    }
  }

  bool encroaches(const Point2& p, const std::array<int, 2>& s) const {
    const Point2& a = pts_[s[0]];
    const Point2& b = pts_[s[1]];
    const double dot = (a.x - p.x) * (b.x - p.x) + (a.y - p.y) * (b.y - p.y);
    return dot < -1e-14 * scale2_;
  }

  bool split_one_encroached() {
    for (std::size_t s = 0; s < segments_.size(); ++s) {
      for (int v = 3; v < static_cast<int>(pts_.size()); ++v) {
        if (v == segments_[s][0] || v == segments_[s][1]) continue;
        if (encroaches(pts_[v], segments_[s])) {
          split_segment(static_cast<int>(s));
          return true;
        }
      }
    }
    return false;
  }

  int first_encroached_by(const Point2& p) const {
    for (std::size_t s = 0; s < segments_.size(); ++s) {
      if (encroaches(p, segments_[s])) return static_cast<int>(s);
    }
    return -1;
  }

  int nearest_segment(const Point2& p) const {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < segments_.size(); ++s) {
      const double d = distance_to_segment(p, pts_[segments_[s][0]], pts_[segments_[s][1]]);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(s);
      }
    }
    return best;
  }

  void split_segment(int s) {
    const auto seg = segments_[s];
    const Point2& a = pts_[seg[0]];
    const Point2& b = pts_[seg[1]];
    const int mid = insert({0.5 * (a.x + b.x), 0.5 * (a.y + b.y)});
    segments_[s] = {seg[0], mid};
    segments_.insert(segments_.begin() + s + 1, {mid, seg[1]});
  }

  bool inside_domain(const Tri& t) const {
    if (t.v[0] < 3 || t.v[1] < 3 || t.v[2] < 3) return false;
    const Point2& a = pts_[t.v[0]];
    const Point2& b = pts_[t.v[1]];
    const Point2& c = pts_[t.v[2]];
    return point_in_polygon(outline_, {(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0});
  }

  // Returns the bad triangle with the largest circumradius, or -1.
  int worst_triangle(double refine_sin) const {
    int worst = -1;
    double worst_r2 = 0.0;
    // Splitting at 1.5 h leaves the median edge length close to h.
    const double h2 = 2.25 * h_ * h_;
    for (int i = 0; i < static_cast<int>(tris_.size()); ++i) {
      const Tri& t = tris_[i];
      if (!t.alive || !inside_domain(t)) continue;
      const Point2& a = pts_[t.v[0]];
      const Point2& b = pts_[t.v[1]];
      const Point2& c = pts_[t.v[2]];
      const double la = dist2(b, c), lb = dist2(c, a), lc = dist2(a, b);
      const double lmax = std::max({la, lb, lc});
      const double lmin = std::min({la, lb, lc});
      const double area2 = orient(a, b, c);
      // sin(min angle) = 2A / (product of the two edges adjacent to it)
      // = area2 / sqrt(product of the two longest squared edges).
      const double others = la * lb * lc / lmin;
      const double sin_min = area2 / std::sqrt(others);
      const bool bad = lmax > h2 || sin_min < refine_sin;
      if (!bad) continue;
      const double r2 = la * lb * lc / (area2 * area2);
      if (r2 > worst_r2) {
        worst_r2 = r2;
        worst = i;
      }
    }
    return worst;
  }

  Mesh extract() const {
    Mesh mesh;
    std::vector<int> remap(pts_.size(), -1);
    for (int v = 3; v < static_cast<int>(pts_.size()); ++v) {
      remap[v] = static_cast<int>(mesh.nodes.size());
      mesh.nodes.push_back(pts_[v]);
    }
    for (const Tri& t : tris_) {
      if (!t.alive || !inside_domain(t)) continue;
      mesh.triangles.push_back({remap[t.v[0]], remap[t.v[1]], remap[t.v[2]]});
    }
    mesh.edge_labels.assign(mesh.nodes.size(), 0);
    return mesh;
  }

  std::vector<Point2> outline_;
  double h_;
  MeshingOptions opt_;
  double scale2_ = 1.0;
  std::vector<Point2> pts_;
  std::vector<Tri> tris_;
  std::unordered_map<std::uint64_t, int> owner_;
  std::vector<std::array<int, 2>> segments_;
};

}  // namespace

Mesh triangulate_outline(std::span<const Point2> outline, double target_edge_length,
                         const MeshingOptions& options) {
  if (!(target_edge_length > 0.0)) {
    throw GeometryError("target edge length must be positive");
  }
  if (!is_simple(outline) || signed_area(outline) <= 0.0) {
    throw GeometryError("outline must be simple and counter-clockwise");
  }
  double h = target_edge_length;
  for (int attempt = 0;; ++attempt) {
    Mesh mesh = Refiner(outline, h, options).run();
    if (static_cast<int>(mesh.num_nodes()) >= options.min_nodes) {
      const double angle = min_triangle_angle_deg(mesh);
      if (angle < options.min_angle_deg) {
        std::ostringstream msg;
        msg << "mesh quality bound violated: min angle " << angle << " deg";
        throw GeometryError(msg.str());
      }
      return mesh;
    }
    if (attempt >= options.max_retries) {
      throw GeometryError("mesh has " + std::to_string(mesh.num_nodes()) +
                          " nodes after refinement retries; need at least " +
                          std::to_string(options.min_nodes));
    }
    h *= options.retry_shrink;
  }
}

Mesh triangulate(const Polygon& polygon, double target_edge_length,
                 const MeshingOptions& options) {
  const std::span<const Point2> outline(polygon.vertices);
  return tag_edges(triangulate_outline(outline, target_edge_length, options), outline);
}

}  // namespace stressfield
