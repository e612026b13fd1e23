#include "stressfield/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "stressfield/errors.hpp"
#include "stressfield/rng.hpp"

namespace stressfield {

namespace {

double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool on_segment(const Point2& p, const Point2& a, const Point2& b) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
         std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

bool segments_intersect(const Point2& p1, const Point2& p2, const Point2& q1,
                        const Point2& q2) {
  const double d1 = cross(q1, q2, p1);
  const double d2 = cross(q1, q2, p2);
  const double d3 = cross(p1, p2, q1);
  const double d4 = cross(p1, p2, q2);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
      ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  if (d1 == 0 && on_segment(p1, q1, q2)) return true;
  if (d2 == 0 && on_segment(p2, q1, q2)) return true;
  if (d3 == 0 && on_segment(q1, p1, p2)) return true;
  if (d4 == 0 && on_segment(q2, p1, p2)) return true;
  return false;
}

std::uint64_t edge_key(int a, int b) {
  const auto lo = static_cast<std::uint64_t>(std::min(a, b));
  const auto hi = static_cast<std::uint64_t>(std::max(a, b));
  return (hi << 32) | lo;
}

}  // namespace

double triangle_signed_area(const Point2& a, const Point2& b, const Point2& c) {
  return 0.5 * cross(a, b, c);
}

double signed_area(std::span<const Point2> outline) {
  double twice = 0.0;
  const std::size_t n = outline.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& p = outline[i];
    const Point2& q = outline[(i + 1) % n];
    twice += p.x * q.y - q.x * p.y;
  }
  return 0.5 * twice;
}

bool is_simple(std::span<const Point2> outline) {
  const std::size_t n = outline.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& a = outline[i];
    const Point2& b = outline[(i + 1) % n];
    if (a == b) return false;
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      const Point2& c = outline[j];
      const Point2& d = outline[(j + 1) % n];
      if (adjacent) {
        // Adjacent edges share one vertex; they must not fold back onto
        // each other.
        const Point2& shared = (j == i + 1) ? b : a;
        const Point2& other_i = (j == i + 1) ? a : b;
        const Point2& other_j = (j == i + 1) ? d : c;
        if (cross(shared, other_i, other_j) == 0.0) {
          const double dot = (other_i.x - shared.x) * (other_j.x - shared.x) +
                             (other_i.y - shared.y) * (other_j.y - shared.y);
          if (dot > 0.0) return false;
        }
        continue;
      }
      if (segments_intersect(a, b, c, d)) return false;
    }
  }
  return true;
}

bool point_in_polygon(std::span<const Point2> outline, const Point2& p) {
  bool inside = false;
  const std::size_t n = outline.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point2& a = outline[i];
    const Point2& b = outline[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

double distance_to_segment(const Point2& p, const Point2& a, const Point2& b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

void validate_polygon(const Polygon& polygon, const PerturbationConfig& config) {
  const std::span<const Point2> v(polygon.vertices);
  if (!is_simple(v)) {
    throw GeometryError("polygon " + std::to_string(polygon.index) + " is not simple");
  }
  if (signed_area(v) <= 0.0) {
    throw GeometryError("polygon " + std::to_string(polygon.index) +
                        " is not counter-clockwise");
  }
  auto [xmin, xmax] = std::minmax_element(v.begin(), v.end(), [](auto& a, auto& b) {
    return a.x < b.x;
  });
  auto [ymin, ymax] = std::minmax_element(v.begin(), v.end(), [](auto& a, auto& b) {
    return a.y < b.y;
  });
  const double w = xmax->x - xmin->x;
  const double h = ymax->y - ymin->y;
  if (w < config.bbox_min || w > config.bbox_max || h < config.bbox_min ||
      h > config.bbox_max) {
    std::ostringstream msg;
    msg << "polygon " << polygon.index << " bounding box " << w << " x " << h
        << " m outside [" << config.bbox_min << ", " << config.bbox_max << "]";
    throw GeometryError(msg.str());
  }
}

Polygon sample_polygon(int index, std::uint64_t rng_seed, const PerturbationConfig& config) {
  if (index < 1) {
    throw ConfigurationError("geometry index must be >= 1, got " + std::to_string(index));
  }
  const CounterRng rng(rng_seed, static_cast<std::uint64_t>(index));
  for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
    Polygon poly;
    poly.index = index;
    for (int k = 0; k < kPentagonVertices; ++k) {
      const auto base = static_cast<std::uint64_t>(attempt) * 16 +
                        static_cast<std::uint64_t>(k) * 2;
      const double dx = rng.uniform(base, -config.jitter, config.jitter);
      const double dy = rng.uniform(base + 1, -config.jitter, config.jitter);
      poly.vertices[k] = {config.base[k].x + dx, config.base[k].y + dy};
    }
    try {
      validate_polygon(poly, config);
      return poly;
    } catch (const GeometryError&) {
      // rejected; redraw with the next attempt counter
    }
  }
  throw ConfigurationError("no valid polygon for index " + std::to_string(index) +
                           " after " + std::to_string(config.max_attempts) +
                           " attempts; perturbation ranges are degenerate");
}

Mesh tag_edges(Mesh mesh, std::span<const Point2> outline, double tolerance) {
  if (outline.size() > 8) {
    throw ContractError("tag_edges supports at most 8 outline edges");
  }
  mesh.edge_labels.assign(mesh.nodes.size(), 0);
  const std::size_t m = outline.size();
  for (int node : boundary_nodes(mesh)) {
    const Point2& p = mesh.nodes[node];
    LabelMask mask = 0;
    for (std::size_t e = 0; e < m; ++e) {
      if (distance_to_segment(p, outline[e], outline[(e + 1) % m]) <= tolerance) {
        mask |= static_cast<LabelMask>(1u << e);
      }
    }
    if (mask == 0) {
      std::ostringstream msg;
      msg << "boundary node " << node << " at (" << p.x << ", " << p.y
          << ") is farther than " << tolerance << " m from every outline edge";
      throw ConsistencyError(msg.str());
    }
    mesh.edge_labels[node] = mask;
  }
  return mesh;
}

Mesh tag_edges(Mesh mesh, const Polygon& polygon, double tolerance) {
  return tag_edges(std::move(mesh), std::span<const Point2>(polygon.vertices), tolerance);
}

std::vector<std::array<int, 2>> boundary_edges(const Mesh& mesh) {
  std::map<std::uint64_t, std::pair<int, std::array<int, 2>>> count;
  for (const auto& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      const int a = t[k];
      const int b = t[(k + 1) % 3];
      auto& entry = count[edge_key(a, b)];
      ++entry.first;
      entry.second = {a, b};
    }
  }
  std::vector<std::array<int, 2>> out;
  for (const auto& [key, entry] : count) {
    if (entry.first == 1) out.push_back(entry.second);
  }
  return out;
}

std::vector<int> boundary_nodes(const Mesh& mesh) {
  std::vector<char> flag(mesh.nodes.size(), 0);
  for (const auto& e : boundary_edges(mesh)) {
    flag[e[0]] = 1;
    flag[e[1]] = 1;
  }
  std::vector<int> out;
  for (std::size_t i = 0; i < flag.size(); ++i) {
    if (flag[i]) out.push_back(static_cast<int>(i));
  }
  return out;
}

double mesh_area(const Mesh& mesh) {
  double sum = 0.0;
  for (const auto& t : mesh.triangles) {
    sum += triangle_signed_area(mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]);
  }
  return sum;
}

double min_triangle_angle_deg(const Mesh& mesh) {
  double worst = 180.0;
  for (const auto& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      const Point2& o = mesh.nodes[t[k]];
      const Point2& a = mesh.nodes[t[(k + 1) % 3]];
      const Point2& b = mesh.nodes[t[(k + 2) % 3]];
      const double ux = a.x - o.x, uy = a.y - o.y;
      const double vx = b.x - o.x, vy = b.y - o.y;
      const double ang = std::atan2(std::abs(ux * vy - uy * vx), ux * vx + uy * vy);
      worst = std::min(worst, ang * 180.0 / std::numbers::pi);
    }
  }
  return worst;
}

double median_edge_length(const Mesh& mesh) {
  std::map<std::uint64_t, double> lengths;
  for (const auto& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      const Point2& a = mesh.nodes[t[k]];
      const Point2& b = mesh.nodes[t[(k + 1) % 3]];
      lengths.emplace(edge_key(t[k], t[(k + 1) % 3]), std::hypot(a.x - b.x, a.y - b.y));
    }
  }
  if (lengths.empty()) throw ContractError("median_edge_length of an empty mesh");
  std::vector<double> v;
  v.reserve(lengths.size());
  for (const auto& [k, len] : lengths) v.push_back(len);
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

std::vector<double> tributary_areas(const Mesh& mesh) {
  std::vector<double> area(mesh.nodes.size(), 0.0);
  for (const auto& t : mesh.triangles) {
    const double a =
        triangle_signed_area(mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]) / 3.0;
    for (int k = 0; k < 3; ++k) area[t[k]] += a;
  }
  return area;
}

void write_mesh_text(std::ostream& out, const Mesh& mesh) {
  out << mesh.nodes.size() << ' ' << mesh.triangles.size() << '\n';
  out << std::setprecision(17);
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
    const unsigned mask = i < mesh.edge_labels.size() ? mesh.edge_labels[i] : 0u;
    out << mesh.nodes[i].x << ' ' << mesh.nodes[i].y << ' ' << mask << '\n';
  }
  for (const auto& t : mesh.triangles) {
    out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  }
}

Mesh read_mesh_text(std::istream& in) {
  std::size_t n = 0, k = 0;
  if (!(in >> n >> k)) throw FormatError("mesh text: missing `N K` header");
  Mesh mesh;
  mesh.nodes.resize(n);
  mesh.edge_labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    unsigned mask = 0;
    if (!(in >> mesh.nodes[i].x >> mesh.nodes[i].y >> mask) || mask > 0xFF) {
      throw FormatError("mesh text: bad node line " + std::to_string(i));
    }
    mesh.edge_labels[i] = static_cast<LabelMask>(mask);
  }
  mesh.triangles.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    auto& t = mesh.triangles[i];
    if (!(in >> t[0] >> t[1] >> t[2])) {
      throw FormatError("mesh text: bad triangle line " + std::to_string(i));
    }
    for (int v : t) {
      if (v < 0 || static_cast<std::size_t>(v) >= n) {
        throw FormatError("mesh text: triangle " + std::to_string(i) +
                          " references a missing node");
      }
    }
  }
  return mesh;
}

}  // namespace stressfield
