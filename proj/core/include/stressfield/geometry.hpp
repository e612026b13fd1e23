#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace stressfield {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

/// Edge Ei joins base vertices i and i+1 (mod 5). Stored as bit i-1 of a
/// label mask so corner nodes can carry two labels.
enum class EdgeLabel : std::uint8_t { E1 = 0, E2, E3, E4, E5 };

using LabelMask = std::uint8_t;

constexpr LabelMask label_bit(EdgeLabel e) {
  return static_cast<LabelMask>(1u << static_cast<unsigned>(e));
}

inline constexpr int kPentagonVertices = 5;

struct Polygon {
  std::array<Point2, kPentagonVertices> vertices{};
  int index = 1;
};

/// Ranges for the perturbed-pentagon family. Each base coordinate receives an
/// independent uniform offset in [-jitter, +jitter]; draws that violate the
/// polygon invariants are rejected and redrawn.
struct PerturbationConfig {
  std::array<Point2, kPentagonVertices> base{{
      {0.0, 0.0}, {0.45, 0.0}, {0.45, 0.30}, {0.225, 0.45}, {0.0, 0.35}}};
  double jitter = 0.06;
  double bbox_min = 0.30;
  double bbox_max = 0.60;
  int max_attempts = 64;
};

struct Mesh {
  std::vector<Point2> nodes;
  std::vector<std::array<int, 3>> triangles;
  // One mask per node; zero for interior nodes.
  std::vector<LabelMask> edge_labels;

  std::size_t num_nodes() const { return nodes.size(); }
  std::size_t num_triangles() const { return triangles.size(); }

  friend bool operator==(const Mesh&, const Mesh&) = default;
};

struct MeshingOptions {
  // Triangles below this angle are refined; output is checked against
  // min_angle_deg.
  double refine_angle_deg = 22.0;
  double min_angle_deg = 20.0;
  int min_nodes = 100;
  int max_nodes = 20000;
  // When a mesh has fewer than min_nodes, the edge length is scaled by this
  // factor and meshing retried.
  double retry_shrink = 0.8;
  int max_retries = 4;
};

// --- polygon helpers -------------------------------------------------------

double signed_area(std::span<const Point2> outline);
double triangle_signed_area(const Point2& a, const Point2& b, const Point2& c);
bool is_simple(std::span<const Point2> outline);
bool point_in_polygon(std::span<const Point2> outline, const Point2& p);
double distance_to_segment(const Point2& p, const Point2& a, const Point2& b);

/// Throws GeometryError naming the first violated Polygon invariant.
void validate_polygon(const Polygon& polygon, const PerturbationConfig& config = {});

/// Deterministic member `index` of the pentagon family.
Polygon sample_polygon(int index, std::uint64_t rng_seed,
                       const PerturbationConfig& config = {});

/// Conforming Delaunay refinement of an arbitrary simple CCW outline.
Mesh triangulate_outline(std::span<const Point2> outline, double target_edge_length,
                         const MeshingOptions& options = {});

Mesh triangulate(const Polygon& polygon, double target_edge_length = 0.03,
                 const MeshingOptions& options = {});

/// Labels every boundary node with the outline edge(s) it lies on. Edge k of
/// the outline joins vertices k and k+1; at most 8 edges.
Mesh tag_edges(Mesh mesh, std::span<const Point2> outline, double tolerance = 1e-9);
Mesh tag_edges(Mesh mesh, const Polygon& polygon, double tolerance = 1e-9);

// --- mesh queries ------------------------------------------------------------

/// Undirected edges used by exactly one triangle, as (a, b) in triangle order.
std::vector<std::array<int, 2>> boundary_edges(const Mesh& mesh);
std::vector<int> boundary_nodes(const Mesh& mesh);
double mesh_area(const Mesh& mesh);
double min_triangle_angle_deg(const Mesh& mesh);
/// Median length over unique mesh edges.
double median_edge_length(const Mesh& mesh);
/// One third of the adjacent triangle areas per node.
std::vector<double> tributary_areas(const Mesh& mesh);

/// Plain-text node/element export: header `N K`, N lines `x y mask`, K lines
/// `i j k` (0-based).
void write_mesh_text(std::ostream& out, const Mesh& mesh);
Mesh read_mesh_text(std::istream& in);

}  // namespace stressfield
