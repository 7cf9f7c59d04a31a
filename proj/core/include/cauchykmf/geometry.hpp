#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kmf {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

enum class SegmentRole { CauchyData, Reconstruction, Auxiliary };

struct SegmentTag {
  std::string name;
  SegmentRole role = SegmentRole::Auxiliary;
};

// One tagged piece of the mesh boundary. Nodes are ordered monotonically by
// arclength (accumulated edge length from the first node). Open segments
// include both junction nodes shared with the adjacent segments; closed
// segments (full circles) list the start node once, at parameter 0.
struct BoundarySegment {
  SegmentTag tag;
  std::vector<int> nodes;
  std::vector<double> arclength;
  bool closed = false;
};

struct BoundaryEdge {
  int a = -1;
  int b = -1;
  int segment = -1;  // index into Mesh::segments
};

// Conforming triangulation with tagged boundary segments. Immutable after
// construction; safe to share across threads.
struct Mesh {
  std::vector<Point2> nodes;
  std::vector<std::array<int, 3>> triangles;
  std::vector<BoundaryEdge> boundary_edges;
  std::vector<BoundarySegment> segments;

  int segment_index(std::string_view tag_name) const;            // -1 if absent
  const BoundarySegment& segment(std::string_view tag_name) const;  // throws NotFoundError
  double triangle_area(int t) const;
  double total_area() const;
};

// Structured triangulation of [x0,x1] x [y0,y1] with nx*ny cells, each split
// along the lower-left/upper-right diagonal. Tags order: bottom, top, left,
// right. Bottom/top segments are ordered by increasing x, left/right by
// increasing y.
Mesh build_rect_mesh(int nx, int ny,
                     std::pair<double, double> x_range,
                     std::pair<double, double> y_range,
                     const std::array<SegmentTag, 4>& tags);

// Optional split of the outer circle of an annulus into two arcs. The `inside`
// arc covers theta in (theta_lo, theta_hi) with 0 <= theta_lo < theta_hi <=
// 2*pi; `outside` is the complementary arc (it may wrap through theta = 0).
// Both angles must coincide with angular grid lines.
struct OuterArcSplit {
  double theta_lo = 0.0;
  double theta_hi = 0.0;
  SegmentTag inside;
  SegmentTag outside;
};

// Structured polar grid on the annulus r_inner < r < r_outer, periodic in
// theta (ntheta angular columns, first and last identified). Circles are
// polygonal; radii are not corrected for polygon inscribing. Circle segments
// are ordered by increasing theta starting at theta = 0.
Mesh build_annulus_mesh(int nr, int ntheta, double r_inner, double r_outer,
                        const SegmentTag& inner, const SegmentTag& outer,
                        const std::optional<OuterArcSplit>& split = std::nullopt);

// Ordered nodes of one tagged segment with their arclength coordinates.
const BoundarySegment& boundary_nodes(const Mesh& mesh, std::string_view tag_name);

// Plain-text mesh dump: node table (id, x, y), triangle table, edge-tag table.
std::string dump_mesh(const Mesh& mesh);

}  // namespace kmf
