#include "cauchykmf/geometry.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "cauchykmf/errors.hpp"

namespace kmf {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double dist(const Point2& a, const Point2& b) {
  return std::hypot(b.x - a.x, b.y - a.y);
}

// Fills arclength with accumulated edge lengths along the node list.
void accumulate_arclength(const Mesh& mesh, BoundarySegment& seg) {
  seg.arclength.resize(seg.nodes.size());
  double s = 0.0;
  for (std::size_t i = 0; i < seg.nodes.size(); ++i) {
    if (i > 0) s += dist(mesh.nodes[seg.nodes[i - 1]], mesh.nodes[seg.nodes[i]]);
    seg.arclength[i] = s;
  }
}

}  // namespace

int Mesh::segment_index(std::string_view tag_name) const {
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (segments[i].tag.name == tag_name) return static_cast<int>(i);
  }
  return -1;
}

const BoundarySegment& Mesh::segment(std::string_view tag_name) const {
  const int i = segment_index(tag_name);
  if (i < 0) throw NotFoundError("unknown boundary tag: " + std::string(tag_name));
  return segments[i];
}

double Mesh::triangle_area(int t) const {
  const auto& tri = triangles[t];
  const Point2& p0 = nodes[tri[0]];
  const Point2& p1 = nodes[tri[1]];
  const Point2& p2 = nodes[tri[2]];
  return 0.5 * ((p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y));
}

double Mesh::total_area() const {
  double a = 0.0;
  for (std::size_t t = 0; t < triangles.size(); ++t)
    a += triangle_area(static_cast<int>(t));
  return a;
}

Mesh build_rect_mesh(int nx, int ny,
                     std::pair<double, double> x_range,
                     std::pair<double, double> y_range,
                     const std::array<SegmentTag, 4>& tags) {
  if (nx < 1 || ny < 1)
    throw std::invalid_argument("build_rect_mesh: cell counts must be >= 1");
  if (!(x_range.first < x_range.second) || !(y_range.first < y_range.second))
    throw std::invalid_argument("build_rect_mesh: empty coordinate range");

  Mesh m;
  const int npx = nx + 1;
  const int npy = ny + 1;
  const double hx = (x_range.second - x_range.first) / nx;
  const double hy = (y_range.second - y_range.first) / ny;

  m.nodes.reserve(static_cast<std::size_t>(npx) * npy);
  for (int j = 0; j < npy; ++j) {
    for (int i = 0; i < npx; ++i) {
      // Endpoints written exactly so boundary nodes sit on the boundary.
      const double x = (i == nx) ? x_range.second : x_range.first + i * hx;
      const double y = (j == ny) ? y_range.second : y_range.first + j * hy;
      m.nodes.push_back({x, y});
    }
  }

  auto vid = [npx](int i, int j) { return j * npx + i; };

  m.triangles.reserve(2u * nx * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int v00 = vid(i, j);
      const int v10 = vid(i + 1, j);
      const int v01 = vid(i, j + 1);
      const int v11 = vid(i + 1, j + 1);
      m.triangles.push_back({v00, v10, v11});
      m.triangles.push_back({v00, v11, v01});
    }
  }

  m.segments.resize(4);
  for (int s = 0; s < 4; ++s) m.segments[s].tag = tags[s];

  // bottom, top: ordered by increasing x; left, right: by increasing y.
  for (int i = 0; i < npx; ++i) {
    m.segments[0].nodes.push_back(vid(i, 0));
    m.segments[1].nodes.push_back(vid(i, ny));
  }
  for (int j = 0; j < npy; ++j) {
    m.segments[2].nodes.push_back(vid(0, j));
    m.segments[3].nodes.push_back(vid(nx, j));
  }
  for (auto& seg : m.segments) accumulate_arclength(m, seg);

  for (int i = 0; i < nx; ++i) {
    m.boundary_edges.push_back({vid(i, 0), vid(i + 1, 0), 0});
    m.boundary_edges.push_back({vid(i, ny), vid(i + 1, ny), 1});
  }
  for (int j = 0; j < ny; ++j) {
    m.boundary_edges.push_back({vid(0, j), vid(0, j + 1), 2});
    m.boundary_edges.push_back({vid(nx, j), vid(nx, j + 1), 3});
  }
  return m;
}

Mesh build_annulus_mesh(int nr, int ntheta, double r_inner, double r_outer,
                        const SegmentTag& inner, const SegmentTag& outer,
                        const std::optional<OuterArcSplit>& split) {
  if (nr < 1) throw std::invalid_argument("build_annulus_mesh: nr must be >= 1");
  if (ntheta < 3) throw std::invalid_argument("build_annulus_mesh: ntheta must be >= 3");
  if (!(0.0 < r_inner && r_inner < r_outer))
    throw std::invalid_argument("build_annulus_mesh: radii out of order");

  Mesh m;
  const double dr = (r_outer - r_inner) / nr;
  const double dtheta = kTwoPi / ntheta;

  m.nodes.reserve(static_cast<std::size_t>(nr + 1) * ntheta);
  for (int i = 0; i <= nr; ++i) {
    const double r = (i == nr) ? r_outer : r_inner + i * dr;
    for (int t = 0; t < ntheta; ++t) {
      const double theta = t * dtheta;
      m.nodes.push_back({r * std::cos(theta), r * std::sin(theta)});
    }
  }

  auto vid = [ntheta](int ring, int t) { return ring * ntheta + (t % ntheta); };

  m.triangles.reserve(2u * nr * ntheta);
  for (int i = 0; i < nr; ++i) {
    for (int t = 0; t < ntheta; ++t) {
      const int a = vid(i, t);
      const int b = vid(i, t + 1);
      const int c = vid(i + 1, t);
      const int d = vid(i + 1, t + 1);
      // Split along the a-d diagonal, counterclockwise orientation.
      m.triangles.push_back({a, d, b});
      m.triangles.push_back({a, c, d});
    }
  }

  // Inner circle: segment 0, closed.
  m.segments.push_back({inner, {}, {}, true});
  for (int t = 0; t < ntheta; ++t) m.segments[0].nodes.push_back(vid(0, t));

  int split_lo = -1, split_hi = -1;
  if (split) {
    auto grid_index = [&](double theta) {
      const double pos = theta / dtheta;
      const double snapped = std::round(pos);
      if (std::abs(pos - snapped) > 1e-9)
        throw std::invalid_argument(
            "build_annulus_mesh: split angle does not lie on the angular grid");
      return static_cast<int>(snapped) % ntheta;
    };
    if (!(0.0 <= split->theta_lo && split->theta_lo < split->theta_hi &&
          split->theta_hi <= kTwoPi + 1e-12))
      throw std::invalid_argument("build_annulus_mesh: split angles out of range");
    split_lo = grid_index(split->theta_lo);
    split_hi = grid_index(split->theta_hi);
    if (split_lo == split_hi)
      throw std::invalid_argument("build_annulus_mesh: split arc is empty");

    // inside arc: nodes from split_lo to split_hi, both junctions included.
    BoundarySegment in_seg{split->inside, {}, {}, false};
    for (int t = split_lo; t <= split_hi; ++t) in_seg.nodes.push_back(vid(nr, t));
    // outside arc: wraps from split_hi around to split_lo.
    BoundarySegment out_seg{split->outside, {}, {}, false};
    for (int t = split_hi; t <= split_lo + ntheta; ++t)
      out_seg.nodes.push_back(vid(nr, t));
    m.segments.push_back(std::move(in_seg));
    m.segments.push_back(std::move(out_seg));
  } else {
    m.segments.push_back({outer, {}, {}, true});
    for (int t = 0; t < ntheta; ++t) m.segments[1].nodes.push_back(vid(nr, t));
  }
  for (auto& seg : m.segments) accumulate_arclength(m, seg);

  for (int t = 0; t < ntheta; ++t) {
    m.boundary_edges.push_back({vid(0, t), vid(0, t + 1), 0});
    int seg_id = 1;
    if (split) {
      const bool in_arc = split_lo < split_hi
                              ? (t >= split_lo && t < split_hi)
                              : (t >= split_lo || t < split_hi);
      seg_id = in_arc ? 1 : 2;
    }
    m.boundary_edges.push_back({vid(nr, t), vid(nr, t + 1), seg_id});
  }
  return m;
}

const BoundarySegment& boundary_nodes(const Mesh& mesh, std::string_view tag_name) {
  return mesh.segment(tag_name);
}

std::string dump_mesh(const Mesh& mesh) {
  std::string out;
  char buf[160];
  out += "# nodes: id x y\n";
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu %.17g %.17g\n", i, mesh.nodes[i].x,
                  mesh.nodes[i].y);
    out += buf;
  }
  out += "# triangles: id n0 n1 n2\n";
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    std::snprintf(buf, sizeof buf, "%zu %d %d %d\n", t, tri[0], tri[1], tri[2]);
    out += buf;
  }
  out += "# boundary_edges: n0 n1 tag\n";
  for (const auto& e : mesh.boundary_edges) {
    std::snprintf(buf, sizeof buf, "%d %d %s\n", e.a, e.b,
                  mesh.segments[e.segment].tag.name.c_str());
    out += buf;
  }
  return out;
}

}  // namespace kmf
