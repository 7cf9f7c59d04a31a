#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "cauchykmf/errors.hpp"
#include "cauchykmf/geometry.hpp"

using namespace kmf;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::array<SegmentTag, 4> rect_tags() {
  return {SegmentTag{"g1", SegmentRole::CauchyData},
          SegmentTag{"g2", SegmentRole::Reconstruction},
          SegmentTag{"g3", SegmentRole::Auxiliary},
          SegmentTag{"g4", SegmentRole::Auxiliary}};
}

// Each interior edge must be shared by exactly two triangles, each boundary
// edge by exactly one.
void check_conforming(const Mesh& mesh) {
  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& tri : mesh.triangles) {
    for (int e = 0; e < 3; ++e) {
      int a = tri[e], b = tri[(e + 1) % 3];
      if (a > b) std::swap(a, b);
      edge_count[{a, b}]++;
    }
  }
  std::set<std::pair<int, int>> boundary;
  for (const auto& be : mesh.boundary_edges) {
    int a = be.a, b = be.b;
    if (a > b) std::swap(a, b);
    boundary.insert({a, b});
  }
  for (const auto& [edge, count] : edge_count) {
    if (boundary.count(edge)) {
      CHECK(count == 1);
    } else {
      CHECK(count == 2);
    }
  }
}

}  // namespace

TEST_CASE("rect mesh: smallest grid") {
  const Mesh m = build_rect_mesh(1, 1, {0.0, 1.0}, {0.0, 1.0}, rect_tags());
  CHECK(m.nodes.size() == 4);
  CHECK(m.triangles.size() == 2);
  check_conforming(m);
}

TEST_CASE("rect mesh: count formula") {
  const Mesh m = build_rect_mesh(2, 2, {0.0, 1.0}, {0.0, 1.0}, rect_tags());
  CHECK(m.nodes.size() == 9);
  CHECK(m.triangles.size() == 8);
}

TEST_CASE("rect mesh: desk-scale experiment grid") {
  const Mesh m = build_rect_mesh(128, 96, {0.0, 1.0}, {0.0, 0.75}, rect_tags());
  CHECK(m.nodes.size() == 12513);
  CHECK(m.triangles.size() == 2u * 128 * 96);
}

TEST_CASE("rect mesh: positive orientation and exact area") {
  const Mesh m = build_rect_mesh(7, 5, {0.0, 1.0}, {0.0, 0.75}, rect_tags());
  for (std::size_t t = 0; t < m.triangles.size(); ++t)
    CHECK(m.triangle_area(static_cast<int>(t)) > 0.0);
  CHECK(m.total_area() == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("rect mesh: refinement quadruples triangle count") {
  const Mesh coarse = build_rect_mesh(6, 4, {0.0, 1.0}, {0.0, 1.0}, rect_tags());
  const Mesh fine = build_rect_mesh(12, 8, {0.0, 1.0}, {0.0, 1.0}, rect_tags());
  CHECK(fine.triangles.size() == 4 * coarse.triangles.size());
}

TEST_CASE("rect mesh: boundary nodes lie on the boundary") {
  const Mesh m = build_rect_mesh(5, 3, {0.0, 1.0}, {0.0, 0.75}, rect_tags());
  for (const auto& e : m.boundary_edges) {
    for (int node : {e.a, e.b}) {
      const Point2& p = m.nodes[node];
      const bool on = std::abs(p.x) < 1e-12 || std::abs(p.x - 1.0) < 1e-12 ||
                      std::abs(p.y) < 1e-12 || std::abs(p.y - 0.75) < 1e-12;
      CHECK(on);
    }
  }
}

TEST_CASE("rect mesh: invalid arguments") {
  CHECK_THROWS_AS(build_rect_mesh(0, 1, {0.0, 1.0}, {0.0, 1.0}, rect_tags()),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_rect_mesh(1, 1, {1.0, 1.0}, {0.0, 1.0}, rect_tags()),
                  std::invalid_argument);
}

TEST_CASE("boundary nodes: bottom of unit square ordered by arclength") {
  const Mesh m = build_rect_mesh(2, 2, {0.0, 1.0}, {0.0, 1.0}, rect_tags());
  const BoundarySegment& seg = boundary_nodes(m, "g1");
  REQUIRE(seg.nodes.size() == 3);
  CHECK(seg.arclength[0] == doctest::Approx(0.0));
  CHECK(seg.arclength[1] == doctest::Approx(0.5));
  CHECK(seg.arclength[2] == doctest::Approx(1.0));
}

TEST_CASE("boundary nodes: reconstruction segment ordered by x") {
  const Mesh m = build_rect_mesh(8, 6, {0.0, 1.0}, {0.0, 0.75}, rect_tags());
  const BoundarySegment& seg = boundary_nodes(m, "g2");
  for (std::size_t i = 0; i + 1 < seg.nodes.size(); ++i)
    CHECK(m.nodes[seg.nodes[i]].x < m.nodes[seg.nodes[i + 1]].x);
  for (int node : seg.nodes) CHECK(m.nodes[node].y == doctest::Approx(0.75));
}

TEST_CASE("boundary nodes: unknown tag") {
  const Mesh m = build_rect_mesh(2, 2, {0.0, 1.0}, {0.0, 1.0}, rect_tags());
  CHECK_THROWS_AS(boundary_nodes(m, "nope"), NotFoundError);
}

TEST_CASE("annulus mesh: count check") {
  const Mesh m = build_annulus_mesh(1, 4, 1.0, 2.0,
                                    SegmentTag{"inner", SegmentRole::CauchyData},
                                    SegmentTag{"outer", SegmentRole::Reconstruction});
  CHECK(m.nodes.size() == 8);
  CHECK(m.triangles.size() == 8);
  check_conforming(m);
}

TEST_CASE("annulus mesh: desk-scale grid") {
  const Mesh m = build_annulus_mesh(32, 128, 1.0, 7.0,
                                    SegmentTag{"inner", SegmentRole::CauchyData},
                                    SegmentTag{"outer", SegmentRole::Reconstruction});
  CHECK(m.nodes.size() == 4224);
  CHECK(m.triangles.size() == 2u * 32 * 128);
  check_conforming(m);

  for (std::size_t t = 0; t < m.triangles.size(); ++t)
    CHECK(m.triangle_area(static_cast<int>(t)) > 0.0);
  // Polygonal approximation of (49 - 1) pi.
  CHECK(m.total_area() ==
        doctest::Approx(48.0 * kPi).epsilon(1e-3));
}

TEST_CASE("annulus mesh: full circle is periodic, start node at parameter 0") {
  const Mesh m = build_annulus_mesh(2, 16, 1.0, 2.0,
                                    SegmentTag{"inner", SegmentRole::CauchyData},
                                    SegmentTag{"outer", SegmentRole::Reconstruction});
  const BoundarySegment& inner = boundary_nodes(m, "inner");
  CHECK(inner.closed);
  CHECK(inner.nodes.size() == 16);
  std::set<int> unique(inner.nodes.begin(), inner.nodes.end());
  CHECK(unique.size() == 16);
  CHECK(inner.arclength.front() == 0.0);
  // Nodes sit exactly on the polygonal circle.
  for (int node : inner.nodes)
    CHECK(std::hypot(m.nodes[node].x, m.nodes[node].y) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("annulus mesh: outer split arcs share junction nodes") {
  OuterArcSplit split;
  split.theta_lo = kPi / 2.0;
  split.theta_hi = 3.0 * kPi / 2.0;
  split.inside = SegmentTag{"data", SegmentRole::CauchyData};
  split.outside = SegmentTag{"rec", SegmentRole::Reconstruction};
  const Mesh m = build_annulus_mesh(4, 16, 0.5, 1.0,
                                    SegmentTag{"inner", SegmentRole::Auxiliary},
                                    SegmentTag{"unused", SegmentRole::Auxiliary}, split);

  const BoundarySegment& data = boundary_nodes(m, "data");
  const BoundarySegment& rec = boundary_nodes(m, "rec");
  CHECK(data.nodes.size() == 9);  // quarter markers at t = 4..12 inclusive
  CHECK(rec.nodes.size() == 9);
  CHECK(data.nodes.front() == rec.nodes.back());
  CHECK(data.nodes.back() == rec.nodes.front());
  for (int node : data.nodes) CHECK(m.nodes[node].x <= 1e-12);
  for (int node : rec.nodes) CHECK(m.nodes[node].x >= -1e-12);
  check_conforming(m);

  // sqrt(2)/2 split of the x > 0 arc per the second data-arc variant.
  OuterArcSplit wide;
  wide.theta_lo = kPi / 4.0;
  wide.theta_hi = 7.0 * kPi / 4.0;
  wide.inside = SegmentTag{"data", SegmentRole::CauchyData};
  wide.outside = SegmentTag{"rec", SegmentRole::Reconstruction};
  const Mesh m2 = build_annulus_mesh(4, 16, 0.5, 1.0,
                                     SegmentTag{"inner", SegmentRole::Auxiliary},
                                     SegmentTag{"unused", SegmentRole::Auxiliary}, wide);
  const double c = std::sqrt(2.0) / 2.0;
  for (int node : boundary_nodes(m2, "data").nodes) CHECK(m2.nodes[node].x <= c + 1e-12);
  for (int node : boundary_nodes(m2, "rec").nodes) CHECK(m2.nodes[node].x >= c - 1e-12);
}

TEST_CASE("annulus mesh: invalid arguments") {
  const SegmentTag a{"a", SegmentRole::CauchyData};
  const SegmentTag b{"b", SegmentRole::Reconstruction};
  CHECK_THROWS_AS(build_annulus_mesh(1, 4, 2.0, 1.0, a, b), std::invalid_argument);
  CHECK_THROWS_AS(build_annulus_mesh(0, 4, 1.0, 2.0, a, b), std::invalid_argument);
  CHECK_THROWS_AS(build_annulus_mesh(1, 2, 1.0, 2.0, a, b), std::invalid_argument);

  OuterArcSplit off_grid;
  off_grid.theta_lo = 0.1;  // not a grid angle for ntheta = 16
  off_grid.theta_hi = kPi;
  off_grid.inside = a;
  off_grid.outside = b;
  CHECK_THROWS_AS(build_annulus_mesh(1, 16, 1.0, 2.0, a, b, off_grid),
                  std::invalid_argument);
}

TEST_CASE("mesh dump lists nodes, triangles, and tagged edges") {
  const Mesh m = build_rect_mesh(1, 1, {0.0, 1.0}, {0.0, 1.0}, rect_tags());
  const std::string dump = dump_mesh(m);
  CHECK(dump.find("# nodes: id x y") != std::string::npos);
  CHECK(dump.find("# triangles: id n0 n1 n2") != std::string::npos);
  CHECK(dump.find("# boundary_edges: n0 n1 tag") != std::string::npos);
  CHECK(dump.find("g2") != std::string::npos);
}
