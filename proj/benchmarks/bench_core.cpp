#include <benchmark/benchmark.h>

#include <cmath>

#include "cauchykmf/fem.hpp"
#include "cauchykmf/geometry.hpp"
#include "cauchykmf/kmf.hpp"
#include "cauchykmf/spectral.hpp"

namespace {

constexpr double kPi = 3.14159265358979323846;

kmf::CauchyProblem square_problem(const kmf::Mesh& mesh) {
  kmf::CauchyProblem p;
  p.mesh = &mesh;
  p.coefficients = kmf::EllipticCoefficients::laplace();
  p.cauchy_tag = "g1";
  p.reconstruction_tag = "g2";
  const auto& g1 = mesh.segment("g1");
  Eigen::VectorXd f(g1.nodes.size());
  for (std::size_t i = 0; i < g1.nodes.size(); ++i)
    f[i] = std::sin(kPi * mesh.nodes[g1.nodes[i]].x);
  p.f = {"g1", kmf::TraceKind::Dirichlet, f};
  p.g = {"g1", kmf::TraceKind::Neumann, Eigen::VectorXd::Zero(g1.nodes.size())};
  for (const char* tag : {"g3", "g4"})
    p.extra.emplace(tag, kmf::ExtraCondition{
                             kmf::TraceKind::Dirichlet,
                             Eigen::VectorXd::Zero(mesh.segment(tag).nodes.size())});
  return p;
}

kmf::Mesh square_mesh(int n) {
  return kmf::build_rect_mesh(n, (3 * n) / 4, {0.0, 1.0}, {0.0, 0.75},
                              {kmf::SegmentTag{"g1", kmf::SegmentRole::CauchyData},
                               kmf::SegmentTag{"g2", kmf::SegmentRole::Reconstruction},
                               kmf::SegmentTag{"g3", kmf::SegmentRole::Auxiliary},
                               kmf::SegmentTag{"g4", kmf::SegmentRole::Auxiliary}});
}

void BM_Assemble(benchmark::State& state) {
  const kmf::Mesh mesh = square_mesh(static_cast<int>(state.range(0)));
  const auto coeffs = kmf::EllipticCoefficients::laplace();
  for (auto _ : state) {
    auto system = kmf::assemble(mesh, coeffs);
    benchmark::DoNotOptimize(system.stiffness);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Assemble)->RangeMultiplier(2)->Range(16, 128)->Complexity();

void BM_EngineSetup(benchmark::State& state) {
  const kmf::Mesh mesh = square_mesh(static_cast<int>(state.range(0)));
  const auto problem = square_problem(mesh);
  for (auto _ : state) {
    kmf::KmfEngine engine(problem);
    benchmark::DoNotOptimize(&engine);
  }
}
BENCHMARK(BM_EngineSetup)->RangeMultiplier(2)->Range(16, 64);

void BM_KmfStep(benchmark::State& state) {
  const kmf::Mesh mesh = square_mesh(static_cast<int>(state.range(0)));
  const auto problem = square_problem(mesh);
  kmf::KmfEngine engine(problem);
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(mesh.segment("g2").nodes.size());
  for (auto _ : state) {
    auto result = engine.step(phi);
    phi = result.phi_next.values;
    benchmark::DoNotOptimize(phi);
  }
}
BENCHMARK(BM_KmfStep)->RangeMultiplier(2)->Range(16, 128);

void BM_SpectralIterate(benchmark::State& state) {
  const auto model = kmf::make_square_model(static_cast<int>(state.range(0)));
  Eigen::VectorXd phi0 = Eigen::VectorXd::Ones(model.modes());
  Eigen::VectorXd z = Eigen::VectorXd::Constant(model.modes(), 0.25);
  for (auto _ : state) {
    auto out = kmf::spectral_iterate(model, phi0, z, 1000);
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(BM_SpectralIterate)->RangeMultiplier(4)->Range(16, 256);

}  // namespace

BENCHMARK_MAIN();
