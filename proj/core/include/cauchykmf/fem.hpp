#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cauchykmf/geometry.hpp"

namespace kmf {

// Nodal coefficient vector of a P1 field over all mesh nodes.
using Field = Eigen::VectorXd;

enum class TraceKind { Dirichlet, Neumann };

// Ordered nodal values on one boundary segment, aligned with the segment's
// boundary_nodes ordering. Neumann traces produced by flux recovery carry 0 at
// open-segment endpoints (those degrees of freedom are constrained by the
// adjacent Dirichlet segments).
struct TraceField {
  std::string tag;
  TraceKind kind = TraceKind::Dirichlet;
  Eigen::VectorXd values;
};

// Optional zero-order term N(u) and source F for equations P(u) + N(u) = F.
struct SemilinearTerm {
  std::function<double(double)> value;       // N(u)
  std::function<double(double)> derivative;  // N'(u)
  std::function<double(Point2)> source;      // F(x)
};

// Coefficient field A(x) of P(u) = -div(A grad u) with ellipticity bound
// alpha: xi^T A(x) xi >= alpha |xi|^2, checked by sampling at element
// centroids during assembly.
struct EllipticCoefficients {
  std::function<Eigen::Matrix2d(Point2)> matrix;
  double alpha = 1.0;
  std::optional<SemilinearTerm> semilinear;

  static EllipticCoefficients laplace();
};

// Stiffness, domain mass, and per-tag 1D boundary mass matrices. Boundary
// mass matrices are segment-local: row/column i corresponds to the segment's
// i-th ordered node.
struct AssembledSystem {
  Eigen::SparseMatrix<double> stiffness;
  Eigen::SparseMatrix<double> mass;
  std::map<std::string, Eigen::SparseMatrix<double>> boundary_mass;
};

AssembledSystem assemble(const Mesh& mesh, const EllipticCoefficients& coefficients);

// Mixed boundary value problem. Every boundary tag must appear in exactly one
// of dirichlet/neumann, and at least one Dirichlet node must exist.
struct MixedBVP {
  const Mesh* mesh = nullptr;
  EllipticCoefficients coefficients;
  std::map<std::string, TraceField> dirichlet;
  std::map<std::string, TraceField> neumann;
  std::function<double(Point2)> source;  // optional volumetric source
};

// Reusable factored solver for a fixed (mesh, coefficients, Dirichlet tag
// set). Dirichlet conditions are imposed by row/column elimination, keeping
// the reduced system symmetric positive definite; the factorization is
// computed once and shared across solves.
class MixedSolver {
 public:
  MixedSolver(const Mesh& mesh, const EllipticCoefficients& coefficients,
              std::vector<std::string> dirichlet_tags,
              std::shared_ptr<const AssembledSystem> system = nullptr);

  // dirichlet/neumann map tag -> segment-aligned values; extra_load is an
  // optional full-size load vector added to the right-hand side.
  Field solve(const std::map<std::string, Eigen::VectorXd>& dirichlet_values,
              const std::map<std::string, Eigen::VectorXd>& neumann_values,
              const Eigen::VectorXd* extra_load = nullptr) const;

  // Right-hand side assembled from Neumann data and extra load (Dirichlet
  // handled separately), exposed for flux-recovery residuals.
  Eigen::VectorXd neumann_load(
      const std::map<std::string, Eigen::VectorXd>& neumann_values) const;

  const AssembledSystem& system() const { return *system_; }
  const Mesh& mesh() const { return *mesh_; }
  const std::vector<int>& constrained_nodes() const { return constrained_; }

 private:
  const Mesh* mesh_;
  std::shared_ptr<const AssembledSystem> system_;
  std::vector<std::string> dirichlet_tags_;
  std::vector<int> constrained_;       // sorted mesh node ids
  std::vector<int> free_;              // sorted mesh node ids
  std::vector<int> node_to_reduced_;   // -1 for constrained nodes
  Eigen::SparseMatrix<double> k_ff_;
  Eigen::SparseMatrix<double> k_fc_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> factorization_;
};

// Solves the linear mixed problem. Rejects problems with a semilinear term.
Field solve_mixed(const MixedBVP& bvp);

// Damped Picard iteration for P(u) + N(u) = F: each step solves the linear
// problem P(u_next) = F - N(u_curr) with the boundary data held fixed. Stops
// when the sup-norm increment drops below tol; damping falls back from 1.0 to
// 0.5 when the increment grows.
Field solve_semilinear(const MixedBVP& bvp, const Field& initial_guess,
                       double tol = 1e-8, int max_iter = 50);

// Picard loop over a prefactored solver; fixed_load collects all loads that
// do not depend on the iterate (typically M F).
Field picard_solve(const MixedSolver& solver, const SemilinearTerm& term,
                   const Eigen::VectorXd& fixed_load,
                   const std::map<std::string, Eigen::VectorXd>& dirichlet,
                   const std::map<std::string, Eigen::VectorXd>& neumann,
                   const Field& initial_guess, double tol, int max_iter);

// Restriction of nodal values to one segment's ordered nodes.
TraceField dirichlet_trace(const Mesh& mesh, const Field& field,
                           std::string_view tag_name);

// Variational flux recovery of the conormal derivative on one segment: solves
// the segment mass system M_G lambda = (K u - b) restricted to the segment's
// rows, where b collects the volumetric source, the semilinear term evaluated
// at `field`, and the Neumann loads of the *other* segments. On open segments
// the system is solved over interior nodes (the discrete dual of traces
// vanishing at the junctions) and the endpoint values are reported as 0.
TraceField neumann_trace(const MixedBVP& bvp, const Field& field,
                         std::string_view tag_name);

// Factored segment-mass solve behind neumann_trace, reusable across many
// recoveries on the same segment.
class FluxRecovery {
 public:
  FluxRecovery(const Mesh& mesh, std::shared_ptr<const AssembledSystem> system,
               std::string tag);

  // residual = K u - (loads other than this segment's own Neumann data),
  // full mesh size.
  TraceField recover(const Eigen::VectorXd& residual) const;

 private:
  const Mesh* mesh_;
  std::shared_ptr<const AssembledSystem> system_;
  std::string tag_;
  std::vector<int> interior_local_;  // segment-local indices carrying DOFs
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> factorization_;
};

// Nodal interpolation of a scalar function.
Eigen::VectorXd interpolate(const Mesh& mesh, const std::function<double(Point2)>& f);

// L2(Gamma) norm of segment-aligned values via the 1D boundary mass matrix.
double trace_l2_norm(const AssembledSystem& system, const std::string& tag,
                     const Eigen::VectorXd& values);

// H1(Omega) norm sqrt(u^T K u + u^T M u).
double h1_norm(const AssembledSystem& system, const Field& u);

// L2(Omega) norm via the consistent mass matrix.
double l2_norm(const AssembledSystem& system, const Field& u);

}  // namespace kmf
