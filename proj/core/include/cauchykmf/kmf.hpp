#pragma once

#include <Eigen/Dense>

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cauchykmf/fem.hpp"
#include "cauchykmf/geometry.hpp"

namespace kmf {

struct ExtraCondition {
  TraceKind kind = TraceKind::Dirichlet;
  Eigen::VectorXd values;
};

// Cauchy problem: both Dirichlet datum f and conormal flux g are given on the
// cauchy segment; nothing is known on the reconstruction segment. Extra
// conditions over-determine the remaining segments and are applied to both
// half-step problems.
struct CauchyProblem {
  const Mesh* mesh = nullptr;
  EllipticCoefficients coefficients;
  std::string cauchy_tag;
  std::string reconstruction_tag;
  TraceField f;  // Dirichlet datum on the cauchy segment
  TraceField g;  // Neumann datum on the cauchy segment
  std::map<std::string, ExtraCondition> extra;
  // Inner Picard controls used when a semilinear term is present.
  double picard_tol = 1e-8;
  int picard_max_iter = 50;
};

void validate(const CauchyProblem& problem);

struct StepResult {
  TraceField psi;       // Dirichlet trace of w on the reconstruction segment
  TraceField phi_next;  // recovered flux of v on the reconstruction segment
  Field w;
  Field v;
};

struct IterationRecord {
  double dpsi_inf = 0.0;
  double dphi_inf = 0.0;
  std::optional<double> error_vs_reference;
  double h1_gap = 0.0;  // ||w_k - v_k||_{H1}
};

struct IterationState {
  int k = 0;
  TraceField phi;
  TraceField psi;
  std::vector<IterationRecord> history;
  std::vector<Eigen::VectorXd> phi_history;  // phi_0 .. phi_k
  std::vector<Eigen::VectorXd> psi_history;  // psi_1 .. psi_k
  Field w_field;
  Field v_field;
  bool converged = false;
};

struct KmfOptions {
  double tol = 1e-3;  // sup-norm threshold on psi increments
  int max_iter = 300;
  // Optional reference Dirichlet trace on the reconstruction segment; when
  // set, the history records the relative L2 error of psi_k against it.
  std::optional<Eigen::VectorXd> reference_psi;
  bool record_h1_gap = true;
  bool record_trace_history = true;
};

// Both half-step solvers of the alternating iteration share one assembled
// system and one factorization per constraint pattern; construction cost is
// paid once per problem.
class KmfEngine {
 public:
  explicit KmfEngine(const CauchyProblem& problem);

  StepResult step(const Eigen::VectorXd& phi, const Field* w_warm = nullptr,
                  const Field* v_warm = nullptr) const;

  const AssembledSystem& system() const { return *system_; }
  const CauchyProblem& problem() const { return *problem_; }
  // Reconstruction-segment DOFs: interior node positions within the segment
  // node list (open segments exclude the constrained junction endpoints).
  const std::vector<int>& trace_dofs() const { return trace_dofs_; }

  // Homogeneous Neumann lifting w = L_n^l(phi): all data zero except the flux
  // phi on the reconstruction segment.
  Field lift_neumann(const Eigen::VectorXd& phi) const;

 private:
  Field solve_half(const MixedSolver& solver,
                   const std::map<std::string, Eigen::VectorXd>& dirichlet,
                   const std::map<std::string, Eigen::VectorXd>& neumann,
                   const Field* warm) const;

  const CauchyProblem* problem_;
  std::shared_ptr<const AssembledSystem> system_;
  std::unique_ptr<MixedSolver> w_solver_;  // Dirichlet on cauchy + extra-Dirichlet
  std::unique_ptr<MixedSolver> v_solver_;  // Dirichlet on reconstruction + extra-Dirichlet
  std::unique_ptr<FluxRecovery> recovery_;
  std::vector<int> trace_dofs_;
  Eigen::VectorXd semilinear_fixed_load_;
  std::map<std::string, Eigen::VectorXd> w_dirichlet_, w_neumann_base_;
  std::map<std::string, Eigen::VectorXd> v_dirichlet_base_, v_neumann_;
};

// One sweep of the alternating iteration: solve the Neumann half-step with
// flux phi_k, take its Dirichlet trace, solve the Dirichlet half-step, and
// recover the next flux.
StepResult kmf_step(const CauchyProblem& problem, const TraceField& phi_k);

IterationState kmf_run(const CauchyProblem& problem, const TraceField& phi0,
                       const KmfOptions& options);
IterationState kmf_run(const CauchyProblem& problem, const TraceField& phi0,
                       double tol, int max_iter);

// z = T(0): the data-dependent affine offset of the step operator.
TraceField affine_offset(const CauchyProblem& problem);

// Dense representation of the linear part of the step operator on the
// reconstruction segment's interior DOFs, with the Gram matrix of the
// *-inner product and spectral audit scalars.
struct OperatorAudit {
  Eigen::MatrixXd Tl;
  Eigen::MatrixXd star_gram;
  std::vector<int> dof_nodes;       // mesh node ids, one per matrix column
  std::vector<int> dof_positions;   // positions within the segment node list
  Eigen::VectorXd eigenvalues;      // of the *-symmetrized operator, ascending
  Eigen::MatrixXd eigenvectors;     // star_gram-orthonormal columns
  double symmetry_defect = 0.0;     // max |G Tl - (G Tl)^T|
  double relative_symmetry_defect = 0.0;
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
};

// Column j is T(e_j) - T(0) for the unit flux on interior DOF j; costs one
// BVP pair per column and is intended for desk-scale problems only.
OperatorAudit assemble_Tl(const CauchyProblem& problem);

// Energy inner product <phi,psi>_* = int (grad L_n^l phi)^T A (grad L_n^l psi).
double star_inner(const CauchyProblem& problem, const TraceField& phi,
                  const TraceField& psi);

// Factored variant for repeated evaluations.
class StarProduct {
 public:
  explicit StarProduct(const CauchyProblem& problem);
  double inner(const Eigen::VectorXd& phi, const Eigen::VectorXd& psi) const;
  double norm(const Eigen::VectorXd& phi) const;

 private:
  KmfEngine engine_;
};

struct ConvergenceTheoryReport {
  bool monotone_error_decay = false;
  double worst_error_margin = 0.0;  // min over k of ||e_k||_* - ||e_{k+1}||_*
  bool asymptotic_regularity = false;
  double worst_regularity_margin = 0.0;
  int steps_checked = 0;
};

// Checks the monotone *-norm decay of the error iterate and the asymptotic
// regularity of the increments against a completed linear run. The error
// reference is the supplied trace when given, otherwise the final iterate.
ConvergenceTheoryReport audit_convergence_theory(
    const OperatorAudit& audit, const IterationState& run,
    const std::optional<Eigen::VectorXd>& reference_phi = std::nullopt);

}  // namespace kmf
