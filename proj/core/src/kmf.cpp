#include "cauchykmf/kmf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cauchykmf/errors.hpp"

namespace kmf {

namespace {

CauchyProblem homogenized(const CauchyProblem& problem) {
  CauchyProblem hom = problem;
  hom.f.values.setZero();
  hom.g.values.setZero();
  for (auto& [tag, cond] : hom.extra) cond.values.setZero();
  return hom;
}

Eigen::VectorXd restrict_to(const Eigen::VectorXd& full,
                            const std::vector<int>& positions) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(positions.size()));
  for (std::size_t i = 0; i < positions.size(); ++i)
    out[static_cast<Eigen::Index>(i)] = full[positions[i]];
  return out;
}

}  // namespace

void validate(const CauchyProblem& problem) {
  if (!problem.mesh) throw std::invalid_argument("CauchyProblem: mesh not set");
  if (problem.cauchy_tag == problem.reconstruction_tag)
    throw std::invalid_argument("CauchyProblem: cauchy and reconstruction tags coincide");
  const BoundarySegment& gamma1 = problem.mesh->segment(problem.cauchy_tag);
  problem.mesh->segment(problem.reconstruction_tag);  // must exist

  if (problem.f.tag != problem.cauchy_tag || problem.f.kind != TraceKind::Dirichlet)
    throw std::invalid_argument("CauchyProblem: f must be a Dirichlet trace on the cauchy segment");
  if (problem.g.tag != problem.cauchy_tag || problem.g.kind != TraceKind::Neumann)
    throw std::invalid_argument("CauchyProblem: g must be a Neumann trace on the cauchy segment");
  if (problem.f.values.size() != static_cast<Eigen::Index>(gamma1.nodes.size()) ||
      problem.g.values.size() != static_cast<Eigen::Index>(gamma1.nodes.size()))
    throw std::invalid_argument("CauchyProblem: Cauchy data length mismatch");

  for (const auto& [tag, cond] : problem.extra) {
    if (tag == problem.cauchy_tag || tag == problem.reconstruction_tag)
      throw std::invalid_argument(
          "CauchyProblem: extra condition may not reference the cauchy or "
          "reconstruction segment");
    const BoundarySegment& seg = problem.mesh->segment(tag);
    if (cond.values.size() != static_cast<Eigen::Index>(seg.nodes.size()))
      throw std::invalid_argument("CauchyProblem: extra condition length mismatch on " + tag);
  }
  for (const auto& seg : problem.mesh->segments) {
    if (seg.tag.name == problem.cauchy_tag || seg.tag.name == problem.reconstruction_tag)
      continue;
    if (problem.extra.count(seg.tag.name) == 0)
      throw std::invalid_argument("CauchyProblem: segment " + seg.tag.name +
                                  " carries no boundary condition");
  }
}

KmfEngine::KmfEngine(const CauchyProblem& problem) : problem_(&problem) {
  validate(problem);
  const Mesh& mesh = *problem.mesh;

  EllipticCoefficients linear = problem.coefficients;
  linear.semilinear.reset();
  system_ = std::make_shared<const AssembledSystem>(assemble(mesh, linear));

  std::vector<std::string> w_dir_tags{problem.cauchy_tag};
  std::vector<std::string> v_dir_tags{problem.reconstruction_tag};
  for (const auto& [tag, cond] : problem.extra) {
    if (cond.kind == TraceKind::Dirichlet) {
      w_dir_tags.push_back(tag);
      v_dir_tags.push_back(tag);
      w_dirichlet_.emplace(tag, cond.values);
      v_dirichlet_base_.emplace(tag, cond.values);
    } else {
      w_neumann_base_.emplace(tag, cond.values);
      v_neumann_.emplace(tag, cond.values);
    }
  }
  w_dirichlet_.emplace(problem.cauchy_tag, problem.f.values);
  v_neumann_.emplace(problem.cauchy_tag, problem.g.values);

  w_solver_ = std::make_unique<MixedSolver>(mesh, linear, w_dir_tags, system_);
  v_solver_ = std::make_unique<MixedSolver>(mesh, linear, v_dir_tags, system_);
  recovery_ = std::make_unique<FluxRecovery>(mesh, system_, problem.reconstruction_tag);

  const BoundarySegment& gamma2 = mesh.segment(problem.reconstruction_tag);
  const int n_seg = static_cast<int>(gamma2.nodes.size());
  if (gamma2.closed) {
    for (int i = 0; i < n_seg; ++i) trace_dofs_.push_back(i);
  } else {
    for (int i = 1; i + 1 < n_seg; ++i) trace_dofs_.push_back(i);
  }

  if (problem.coefficients.semilinear && problem.coefficients.semilinear->source) {
    semilinear_fixed_load_ =
        system_->mass * interpolate(mesh, problem.coefficients.semilinear->source);
  }
}

Field KmfEngine::solve_half(const MixedSolver& solver,
                            const std::map<std::string, Eigen::VectorXd>& dirichlet,
                            const std::map<std::string, Eigen::VectorXd>& neumann,
                            const Field* warm) const {
  if (!problem_->coefficients.semilinear)
    return solver.solve(dirichlet, neumann);
  Eigen::VectorXd fixed = semilinear_fixed_load_.size()
                              ? semilinear_fixed_load_
                              : Eigen::VectorXd::Zero(
                                    static_cast<Eigen::Index>(problem_->mesh->nodes.size()));
  const Field guess = warm ? *warm
                           : Field::Zero(static_cast<Eigen::Index>(
                                 problem_->mesh->nodes.size()));
  return picard_solve(solver, *problem_->coefficients.semilinear, fixed, dirichlet,
                      neumann, guess, problem_->picard_tol, problem_->picard_max_iter);
}

StepResult KmfEngine::step(const Eigen::VectorXd& phi, const Field* w_warm,
                           const Field* v_warm) const {
  const Mesh& mesh = *problem_->mesh;
  const BoundarySegment& gamma2 = mesh.segment(problem_->reconstruction_tag);
  if (phi.size() != static_cast<Eigen::Index>(gamma2.nodes.size()))
    throw std::invalid_argument("kmf step: flux iterate length mismatch");

  auto w_neumann = w_neumann_base_;
  w_neumann.emplace(problem_->reconstruction_tag, phi);
  StepResult result;
  result.w = solve_half(*w_solver_, w_dirichlet_, w_neumann, w_warm);
  result.psi = dirichlet_trace(mesh, result.w, problem_->reconstruction_tag);

  auto v_dirichlet = v_dirichlet_base_;
  v_dirichlet.emplace(problem_->reconstruction_tag, result.psi.values);
  result.v = solve_half(*v_solver_, v_dirichlet, v_neumann_, v_warm);

  Eigen::VectorXd residual = system_->stiffness * result.v;
  if (problem_->coefficients.semilinear) {
    const SemilinearTerm& term = *problem_->coefficients.semilinear;
    residual += system_->mass *
                result.v.unaryExpr([&term](double x) { return term.value(x); });
    if (semilinear_fixed_load_.size()) residual -= semilinear_fixed_load_;
  }
  residual -= v_solver_->neumann_load(v_neumann_);
  result.phi_next = recovery_->recover(residual);
  return result;
}

Field KmfEngine::lift_neumann(const Eigen::VectorXd& phi) const {
  std::map<std::string, Eigen::VectorXd> dirichlet, neumann;
  for (const auto& [tag, values] : w_dirichlet_)
    dirichlet.emplace(tag, Eigen::VectorXd::Zero(values.size()));
  for (const auto& [tag, values] : w_neumann_base_)
    neumann.emplace(tag, Eigen::VectorXd::Zero(values.size()));
  neumann.emplace(problem_->reconstruction_tag, phi);
  return w_solver_->solve(dirichlet, neumann);
}

StepResult kmf_step(const CauchyProblem& problem, const TraceField& phi_k) {
  if (phi_k.tag != problem.reconstruction_tag || phi_k.kind != TraceKind::Neumann)
    throw std::invalid_argument(
        "kmf_step: phi must be a Neumann trace on the reconstruction segment");
  KmfEngine engine(problem);
  return engine.step(phi_k.values);
}

IterationState kmf_run(const CauchyProblem& problem, const TraceField& phi0,
                       const KmfOptions& options) {
  if (options.tol <= 0.0) throw std::invalid_argument("kmf_run: tol must be positive");
  if (phi0.tag != problem.reconstruction_tag || phi0.kind != TraceKind::Neumann)
    throw std::invalid_argument(
        "kmf_run: phi0 must be a Neumann trace on the reconstruction segment");

  KmfEngine engine(problem);
  const AssembledSystem& system = engine.system();
  const std::string& gamma2 = problem.reconstruction_tag;

  IterationState state;
  state.phi = phi0;
  Eigen::VectorXd psi_prev = Eigen::VectorXd::Zero(phi0.values.size());
  if (options.record_trace_history) state.phi_history.push_back(phi0.values);

  double ref_norm = 1.0;
  if (options.reference_psi)
    ref_norm = std::max(trace_l2_norm(system, gamma2, *options.reference_psi), 1e-300);

  const bool semilinear = problem.coefficients.semilinear.has_value();
  for (int k = 1; k <= options.max_iter; ++k) {
    const Field* w_warm = (semilinear && state.k > 0) ? &state.w_field : nullptr;
    const Field* v_warm = (semilinear && state.k > 0) ? &state.v_field : nullptr;
    StepResult res = engine.step(state.phi.values, w_warm, v_warm);

    IterationRecord rec;
    rec.dphi_inf = (res.phi_next.values - state.phi.values).lpNorm<Eigen::Infinity>();
    rec.dpsi_inf = (res.psi.values - psi_prev).lpNorm<Eigen::Infinity>();
    if (options.reference_psi)
      rec.error_vs_reference =
          trace_l2_norm(system, gamma2, res.psi.values - *options.reference_psi) /
          ref_norm;
    if (options.record_h1_gap) rec.h1_gap = h1_norm(system, res.w - res.v);
    state.history.push_back(rec);

    psi_prev = res.psi.values;
    state.phi = res.phi_next;
    state.psi = res.psi;
    state.w_field = std::move(res.w);
    state.v_field = std::move(res.v);
    state.k = k;
    if (options.record_trace_history) {
      state.phi_history.push_back(state.phi.values);
      state.psi_history.push_back(state.psi.values);
    }
    // The criterion compares two computed traces, so it arms at step 2; the
    // k = 1 record measures psi_1 against the zero start.
    if (k >= 2 && rec.dpsi_inf <= options.tol) {
      state.converged = true;
      break;
    }
  }
  return state;
}

IterationState kmf_run(const CauchyProblem& problem, const TraceField& phi0,
                       double tol, int max_iter) {
  KmfOptions options;
  options.tol = tol;
  options.max_iter = max_iter;
  return kmf_run(problem, phi0, options);
}

TraceField affine_offset(const CauchyProblem& problem) {
  KmfEngine engine(problem);
  const BoundarySegment& gamma2 = problem.mesh->segment(problem.reconstruction_tag);
  const Eigen::VectorXd zero =
      Eigen::VectorXd::Zero(static_cast<Eigen::Index>(gamma2.nodes.size()));
  return engine.step(zero).phi_next;
}

OperatorAudit assemble_Tl(const CauchyProblem& problem) {
  if (problem.coefficients.semilinear)
    throw UnsupportedError("assemble_Tl: semilinear problems are not supported");

  const CauchyProblem hom = homogenized(problem);
  KmfEngine engine(hom);
  const BoundarySegment& gamma2 = problem.mesh->segment(problem.reconstruction_tag);
  const int n_seg = static_cast<int>(gamma2.nodes.size());
  const std::vector<int>& dofs = engine.trace_dofs();
  const int m = static_cast<int>(dofs.size());

  OperatorAudit audit;
  audit.dof_positions = dofs;
  for (int i : dofs) audit.dof_nodes.push_back(gamma2.nodes[i]);

  audit.Tl.resize(m, m);
  std::vector<Field> lifts(m);
  for (int j = 0; j < m; ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n_seg);
    e[dofs[j]] = 1.0;
    StepResult res = engine.step(e);
    audit.Tl.col(j) = restrict_to(res.phi_next.values, dofs);
    lifts[j] = std::move(res.w);
  }

  audit.star_gram.resize(m, m);
  const auto& k_mat = engine.system().stiffness;
  std::vector<Eigen::VectorXd> k_lifts(m);
  for (int j = 0; j < m; ++j) k_lifts[j] = k_mat * lifts[j];
  for (int i = 0; i < m; ++i) {
    for (int j = i; j < m; ++j) {
      const double gij = lifts[i].dot(k_lifts[j]);
      audit.star_gram(i, j) = gij;
      audit.star_gram(j, i) = gij;
    }
  }

  const Eigen::MatrixXd gt = audit.star_gram * audit.Tl;
  audit.symmetry_defect = (gt - gt.transpose()).cwiseAbs().maxCoeff();
  audit.relative_symmetry_defect =
      audit.symmetry_defect / std::max(gt.cwiseAbs().maxCoeff(), 1e-300);

  const Eigen::MatrixXd sym = 0.5 * (gt + gt.transpose());
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, audit.star_gram);
  if (eig.info() != Eigen::Success)
    throw SolverFailureError("assemble_Tl: generalized eigensolve failed", -1.0);
  audit.eigenvalues = eig.eigenvalues();
  audit.eigenvectors = eig.eigenvectors();
  audit.min_eigenvalue = audit.eigenvalues.minCoeff();
  audit.max_eigenvalue = audit.eigenvalues.maxCoeff();
  return audit;
}

double star_inner(const CauchyProblem& problem, const TraceField& phi,
                  const TraceField& psi) {
  if (phi.tag != problem.reconstruction_tag || psi.tag != problem.reconstruction_tag)
    throw std::invalid_argument("star_inner: traces must live on the reconstruction segment");
  if (phi.kind != TraceKind::Neumann || psi.kind != TraceKind::Neumann)
    throw std::invalid_argument("star_inner: traces must be Neumann kind");
  StarProduct sp(problem);
  return sp.inner(phi.values, psi.values);
}

StarProduct::StarProduct(const CauchyProblem& problem) : engine_(problem) {}

double StarProduct::inner(const Eigen::VectorXd& phi, const Eigen::VectorXd& psi) const {
  const Field u_phi = engine_.lift_neumann(phi);
  const Field u_psi = engine_.lift_neumann(psi);
  return u_phi.dot(engine_.system().stiffness * u_psi);
}

double StarProduct::norm(const Eigen::VectorXd& phi) const {
  const Field u_phi = engine_.lift_neumann(phi);
  return std::sqrt(u_phi.dot(engine_.system().stiffness * u_phi));
}

ConvergenceTheoryReport audit_convergence_theory(
    const OperatorAudit& audit, const IterationState& run,
    const std::optional<Eigen::VectorXd>& reference_phi) {
  if (run.k < 3 || run.phi_history.size() < 4)
    throw InsufficientDataError(
        "audit_convergence_theory: need at least 3 recorded steps");

  const auto& dofs = audit.dof_positions;
  std::vector<Eigen::VectorXd> phis;
  phis.reserve(run.phi_history.size());
  for (const auto& full : run.phi_history) phis.push_back(restrict_to(full, dofs));

  const Eigen::VectorXd phi_bar =
      reference_phi ? restrict_to(*reference_phi, dofs) : phis.back();

  auto star_norm = [&audit](const Eigen::VectorXd& v) {
    return std::sqrt(std::max(0.0, v.dot(audit.star_gram * v)));
  };

  std::vector<double> err_norms, inc_norms;
  for (std::size_t k = 0; k < phis.size(); ++k)
    err_norms.push_back(star_norm(phis[k] - phi_bar));
  for (std::size_t k = 0; k + 1 < phis.size(); ++k)
    inc_norms.push_back(star_norm(phis[k + 1] - phis[k]));

  ConvergenceTheoryReport report;
  report.steps_checked = static_cast<int>(phis.size()) - 1;

  double scale = 1.0;
  for (double e : err_norms) scale = std::max(scale, e);
  const double tol = 1e-8 * scale;

  report.worst_error_margin = std::numeric_limits<double>::infinity();
  // The final error vanishes by construction when the proxy is the last
  // iterate, so the last comparison is skipped for the proxy case.
  const std::size_t err_last = reference_phi ? err_norms.size() - 1 : err_norms.size() - 2;
  for (std::size_t k = 0; k < err_last; ++k)
    report.worst_error_margin =
        std::min(report.worst_error_margin, err_norms[k] - err_norms[k + 1]);
  report.monotone_error_decay = report.worst_error_margin >= -tol;

  report.worst_regularity_margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < inc_norms.size(); ++k)
    report.worst_regularity_margin =
        std::min(report.worst_regularity_margin, inc_norms[k] - inc_norms[k + 1]);
  report.asymptotic_regularity = report.worst_regularity_margin >= -tol;
  return report;
}

}  // namespace kmf
