#include "cauchykmf/fem.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

#include "cauchykmf/errors.hpp"

namespace kmf {

namespace {

Point2 centroid(const Mesh& mesh, const std::array<int, 3>& tri) {
  const Point2& p0 = mesh.nodes[tri[0]];
  const Point2& p1 = mesh.nodes[tri[1]];
  const Point2& p2 = mesh.nodes[tri[2]];
  return {(p0.x + p1.x + p2.x) / 3.0, (p0.y + p1.y + p2.y) / 3.0};
}

double min_eigenvalue_sym2(const Eigen::Matrix2d& a) {
  const double s12 = 0.5 * (a(0, 1) + a(1, 0));
  const double tr = a(0, 0) + a(1, 1);
  const double disc = std::hypot(a(0, 0) - a(1, 1), 2.0 * s12);
  return 0.5 * (tr - disc);
}

std::map<int, int> segment_local_index(const BoundarySegment& seg) {
  std::map<int, int> local;
  for (std::size_t i = 0; i < seg.nodes.size(); ++i)
    local.emplace(seg.nodes[i], static_cast<int>(i));
  return local;
}

}  // namespace

EllipticCoefficients EllipticCoefficients::laplace() {
  EllipticCoefficients c;
  c.matrix = [](Point2) { return Eigen::Matrix2d::Identity(); };
  c.alpha = 1.0;
  return c;
}

AssembledSystem assemble(const Mesh& mesh, const EllipticCoefficients& coefficients) {
  if (mesh.nodes.empty() || mesh.triangles.empty())
    throw std::invalid_argument("assemble: empty mesh");
  if (!coefficients.matrix)
    throw std::invalid_argument("assemble: coefficient matrix function not set");

  const int n = static_cast<int>(mesh.nodes.size());
  std::vector<Eigen::Triplet<double>> k_trips, m_trips;
  k_trips.reserve(mesh.triangles.size() * 9);
  m_trips.reserve(mesh.triangles.size() * 9);

  for (const auto& tri : mesh.triangles) {
    const Point2& p0 = mesh.nodes[tri[0]];
    const Point2& p1 = mesh.nodes[tri[1]];
    const Point2& p2 = mesh.nodes[tri[2]];
    const double two_a = (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y);
    if (two_a <= 0.0)
      throw std::invalid_argument("assemble: triangle with non-positive area");
    const double area = 0.5 * two_a;

    const Point2 c = centroid(mesh, tri);
    const Eigen::Matrix2d a_c = coefficients.matrix(c);
    const double tol = 1e-12 * std::max(1.0, a_c.cwiseAbs().maxCoeff());
    if (min_eigenvalue_sym2(a_c) < coefficients.alpha - tol) {
      char msg[128];
      std::snprintf(msg, sizeof msg,
                    "assemble: ellipticity bound violated at (%g, %g)", c.x, c.y);
      throw InvalidCoefficientsError(msg);
    }

    // P1 basis gradients: grad(lambda_i) = (b_i, c_i) / (2A), cyclic.
    Eigen::Matrix<double, 2, 3> grads;
    grads(0, 0) = (p1.y - p2.y) / two_a;
    grads(1, 0) = (p2.x - p1.x) / two_a;
    grads(0, 1) = (p2.y - p0.y) / two_a;
    grads(1, 1) = (p0.x - p2.x) / two_a;
    grads(0, 2) = (p0.y - p1.y) / two_a;
    grads(1, 2) = (p1.x - p0.x) / two_a;

    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const double kij = area * grads.col(i).dot(a_c * grads.col(j));
        k_trips.emplace_back(tri[i], tri[j], kij);
        const double mij = (i == j) ? area / 6.0 : area / 12.0;
        m_trips.emplace_back(tri[i], tri[j], mij);
      }
    }
  }

  AssembledSystem sys;
  sys.stiffness.resize(n, n);
  sys.stiffness.setFromTriplets(k_trips.begin(), k_trips.end());
  sys.mass.resize(n, n);
  sys.mass.setFromTriplets(m_trips.begin(), m_trips.end());

  for (std::size_t s = 0; s < mesh.segments.size(); ++s) {
    const BoundarySegment& seg = mesh.segments[s];
    const auto local = segment_local_index(seg);
    std::vector<Eigen::Triplet<double>> trips;
    for (const auto& e : mesh.boundary_edges) {
      if (e.segment != static_cast<int>(s)) continue;
      const double len = std::hypot(mesh.nodes[e.b].x - mesh.nodes[e.a].x,
                                    mesh.nodes[e.b].y - mesh.nodes[e.a].y);
      const int la = local.at(e.a);
      const int lb = local.at(e.b);
      trips.emplace_back(la, la, len / 3.0);
      trips.emplace_back(lb, lb, len / 3.0);
      trips.emplace_back(la, lb, len / 6.0);
      trips.emplace_back(lb, la, len / 6.0);
    }
    Eigen::SparseMatrix<double> mg(static_cast<int>(seg.nodes.size()),
                                   static_cast<int>(seg.nodes.size()));
    mg.setFromTriplets(trips.begin(), trips.end());
    sys.boundary_mass.emplace(seg.tag.name, std::move(mg));
  }
  return sys;
}

MixedSolver::MixedSolver(const Mesh& mesh, const EllipticCoefficients& coefficients,
                         std::vector<std::string> dirichlet_tags,
                         std::shared_ptr<const AssembledSystem> system)
    : mesh_(&mesh), dirichlet_tags_(std::move(dirichlet_tags)) {
  std::sort(dirichlet_tags_.begin(), dirichlet_tags_.end());
  system_ = system ? std::move(system)
                   : std::make_shared<const AssembledSystem>(assemble(mesh, coefficients));

  std::set<int> constrained;
  for (const auto& tag : dirichlet_tags_) {
    const BoundarySegment& seg = mesh.segment(tag);
    constrained.insert(seg.nodes.begin(), seg.nodes.end());
  }
  if (constrained.empty())
    throw IllPosedBvpError("MixedSolver: pure-Neumann problem has no unique solution");
  constrained_.assign(constrained.begin(), constrained.end());

  const int n = static_cast<int>(mesh.nodes.size());
  node_to_reduced_.assign(n, -1);
  std::vector<int> node_to_constrained(n, -1);
  for (std::size_t i = 0; i < constrained_.size(); ++i)
    node_to_constrained[constrained_[i]] = static_cast<int>(i);
  for (int i = 0; i < n; ++i) {
    if (node_to_constrained[i] < 0) {
      node_to_reduced_[i] = static_cast<int>(free_.size());
      free_.push_back(i);
    }
  }

  std::vector<Eigen::Triplet<double>> ff, fc;
  const auto& k = system_->stiffness;
  for (int col = 0; col < k.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(k, col); it; ++it) {
      const int r = static_cast<int>(it.row());
      const int c = static_cast<int>(it.col());
      if (node_to_reduced_[r] < 0) continue;
      if (node_to_reduced_[c] >= 0)
        ff.emplace_back(node_to_reduced_[r], node_to_reduced_[c], it.value());
      else
        fc.emplace_back(node_to_reduced_[r], node_to_constrained[c], it.value());
    }
  }
  k_ff_.resize(static_cast<int>(free_.size()), static_cast<int>(free_.size()));
  k_ff_.setFromTriplets(ff.begin(), ff.end());
  k_fc_.resize(static_cast<int>(free_.size()), static_cast<int>(constrained_.size()));
  k_fc_.setFromTriplets(fc.begin(), fc.end());

  factorization_.compute(k_ff_);
  if (factorization_.info() != Eigen::Success)
    throw SolverFailureError("MixedSolver: factorization of the reduced stiffness failed",
                             0.0);
}

Eigen::VectorXd MixedSolver::neumann_load(
    const std::map<std::string, Eigen::VectorXd>& neumann_values) const {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<int>(mesh_->nodes.size()));
  for (const auto& [tag, values] : neumann_values) {
    const BoundarySegment& seg = mesh_->segment(tag);
    const auto it = system_->boundary_mass.find(tag);
    if (it == system_->boundary_mass.end())
      throw NotFoundError("neumann_load: no boundary mass for tag " + tag);
    if (values.size() != static_cast<Eigen::Index>(seg.nodes.size()))
      throw std::invalid_argument("neumann_load: trace length mismatch on " + tag);
    const Eigen::VectorXd local = it->second * values;
    for (std::size_t i = 0; i < seg.nodes.size(); ++i)
      b[seg.nodes[i]] += local[static_cast<Eigen::Index>(i)];
  }
  return b;
}

Field MixedSolver::solve(const std::map<std::string, Eigen::VectorXd>& dirichlet_values,
                         const std::map<std::string, Eigen::VectorXd>& neumann_values,
                         const Eigen::VectorXd* extra_load) const {
  const int n = static_cast<int>(mesh_->nodes.size());
  Field u = Field::Zero(n);

  // Shared junction nodes: the first claiming tag (sorted order) wins. In
  // well-posed data the claims agree.
  std::vector<char> claimed(n, 0);
  for (const auto& tag : dirichlet_tags_) {
    const auto it = dirichlet_values.find(tag);
    if (it == dirichlet_values.end())
      throw std::invalid_argument("solve: missing Dirichlet values for tag " + tag);
    const BoundarySegment& seg = mesh_->segment(tag);
    if (it->second.size() != static_cast<Eigen::Index>(seg.nodes.size()))
      throw std::invalid_argument("solve: Dirichlet trace length mismatch on " + tag);
    for (std::size_t i = 0; i < seg.nodes.size(); ++i) {
      const int node = seg.nodes[i];
      if (!claimed[node]) {
        u[node] = it->second[static_cast<Eigen::Index>(i)];
        claimed[node] = 1;
      }
    }
  }

  Eigen::VectorXd b = neumann_load(neumann_values);
  if (extra_load) {
    if (extra_load->size() != n)
      throw std::invalid_argument("solve: extra load has wrong size");
    b += *extra_load;
  }

  Eigen::VectorXd uc(constrained_.size());
  for (std::size_t i = 0; i < constrained_.size(); ++i)
    uc[static_cast<Eigen::Index>(i)] = u[constrained_[i]];
  Eigen::VectorXd rhs(free_.size());
  for (std::size_t i = 0; i < free_.size(); ++i)
    rhs[static_cast<Eigen::Index>(i)] = b[free_[i]];
  rhs -= k_fc_ * uc;

  const Eigen::VectorXd uf = factorization_.solve(rhs);
  if (factorization_.info() != Eigen::Success)
    throw SolverFailureError("solve: back substitution failed", -1.0);
  const double rel_res =
      (k_ff_ * uf - rhs).norm() / std::max(rhs.norm(), 1e-300);
  if (rel_res > 1e-8) {
    char msg[96];
    std::snprintf(msg, sizeof msg, "solve: relative residual %.3e exceeds 1e-8",
                  rel_res);
    throw SolverFailureError(msg, rel_res);
  }

  for (std::size_t i = 0; i < free_.size(); ++i)
    u[free_[i]] = uf[static_cast<Eigen::Index>(i)];
  return u;
}

namespace {

void check_bvp(const MixedBVP& bvp) {
  if (!bvp.mesh) throw std::invalid_argument("MixedBVP: mesh not set");
  for (const auto& seg : bvp.mesh->segments) {
    const bool in_d = bvp.dirichlet.count(seg.tag.name) > 0;
    const bool in_n = bvp.neumann.count(seg.tag.name) > 0;
    if (in_d == in_n)
      throw std::invalid_argument(
          "MixedBVP: tag " + seg.tag.name +
          " must appear in exactly one of dirichlet/neumann");
  }
  for (const auto& [tag, tf] : bvp.dirichlet) {
    bvp.mesh->segment(tag);
    if (tf.kind != TraceKind::Dirichlet)
      throw std::invalid_argument("MixedBVP: trace on " + tag + " must be Dirichlet kind");
  }
  for (const auto& [tag, tf] : bvp.neumann) {
    bvp.mesh->segment(tag);
    if (tf.kind != TraceKind::Neumann)
      throw std::invalid_argument("MixedBVP: trace on " + tag + " must be Neumann kind");
  }
}

std::map<std::string, Eigen::VectorXd> values_of(
    const std::map<std::string, TraceField>& traces) {
  std::map<std::string, Eigen::VectorXd> out;
  for (const auto& [tag, tf] : traces) out.emplace(tag, tf.values);
  return out;
}

}  // namespace

Field solve_mixed(const MixedBVP& bvp) {
  check_bvp(bvp);
  if (bvp.coefficients.semilinear)
    throw UnsupportedError("solve_mixed: problem has a semilinear term, use solve_semilinear");

  std::vector<std::string> dir_tags;
  for (const auto& [tag, tf] : bvp.dirichlet) dir_tags.push_back(tag);
  MixedSolver solver(*bvp.mesh, bvp.coefficients, dir_tags);

  std::optional<Eigen::VectorXd> extra;
  if (bvp.source)
    extra = solver.system().mass * interpolate(*bvp.mesh, bvp.source);
  return solver.solve(values_of(bvp.dirichlet), values_of(bvp.neumann),
                      extra ? &*extra : nullptr);
}

Field solve_semilinear(const MixedBVP& bvp, const Field& initial_guess,
                       double tol, int max_iter) {
  check_bvp(bvp);
  if (!bvp.coefficients.semilinear)
    throw std::invalid_argument("solve_semilinear: no semilinear term present");
  const SemilinearTerm& term = *bvp.coefficients.semilinear;
  if (!term.value)
    throw std::invalid_argument("solve_semilinear: N(u) not set");
  if (initial_guess.size() != static_cast<Eigen::Index>(bvp.mesh->nodes.size()))
    throw std::invalid_argument("solve_semilinear: initial guess has wrong size");

  std::vector<std::string> dir_tags;
  for (const auto& [tag, tf] : bvp.dirichlet) dir_tags.push_back(tag);

  EllipticCoefficients linear = bvp.coefficients;
  linear.semilinear.reset();
  MixedSolver solver(*bvp.mesh, linear, dir_tags);
  const auto& mass = solver.system().mass;

  Eigen::VectorXd b_fixed = Eigen::VectorXd::Zero(initial_guess.size());
  if (term.source) b_fixed += mass * interpolate(*bvp.mesh, term.source);
  if (bvp.source) b_fixed += mass * interpolate(*bvp.mesh, bvp.source);

  const auto dir_vals = values_of(bvp.dirichlet);
  const auto neu_vals = values_of(bvp.neumann);

  return picard_solve(solver, term, b_fixed, dir_vals, neu_vals, initial_guess,
                      tol, max_iter);
}

Field picard_solve(const MixedSolver& solver, const SemilinearTerm& term,
                   const Eigen::VectorXd& fixed_load,
                   const std::map<std::string, Eigen::VectorXd>& dirichlet,
                   const std::map<std::string, Eigen::VectorXd>& neumann,
                   const Field& initial_guess, double tol, int max_iter) {
  const auto& mass = solver.system().mass;
  Field u = initial_guess;
  std::vector<double> history;
  double damping = 1.0;
  double prev_delta = std::numeric_limits<double>::infinity();
  for (int m = 0; m < max_iter; ++m) {
    const Eigen::VectorXd n_nodal =
        u.unaryExpr([&term](double v) { return term.value(v); });
    const Eigen::VectorXd rhs_extra = fixed_load - mass * n_nodal;
    const Field u_raw = solver.solve(dirichlet, neumann, &rhs_extra);

    const double raw_delta = (u_raw - u).lpNorm<Eigen::Infinity>();
    if (raw_delta > prev_delta && damping == 1.0) damping = 0.5;
    const Field step = damping * (u_raw - u);
    u += step;
    const double delta = step.lpNorm<Eigen::Infinity>();
    history.push_back(delta);
    if (delta <= tol) return u;
    prev_delta = raw_delta;
  }
  throw NonlinearDivergenceError("picard_solve: no convergence within max_iter",
                                 std::move(history));
}

TraceField dirichlet_trace(const Mesh& mesh, const Field& field,
                           std::string_view tag_name) {
  const BoundarySegment& seg = mesh.segment(tag_name);
  TraceField tf;
  tf.tag = std::string(tag_name);
  tf.kind = TraceKind::Dirichlet;
  tf.values.resize(static_cast<Eigen::Index>(seg.nodes.size()));
  for (std::size_t i = 0; i < seg.nodes.size(); ++i)
    tf.values[static_cast<Eigen::Index>(i)] = field[seg.nodes[i]];
  return tf;
}

TraceField neumann_trace(const MixedBVP& bvp, const Field& field,
                         std::string_view tag_name) {
  if (!bvp.mesh) throw std::invalid_argument("neumann_trace: mesh not set");
  const Mesh& mesh = *bvp.mesh;
  mesh.segment(tag_name);  // tag lookup

  EllipticCoefficients linear = bvp.coefficients;
  linear.semilinear.reset();
  auto system = std::make_shared<const AssembledSystem>(assemble(mesh, linear));

  Eigen::VectorXd residual = system->stiffness * field;
  if (bvp.coefficients.semilinear) {
    const SemilinearTerm& term = *bvp.coefficients.semilinear;
    if (term.value)
      residual += system->mass *
                  field.unaryExpr([&term](double v) { return term.value(v); });
    if (term.source)
      residual -= system->mass * interpolate(mesh, term.source);
  }
  if (bvp.source) residual -= system->mass * interpolate(mesh, bvp.source);

  for (const auto& [tag, tf] : bvp.neumann) {
    if (tag == tag_name) continue;
    const BoundarySegment& seg = mesh.segment(tag);
    const Eigen::VectorXd local = system->boundary_mass.at(tag) * tf.values;
    for (std::size_t i = 0; i < seg.nodes.size(); ++i)
      residual[seg.nodes[i]] -= local[static_cast<Eigen::Index>(i)];
  }

  FluxRecovery recovery(mesh, system, std::string(tag_name));
  return recovery.recover(residual);
}

FluxRecovery::FluxRecovery(const Mesh& mesh,
                           std::shared_ptr<const AssembledSystem> system,
                           std::string tag)
    : mesh_(&mesh), system_(std::move(system)), tag_(std::move(tag)) {
  const BoundarySegment& seg = mesh_->segment(tag_);
  const int n = static_cast<int>(seg.nodes.size());
  if (seg.closed) {
    for (int i = 0; i < n; ++i) interior_local_.push_back(i);
  } else {
    for (int i = 1; i + 1 < n; ++i) interior_local_.push_back(i);
  }
  if (interior_local_.empty())
    throw std::invalid_argument("FluxRecovery: segment " + tag_ +
                                " has no interior degrees of freedom");

  const Eigen::SparseMatrix<double>& mg = system_->boundary_mass.at(tag_);
  std::vector<int> local_to_interior(n, -1);
  for (std::size_t i = 0; i < interior_local_.size(); ++i)
    local_to_interior[interior_local_[i]] = static_cast<int>(i);

  std::vector<Eigen::Triplet<double>> trips;
  for (int col = 0; col < mg.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(mg, col); it; ++it) {
      const int r = local_to_interior[static_cast<int>(it.row())];
      const int c = local_to_interior[static_cast<int>(it.col())];
      if (r >= 0 && c >= 0) trips.emplace_back(r, c, it.value());
    }
  }
  Eigen::SparseMatrix<double> m_ii(static_cast<int>(interior_local_.size()),
                                   static_cast<int>(interior_local_.size()));
  m_ii.setFromTriplets(trips.begin(), trips.end());
  factorization_.compute(m_ii);
  if (factorization_.info() != Eigen::Success)
    throw std::invalid_argument("FluxRecovery: boundary mass on " + tag_ +
                                " is singular");
}

TraceField FluxRecovery::recover(const Eigen::VectorXd& residual) const {
  const BoundarySegment& seg = mesh_->segment(tag_);
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(interior_local_.size()));
  for (std::size_t i = 0; i < interior_local_.size(); ++i)
    rhs[static_cast<Eigen::Index>(i)] = residual[seg.nodes[interior_local_[i]]];
  const Eigen::VectorXd lambda = factorization_.solve(rhs);

  TraceField tf;
  tf.tag = tag_;
  tf.kind = TraceKind::Neumann;
  tf.values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(seg.nodes.size()));
  for (std::size_t i = 0; i < interior_local_.size(); ++i)
    tf.values[interior_local_[i]] = lambda[static_cast<Eigen::Index>(i)];
  return tf;
}

Eigen::VectorXd interpolate(const Mesh& mesh, const std::function<double(Point2)>& f) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(mesh.nodes.size()));
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = f(mesh.nodes[i]);
  return v;
}

double trace_l2_norm(const AssembledSystem& system, const std::string& tag,
                     const Eigen::VectorXd& values) {
  const auto it = system.boundary_mass.find(tag);
  if (it == system.boundary_mass.end())
    throw NotFoundError("trace_l2_norm: no boundary mass for tag " + tag);
  return std::sqrt(values.dot(it->second * values));
}

double h1_norm(const AssembledSystem& system, const Field& u) {
  return std::sqrt(u.dot(system.stiffness * u) + u.dot(system.mass * u));
}

double l2_norm(const AssembledSystem& system, const Field& u) {
  return std::sqrt(u.dot(system.mass * u));
}

}  // namespace kmf
