#include "biharm/problems.hpp"

#include <cmath>

namespace biharm {

std::string to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::Biharmonic: return "biharmonic";
    case ProblemKind::NavierStokes: return "navier_stokes";
    case ProblemKind::VonKarman: return "von_karman";
  }
  return "?";
}

ProblemKind problem_from_string(const std::string& name) {
  if (name == "biharmonic") return ProblemKind::Biharmonic;
  if (name == "navier_stokes" || name == "ns") return ProblemKind::NavierStokes;
  if (name == "von_karman" || name == "vk") return ProblemKind::VonKarman;
  throw Error("config_error", "unknown problem kind '" + name + "'");
}

SourceFunctional SourceFunctional::density(Density f) {
  SourceFunctional s;
  s.density_ = std::move(f);
  return s;
}

SourceFunctional SourceFunctional::point_load(const Eigen::Vector2d& position,
                                              double magnitude) {
  SourceFunctional s;
  s.point_ = true;
  s.position_ = position;
  s.magnitude_ = magnitude;
  return s;
}

SourceFunctional SourceFunctional::zero() {
  return density([](const Eigen::Vector2d&) { return 0.0; });
}

namespace {

// integrates fn(t, x, w) over the mesh, on the Clough-Tocher subtriangles
// when requested
template <typename Fn>
void integrate_elements(const Triangulation& mesh, int degree, bool subtriangles,
                        Fn&& fn) {
  const QuadratureRule rule = triangle_rule(degree);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    if (!subtriangles) {
      for_each_point(mesh, t, rule,
                     [&](const Eigen::Vector2d& x, double w) { fn(t, x, w); });
    } else {
      const auto& tri = mesh.triangle(t);
      const Eigen::Vector2d c = mesh.centroid(t);
      for (int s = 0; s < 3; ++s)
        for_each_point(mesh.vertex(tri[s]), mesh.vertex(tri[(s + 1) % 3]), c, rule,
                       [&](const Eigen::Vector2d& x, double w) { fn(t, x, w); });
    }
  }
}

int trilinear_rule_degree(const Evaluable& a, const Evaluable& b,
                          const Evaluable& c, bool& subtriangles) {
  subtriangles =
      a.on_subtriangles() || b.on_subtriangles() || c.on_subtriangles();
  if (subtriangles) return 14;
  if (a.polynomial_degree() < 0 || b.polynomial_degree() < 0 ||
      c.polynomial_degree() < 0)
    return 10;
  return 4;
}

double ns_kernel(const Evaluation& phi, const Evaluation& chi,
                 const Evaluation& psi) {
  const double lap = phi.hessian.trace();
  return lap * (chi.gradient.y() * psi.gradient.x() -
                chi.gradient.x() * psi.gradient.y());
}

}  // namespace

double ns_trilinear(const Evaluable& phi, const Evaluable& chi, const Evaluable& psi,
                    const Triangulation& mesh) {
  bool subtriangles = false;
  const int degree = trilinear_rule_degree(phi, chi, psi, subtriangles);
  double sum = 0.0;
  integrate_elements(mesh, degree, subtriangles,
                     [&](int t, const Eigen::Vector2d& x, double w) {
                       sum += w * ns_kernel(phi.evaluate(t, x), chi.evaluate(t, x),
                                            psi.evaluate(t, x));
                     });
  return sum;
}

double vk_bracket(const Eigen::Matrix2d& a, const Eigen::Matrix2d& b) {
  return a(0, 0) * b(1, 1) + a(1, 1) * b(0, 0) - 2.0 * a(0, 1) * b(0, 1);
}

double vk_gamma(const Evaluable& eta, const Evaluable& chi, const Evaluable& phi,
                const Triangulation& mesh) {
  bool subtriangles = false;
  const int degree = trilinear_rule_degree(eta, chi, phi, subtriangles);
  double sum = 0.0;
  integrate_elements(mesh, degree, subtriangles,
                     [&](int t, const Eigen::Vector2d& x, double w) {
                       sum += w * vk_bracket(eta.evaluate(t, x).hessian,
                                             chi.evaluate(t, x).hessian) *
                              phi.evaluate(t, x).value;
                     });
  return -0.5 * sum;
}

double vk_vector_gamma(const EvaluablePair& xi, const EvaluablePair& theta,
                       const EvaluablePair& phi, const Triangulation& mesh) {
  return vk_gamma(*xi.first, *theta.second, *phi.first, mesh) +
         vk_gamma(*xi.second, *theta.first, *phi.first, mesh) -
         vk_gamma(*xi.first, *theta.first, *phi.second, mesh);
}

double apply_source(const SourceFunctional& F, const C1Function& w) {
  const Triangulation& mesh = w.op().mesh();
  if (F.is_point_load()) {
    const int t = mesh.locate(F.position());
    if (t < 0)
      throw Error("source_error", "point load lies outside the domain");
    return F.magnitude() * w.evaluate(t, F.position()).value;
  }
  double sum = 0.0;
  integrate_elements(mesh, 14, true, [&](int t, const Eigen::Vector2d& x, double ww) {
    sum += ww * F.density_at(x) * w.evaluate(t, x).value;
  });
  return sum;
}

// ---------------------------------------------------------------------------
// DiscreteProblem

namespace {

enum class Side { Vh, Morley, Companion };

Side side_of(Smoother s) {
  switch (s) {
    case Smoother::Id: return Side::Vh;
    case Smoother::IM: return Side::Morley;
    case Smoother::JIM: return Side::Companion;
  }
  return Side::Vh;
}

Eigen::SparseMatrix<double> block_diag2(const Eigen::SparseMatrix<double>& a) {
  const int n = static_cast<int>(a.rows());
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(2 * a.nonZeros());
  for (int k = 0; k < a.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, k); it; ++it) {
      trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                         it.value());
      trips.emplace_back(n + static_cast<int>(it.row()),
                         n + static_cast<int>(it.col()), it.value());
    }
  Eigen::SparseMatrix<double> out(2 * n, 2 * n);
  out.setFromTriplets(trips.begin(), trips.end());
  out.makeCompressed();
  return out;
}

void append_block(std::vector<Eigen::Triplet<double>>& trips,
                  const Eigen::SparseMatrix<double>& a, int row0, int col0,
                  double scale) {
  for (int k = 0; k < a.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, k); it; ++it)
      trips.emplace_back(row0 + static_cast<int>(it.row()),
                         col0 + static_cast<int>(it.col()), scale * it.value());
}

}  // namespace

DiscreteProblem::DiscreteProblem(ProblemSpec spec,
                                 std::shared_ptr<const FeSpace> space)
    : spec_(std::move(spec)), space_(std::move(space)) {
  spec_.params.validate();
  if (spec_.source.is_point_load() &&
      space_->mesh().locate(spec_.source.position()) < 0)
    throw Error("source_error", "point load lies outside the domain");

  morley_ = space_->scheme() == Scheme::Morley
                ? space_
                : std::make_shared<FeSpace>(space_->mesh(), Scheme::Morley);
  companion_ = CompanionOperator::make(morley_);
  interp_ = morley_interpolation_matrix(*space_, *morley_);
  companion_chain_ = companion_->dof_matrix() * interp_;

  SparseMatrix a = scheme_form(*space_, spec_.params);
  SparseMatrix m = norm_gram_matrix(*space_, spec_.params);
  if (components() == 2) {
    scheme_matrix_.mat = block_diag2(a.mat);
    scheme_matrix_.symmetric = a.symmetric;
    gram_.mat = block_diag2(m.mat);
    gram_.symmetric = true;
  } else {
    scheme_matrix_ = std::move(a);
    gram_ = std::move(m);
  }
  load_ = assemble_load();
}

FeFunction DiscreteProblem::extract(const Eigen::VectorXd& x, int component) const {
  const int n = space_->dim();
  return FeFunction(space_, x.segment(component * n, n));
}

std::shared_ptr<const Evaluable> DiscreteProblem::smoothed(const FeFunction& v,
                                                           Smoother tag) const {
  return apply_smoother(tag, v, morley_, companion_);
}

namespace {

// evaluated local basis of one representation side on a triangle
struct LocalBasis {
  int count = 0;
  std::array<int, 18> global{};
  std::array<Evaluation, 18> eval{};
};

}  // namespace

// Local basis access shared by the residual and Jacobian assemblers.
namespace {

void eval_side(Side side, const FeSpace& vh, const FeSpace& morley,
               const CompanionOperator& comp, int t, const Eigen::Vector2d& x,
               LocalBasis& out) {
  switch (side) {
    case Side::Vh:
    case Side::Morley: {
      const FeSpace& s = (side == Side::Vh) ? vh : morley;
      std::array<Evaluation, 6> basis;
      s.eval_basis(t, x, basis);
      out.count = 6;
      for (int l = 0; l < 6; ++l) {
        out.global[l] = s.global_dof(t, l);
        out.eval[l] = basis[l];
      }
      break;
    }
    case Side::Companion: {
      out.count = CompanionOperator::local_dofs;
      const auto ids = comp.local_dof_ids(t);
      for (int d = 0; d < out.count; ++d) {
        out.global[d] = ids[d];
        out.eval[d] = comp.eval_local_basis(t, d, x);
      }
      break;
    }
  }
}

int side_dim(Side side, const FeSpace& vh, const FeSpace& morley,
             const CompanionOperator& comp) {
  switch (side) {
    case Side::Vh: return vh.dim();
    case Side::Morley: return morley.dim();
    case Side::Companion: return comp.dof_count();
  }
  return 0;
}

}  // namespace

Eigen::VectorXd DiscreteProblem::assemble_gamma_residual(
    const Eigen::VectorXd& x) const {
  const Triangulation& mesh = space_->mesh();
  const Side test_side = side_of(spec_.S);
  const bool subtriangles =
      spec_.R == Smoother::JIM || spec_.S == Smoother::JIM;
  const int degree = subtriangles ? 14 : 4;
  const int tdim = side_dim(test_side, *space_, *morley_, *companion_);
  Eigen::VectorXd rho = Eigen::VectorXd::Zero(tdim);
  LocalBasis test;

  if (spec_.kind == ProblemKind::NavierStokes) {
    const auto w = smoothed(extract(x, 0), spec_.R);
    integrate_elements(mesh, degree, subtriangles,
                       [&](int t, const Eigen::Vector2d& p, double wq) {
                         const Evaluation we = w->evaluate(t, p);
                         const double lap = we.hessian.trace();
                         const Eigen::Vector2d field(lap * we.gradient.y(),
                                                     -lap * we.gradient.x());
                         eval_side(test_side, *space_, *morley_, *companion_, t, p,
                                   test);
                         for (int i = 0; i < test.count; ++i) {
                           if (test.global[i] < 0) continue;
                           rho[test.global[i]] +=
                               wq * field.dot(test.eval[i].gradient);
                         }
                       });
  } else {  // von Karman
    const auto a = smoothed(extract(x, 0), spec_.R);
    const auto b = smoothed(extract(x, 1), spec_.R);
    Eigen::VectorXd rho2 = Eigen::VectorXd::Zero(tdim);
    integrate_elements(
        mesh, degree, subtriangles, [&](int t, const Eigen::Vector2d& p, double wq) {
          const Eigen::Matrix2d ha = a->evaluate(t, p).hessian;
          const Eigen::Matrix2d hb = b->evaluate(t, p).hessian;
          const double r1 = -vk_bracket(ha, hb);
          const double r2 = 0.5 * vk_bracket(ha, ha);
          eval_side(test_side, *space_, *morley_, *companion_, t, p, test);
          for (int i = 0; i < test.count; ++i) {
            if (test.global[i] < 0) continue;
            rho[test.global[i]] += wq * r1 * test.eval[i].value;
            rho2[test.global[i]] += wq * r2 * test.eval[i].value;
          }
        });
    rho.conservativeResize(2 * tdim);
    rho.tail(tdim) = rho2;
  }

  // map the test representation back onto V_h
  auto map_back = [&](const Eigen::VectorXd& r) -> Eigen::VectorXd {
    switch (test_side) {
      case Side::Vh: return r;
      case Side::Morley: return interp_.transpose() * r;
      case Side::Companion: return companion_chain_.transpose() * r;
    }
    return r;
  };
  if (components() == 1) return map_back(rho);
  Eigen::VectorXd out(n_unknowns());
  out.head(space_->dim()) = map_back(rho.head(tdim));
  out.tail(space_->dim()) = map_back(rho.tail(tdim));
  return out;
}

Eigen::VectorXd DiscreteProblem::residual(const Eigen::VectorXd& x) const {
  if (x.size() != n_unknowns())
    throw Error("problem_error", "iterate length mismatch");
  Eigen::VectorXd r = scheme_matrix_.mat * x - load_;
  if (spec_.kind != ProblemKind::Biharmonic) r += assemble_gamma_residual(x);
  return r;
}

SparseMatrix DiscreteProblem::assemble_gamma_jacobian(
    const Eigen::VectorXd& x) const {
  const Triangulation& mesh = space_->mesh();
  const Side trial_side = side_of(spec_.R);
  const Side test_side = side_of(spec_.S);
  const bool subtriangles =
      spec_.R == Smoother::JIM || spec_.S == Smoother::JIM;
  const int degree = subtriangles ? 14 : 4;
  const int rows = side_dim(test_side, *space_, *morley_, *companion_);
  const int cols = side_dim(trial_side, *space_, *morley_, *companion_);

  auto map_matrix = [&](Side side) -> const Eigen::SparseMatrix<double>* {
    switch (side) {
      case Side::Vh: return nullptr;  // identity
      case Side::Morley: return &interp_;
      case Side::Companion: return &companion_chain_;
    }
    return nullptr;
  };
  const Eigen::SparseMatrix<double>* trial_map = map_matrix(trial_side);
  const Eigen::SparseMatrix<double>* test_map = map_matrix(test_side);

  auto compose = [&](const std::vector<Eigen::Triplet<double>>& trips)
      -> Eigen::SparseMatrix<double> {
    Eigen::SparseMatrix<double> g(rows, cols);
    g.setFromTriplets(trips.begin(), trips.end());
    Eigen::SparseMatrix<double> out = g;
    if (trial_map) out = Eigen::SparseMatrix<double>(out * (*trial_map));
    if (test_map)
      out = Eigen::SparseMatrix<double>(test_map->transpose() * out);
    out.makeCompressed();
    return out;
  };

  LocalBasis trial, test;
  SparseMatrix result;
  if (spec_.kind == ProblemKind::NavierStokes) {
    const auto w = smoothed(extract(x, 0), spec_.R);
    std::vector<Eigen::Triplet<double>> trips;
    integrate_elements(
        mesh, degree, subtriangles, [&](int t, const Eigen::Vector2d& p, double wq) {
          const Evaluation we = w->evaluate(t, p);
          eval_side(trial_side, *space_, *morley_, *companion_, t, p, trial);
          eval_side(test_side, *space_, *morley_, *companion_, t, p, test);
          for (int i = 0; i < test.count; ++i) {
            if (test.global[i] < 0) continue;
            for (int j = 0; j < trial.count; ++j) {
              if (trial.global[j] < 0) continue;
              const double v = ns_kernel(we, trial.eval[j], test.eval[i]) +
                               ns_kernel(trial.eval[j], we, test.eval[i]);
              if (v != 0.0) trips.emplace_back(test.global[i], trial.global[j], wq * v);
            }
          }
        });
    result.mat = compose(trips);
    result.symmetric = false;
    return result;
  }

  // von Karman: blocks from the bracket matrices with the smoothed iterate
  const auto a = smoothed(extract(x, 0), spec_.R);
  const auto b = smoothed(extract(x, 1), spec_.R);
  std::vector<Eigen::Triplet<double>> trips_a, trips_b;
  integrate_elements(
      mesh, degree, subtriangles, [&](int t, const Eigen::Vector2d& p, double wq) {
        const Eigen::Matrix2d ha = a->evaluate(t, p).hessian;
        const Eigen::Matrix2d hb = b->evaluate(t, p).hessian;
        eval_side(trial_side, *space_, *morley_, *companion_, t, p, trial);
        eval_side(test_side, *space_, *morley_, *companion_, t, p, test);
        for (int i = 0; i < test.count; ++i) {
          if (test.global[i] < 0) continue;
          for (int j = 0; j < trial.count; ++j) {
            if (trial.global[j] < 0) continue;
            const double base = wq * test.eval[i].value;
            trips_a.emplace_back(test.global[i], trial.global[j],
                                 base * vk_bracket(ha, trial.eval[j].hessian));
            trips_b.emplace_back(test.global[i], trial.global[j],
                                 base * vk_bracket(hb, trial.eval[j].hessian));
          }
        }
      });
  const Eigen::SparseMatrix<double> Ma = compose(trips_a);
  const Eigen::SparseMatrix<double> Mb = compose(trips_b);
  const int n = space_->dim();
  std::vector<Eigen::Triplet<double>> blocks;
  append_block(blocks, Mb, 0, 0, -1.0);  // -int [b, xi1] phi1
  append_block(blocks, Ma, 0, n, -1.0);  // -int [a, xi2] phi1
  append_block(blocks, Ma, n, 0, +1.0);  // +int [a, xi1] phi2
  result.mat.resize(2 * n, 2 * n);
  result.mat.setFromTriplets(blocks.begin(), blocks.end());
  result.mat.makeCompressed();
  result.symmetric = false;
  return result;
}

SparseMatrix DiscreteProblem::jacobian(const Eigen::VectorXd& x) const {
  if (x.size() != n_unknowns())
    throw Error("problem_error", "iterate length mismatch");
  if (spec_.kind == ProblemKind::Biharmonic) return scheme_matrix_;
  SparseMatrix gamma = assemble_gamma_jacobian(x);
  SparseMatrix out;
  out.mat = scheme_matrix_.mat + gamma.mat;
  out.mat.makeCompressed();
  out.symmetric = false;
  return out;
}

Eigen::VectorXd DiscreteProblem::assemble_load() const {
  const Triangulation& mesh = space_->mesh();
  const int cdim = companion_->dof_count();

  auto companion_functional = [&](const SourceFunctional& F) -> Eigen::VectorXd {
    Eigen::VectorXd rho = Eigen::VectorXd::Zero(cdim);
    if (F.is_point_load()) {
      const int t = mesh.locate(F.position());
      const auto ids = companion_->local_dof_ids(t);
      for (int d = 0; d < CompanionOperator::local_dofs; ++d)
        rho[ids[d]] += F.magnitude() *
                       companion_->eval_local_basis(t, d, F.position()).value;
      return rho;
    }
    integrate_elements(mesh, 14, true, [&](int t, const Eigen::Vector2d& p, double w) {
      const double f = F.density_at(p);
      if (f == 0.0) return;
      const auto ids = companion_->local_dof_ids(t);
      for (int d = 0; d < CompanionOperator::local_dofs; ++d)
        rho[ids[d]] += w * f * companion_->eval_local_basis(t, d, p).value;
    });
    return rho;
  };

  const Eigen::VectorXd first =
      companion_chain_.transpose() * companion_functional(spec_.source);
  if (components() == 1) return first;
  Eigen::VectorXd out(n_unknowns());
  out.head(space_->dim()) = first;
  out.tail(space_->dim()) =
      companion_chain_.transpose() * companion_functional(spec_.source_second);
  return out;
}

}  // namespace biharm
