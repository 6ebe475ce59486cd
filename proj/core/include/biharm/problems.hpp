#pragma once

#include <functional>
#include <memory>
#include <optional>

#include "biharm/forms.hpp"
#include "biharm/manufactured.hpp"
#include "biharm/transfer.hpp"

namespace biharm {

enum class ProblemKind { Biharmonic, NavierStokes, VonKarman };

std::string to_string(ProblemKind k);
ProblemKind problem_from_string(const std::string& name);

/// Right-hand side functional: a pointwise density f, or a point load
/// (Dirac) at a strictly interior location. Well defined against C1
/// companion outputs in either case.
class SourceFunctional {
public:
  using Density = std::function<double(const Eigen::Vector2d&)>;

  static SourceFunctional density(Density f);
  static SourceFunctional point_load(const Eigen::Vector2d& position,
                                     double magnitude);
  static SourceFunctional zero();

  bool is_point_load() const { return point_; }
  const Eigen::Vector2d& position() const { return position_; }
  double magnitude() const { return magnitude_; }
  double density_at(const Eigen::Vector2d& x) const { return density_(x); }

private:
  SourceFunctional() = default;
  bool point_ = false;
  Density density_;
  Eigen::Vector2d position_ = Eigen::Vector2d::Zero();
  double magnitude_ = 0.0;
};

struct NewtonControls {
  double tolerance = 1e-10;  // absolute, on the scheme norm of the correction
  int max_iterations = 30;
};

/// Everything that pins down one discrete problem: equation, scheme,
/// penalties, the smoother pair (R,S) in the trilinear term, the source
/// and the Newton controls. The source smoother Q is fixed to JI_M.
struct ProblemSpec {
  ProblemKind kind = ProblemKind::Biharmonic;
  Scheme scheme = Scheme::Morley;
  SchemeParams params;
  Smoother R = Smoother::Id;
  Smoother S = Smoother::Id;
  SourceFunctional source = SourceFunctional::zero();
  SourceFunctional source_second = SourceFunctional::zero();  // von Karman only
  NewtonControls newton;
};

/// Gamma_pw(phi,chi,psi) = sum_K int_K Delta phi (chi_y psi_x - chi_x psi_y).
double ns_trilinear(const Evaluable& phi, const Evaluable& chi, const Evaluable& psi,
                    const Triangulation& mesh);

/// Von Karman bracket of two Hessians: a_xx b_yy + a_yy b_xx - 2 a_xy b_xy.
double vk_bracket(const Eigen::Matrix2d& a, const Eigen::Matrix2d& b);

/// gamma_pw(eta,chi,phi) = -1/2 sum_K int_K [eta,chi] phi dx.
double vk_gamma(const Evaluable& eta, const Evaluable& chi, const Evaluable& phi,
                const Triangulation& mesh);

/// Vectorised trilinear form Gamma_pw(Xi,Theta,Phi) =
/// gamma(xi1,theta2,phi1) + gamma(xi2,theta1,phi1) - gamma(xi1,theta1,phi2).
struct EvaluablePair {
  const Evaluable* first;
  const Evaluable* second;
};
double vk_vector_gamma(const EvaluablePair& xi, const EvaluablePair& theta,
                       const EvaluablePair& phi, const Triangulation& mesh);

/// F(w) for a globally C1 test function w: density quadrature or point
/// evaluation.
double apply_source(const SourceFunctional& F, const C1Function& w);

/// Residual and Jacobian assembly for one problem bound to a discrete
/// space. Precomputes the Morley interpolation matrix, the companion dof
/// matrix and the smoothed load vector. Von Karman problems use stacked
/// coefficient vectors [u; v] and 2x2 block operators.
class DiscreteProblem {
public:
  DiscreteProblem(ProblemSpec spec, std::shared_ptr<const FeSpace> space);

  const ProblemSpec& spec() const { return spec_; }
  const FeSpace& space() const { return *space_; }
  std::shared_ptr<const FeSpace> space_ptr() const { return space_; }
  std::shared_ptr<const FeSpace> morley_space_ptr() const { return morley_; }
  std::shared_ptr<const CompanionOperator> companion() const { return companion_; }
  const Triangulation& mesh() const { return space_->mesh(); }

  int components() const { return spec_.kind == ProblemKind::VonKarman ? 2 : 1; }
  int n_unknowns() const { return components() * space_->dim(); }

  /// N_h at the iterate, indexed by unconstrained dofs.
  Eigen::VectorXd residual(const Eigen::VectorXd& x) const;
  /// Exact Frechet derivative of the residual.
  SparseMatrix jacobian(const Eigen::VectorXd& x) const;

  const SparseMatrix& scheme_matrix() const { return scheme_matrix_; }
  /// Gram matrix of the scheme norm, block-diagonal for two components.
  const SparseMatrix& gram_matrix() const { return gram_; }
  const Eigen::VectorXd& load_vector() const { return load_; }

  FeFunction extract(const Eigen::VectorXd& x, int component = 0) const;
  std::shared_ptr<const Evaluable> smoothed(const FeFunction& v, Smoother tag) const;

private:
  Eigen::VectorXd assemble_gamma_residual(const Eigen::VectorXd& x) const;
  SparseMatrix assemble_gamma_jacobian(const Eigen::VectorXd& x) const;
  Eigen::VectorXd assemble_load() const;

  ProblemSpec spec_;
  std::shared_ptr<const FeSpace> space_;
  std::shared_ptr<const FeSpace> morley_;
  std::shared_ptr<const CompanionOperator> companion_;
  Eigen::SparseMatrix<double> interp_;           // Morley dofs <- V_h dofs
  Eigen::SparseMatrix<double> companion_chain_;  // companion dofs <- V_h dofs
  SparseMatrix scheme_matrix_;
  SparseMatrix gram_;
  Eigen::VectorXd load_;
};

}  // namespace biharm
