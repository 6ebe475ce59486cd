#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "biharm/mesh.hpp"
#include "biharm/quadrature.hpp"

namespace biharm {

enum class Scheme { Morley, DG, C0IP, WOPSIP };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& name);

/// Value, gradient and Hessian of a piecewise function at one point.
struct Evaluation {
  double value = 0.0;
  Eigen::Vector2d gradient = Eigen::Vector2d::Zero();
  Eigen::Matrix2d hessian = Eigen::Matrix2d::Zero();
};

/// A function that can be evaluated triangle-by-triangle to second
/// derivatives. Implemented by FeFunction, the companion output and the
/// manufactured solutions.
class Evaluable {
public:
  virtual ~Evaluable() = default;
  virtual Evaluation evaluate(int tri, const Eigen::Vector2d& x) const = 0;
  /// Polynomial degree per triangle, or -1 for general smooth functions.
  virtual int polynomial_degree() const { return -1; }
  /// True if the function is only piecewise polynomial on the Clough-Tocher
  /// subtriangles (companion outputs); integrals then split accordingly.
  virtual bool on_subtriangles() const { return false; }
};

/// Scheme-tagged discrete space with 6 local P2 dofs per triangle.
///
/// Local dof order: 0..2 vertex dofs, 3..5 edge dofs (edge j opposite local
/// vertex j). Morley uses vertex values and mean normal derivatives (with
/// the global edge normal), the Lagrange schemes vertex and edge-midpoint
/// values. Homogeneous boundary conditions are enforced by eliminating the
/// constrained dofs: global_dof() returns -1 there and coefficients are
/// treated as zero.
class FeSpace {
public:
  FeSpace(const Triangulation& mesh, Scheme scheme);
  // the space aliases the mesh, so temporaries are rejected
  FeSpace(Triangulation&&, Scheme) = delete;

  const Triangulation& mesh() const { return *mesh_; }
  Scheme scheme() const { return scheme_; }
  int dim() const { return dim_; }
  static constexpr int local_dofs = 6;

  int global_dof(int tri, int local) const { return dof_map_[tri][local]; }

  /// Evaluates all six local basis functions at x in triangle t.
  void eval_basis(int tri, const Eigen::Vector2d& x,
                  std::array<Evaluation, 6>& out) const;

  /// Applies the six local dof functionals of triangle `tri` to a function;
  /// for Morley these are vertex values and edge-mean normal derivatives
  /// (computed with an edge rule exact for the integrand of smooth inputs).
  std::array<double, 6> local_dof_values(int tri, const Evaluable& f) const;

private:
  void build_morley_basis();

  const Triangulation* mesh_;
  Scheme scheme_;
  int dim_ = 0;
  std::vector<std::array<int, 6>> dof_map_;
  // Morley only: per triangle, 6x6 coefficient matrix of the local basis in
  // the scaled monomial frame (column a = coefficients of basis a).
  std::vector<Eigen::Matrix<double, 6, 6>> morley_coeff_;
};

/// Discrete function: coefficient vector over the unconstrained dofs.
class FeFunction : public Evaluable {
public:
  explicit FeFunction(std::shared_ptr<const FeSpace> space)
      : space_(std::move(space)),
        coeffs_(Eigen::VectorXd::Zero(space_->dim())) {}
  FeFunction(std::shared_ptr<const FeSpace> space, Eigen::VectorXd coeffs);

  const FeSpace& space() const { return *space_; }
  std::shared_ptr<const FeSpace> space_ptr() const { return space_; }
  Eigen::VectorXd& coeffs() { return coeffs_; }
  const Eigen::VectorXd& coeffs() const { return coeffs_; }

  Evaluation evaluate(int tri, const Eigen::Vector2d& x) const override;
  int polynomial_degree() const override { return 2; }

  /// Plain-text save/load keyed by scheme tag and mesh content hash.
  void save(const std::filesystem::path& file) const;
  static FeFunction load(const std::filesystem::path& file,
                         std::shared_ptr<const FeSpace> space);

private:
  std::shared_ptr<const FeSpace> space_;
  Eigen::VectorXd coeffs_;
};

/// Two components on the same space (vectorised problems).
class VectorFeFunction {
public:
  explicit VectorFeFunction(std::shared_ptr<const FeSpace> space)
      : u_(space), v_(space) {}
  VectorFeFunction(FeFunction u, FeFunction v);

  FeFunction& first() { return u_; }
  const FeFunction& first() const { return u_; }
  FeFunction& second() { return v_; }
  const FeFunction& second() const { return v_; }

private:
  FeFunction u_, v_;
};

/// Jump of value and normal derivative across edge e at edge parameter
/// s in [0,1] (measured from the lower-indexed vertex). Interior edges
/// return the K+ trace minus the K- trace; boundary edges the trace itself.
struct TraceJump {
  double value_jump = 0.0;
  double normal_derivative_jump = 0.0;
};
TraceJump trace_jump(const Evaluable& f, const Triangulation& mesh, int e, double s);

/// Mean value {f} and jump [f] evaluations of value/gradient/Hessian on an
/// edge; boundary edges use the trace for both.
struct EdgeTraces {
  Evaluation plus;
  Evaluation minus;  // equals plus on boundary edges
};
EdgeTraces edge_traces(const Evaluable& f, const Triangulation& mesh, int e,
                       const Eigen::Vector2d& x);

/// Per-triangle integral means of the Hessian (the piecewise-constant
/// L2 projection Pi_0 applied to D^2 f).
std::vector<Eigen::Matrix2d> project_pw_constant_hessian(const Evaluable& f,
                                                         const Triangulation& mesh,
                                                         int quad_degree = 8);

/// L2 norm of (1 - Pi_0) D^2 f, the comparison reference quantity.
double hessian_oscillation(const Evaluable& f, const Triangulation& mesh,
                           int quad_degree = 8);

}  // namespace biharm
