#pragma once

#include <array>
#include <memory>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "biharm/fespace.hpp"

namespace biharm {

enum class Smoother { Id, IM, JIM };

std::string to_string(Smoother s);
Smoother smoother_from_string(const std::string& name);

/// Generalized Morley interpolation: interior vertex dofs average the
/// one-sided vertex values, interior edge dofs take the averaged mean
/// normal derivative, boundary dofs vanish.
FeFunction morley_interpolate(const Evaluable& v,
                              std::shared_ptr<const FeSpace> morley_space);

/// Matrix of the Morley interpolation restricted to a discrete space
/// (rows: Morley dofs, columns: dofs of `from`). Exact for the P2 local
/// bases of all four schemes.
Eigen::SparseMatrix<double> morley_interpolation_matrix(const FeSpace& from,
                                                        const FeSpace& morley);

/// Transfer into the C0IP space: vertex values copied, interior edge
/// midpoints take the two-sided average, boundary dofs vanish.
FeFunction transfer_to_c0ip(const FeFunction& morley_function,
                            std::shared_ptr<const FeSpace> c0ip_space);

class CompanionOperator;

/// Globally C1 output of the companion operator: per triangle a cubic on
/// the 3-subtriangle Clough-Tocher split plus a P2 bubble correction
/// b_K^2 q_K. Vanishes with its gradient on the domain boundary.
class C1Function : public Evaluable {
public:
  C1Function(std::shared_ptr<const CompanionOperator> op, Eigen::VectorXd dofs);

  Evaluation evaluate(int tri, const Eigen::Vector2d& x) const override;
  int polynomial_degree() const override { return 8; }
  bool on_subtriangles() const override { return true; }

  const Eigen::VectorXd& dofs() const { return dofs_; }
  const CompanionOperator& op() const { return *op_; }

private:
  std::shared_ptr<const CompanionOperator> op_;
  Eigen::VectorXd dofs_;
};

/// The right-inverse J of the Morley interpolation, precomputed for one
/// triangulation. The construction interpolates the Morley vertex values,
/// averaged vertex gradients and edge normal-derivative means with a
/// reduced Hsieh-Clough-Tocher macro element, then adds the bubble
/// correction b_K^2 q_K with q_K in P2(K) so that v_M - J v_M is
/// L2-orthogonal to P2 on every triangle.
///
/// Exposes its action as a sparse matrix from Morley coefficients to the
/// companion dof vector [vertex values | gradients x | gradients y |
/// edge means | bubble coefficients], plus local evaluation of the
/// per-triangle companion basis for assembly.
class CompanionOperator
    : public std::enable_shared_from_this<CompanionOperator> {
public:
  static std::shared_ptr<const CompanionOperator> make(
      std::shared_ptr<const FeSpace> morley_space);

  const FeSpace& morley_space() const { return *morley_; }
  const Triangulation& mesh() const { return morley_->mesh(); }

  C1Function apply(const FeFunction& morley_function) const;

  /// Companion dofs as a linear image of the Morley coefficients.
  const Eigen::SparseMatrix<double>& dof_matrix() const { return dof_matrix_; }
  int dof_count() const { return n_dofs_; }

  /// 18 local companion dofs of a triangle: 12 Hsieh-Clough-Tocher dofs
  /// (3 values, 6 gradient components, 3 edge means) and 6 bubble
  /// coefficients.
  static constexpr int local_dofs = 18;
  std::array<int, local_dofs> local_dof_ids(int tri) const;

  /// Value/gradient/Hessian of the local companion basis function for
  /// local dof d at x in triangle tri.
  Evaluation eval_local_basis(int tri, int d, const Eigen::Vector2d& x) const;

  /// Evaluates the companion function given the global dof vector.
  Evaluation evaluate(const Eigen::VectorXd& dofs, int tri,
                      const Eigen::Vector2d& x) const;

private:
  explicit CompanionOperator(std::shared_ptr<const FeSpace> morley_space);

  struct TriangleData {
    Eigen::Vector2d center;
    double h = 1.0;
    // columns: scaled cubic coefficients (3 subtriangles x 10) of the HCT
    // basis for the 12 scaled local dofs
    Eigen::Matrix<double, 30, 12> hct;
    std::array<Eigen::Vector2d, 3> scaled_vertices;
  };

  void build_triangle(int t);
  void build_dof_matrix();
  int find_subtriangle(int tri, const Eigen::Vector2d& x) const;
  // scaled local dof scaling factors (1 for values, h for derivatives)
  static Eigen::Matrix<double, 12, 1> dof_scaling(double h);

  std::shared_ptr<const FeSpace> morley_;
  std::vector<TriangleData> tri_data_;
  // per triangle: bubble coefficient responses to local Morley coefficients
  // and to the physical local HCT dofs
  std::vector<Eigen::Matrix<double, 6, 6>> bubble_from_morley_;
  std::vector<Eigen::Matrix<double, 6, 12>> bubble_from_hct_;
  Eigen::SparseMatrix<double> dof_matrix_;
  int n_dofs_ = 0;

  friend class C1Function;
};

/// Smoother application per the scheme definition: id returns the input,
/// IM its Morley interpolation, JIM the companion of the interpolation.
std::shared_ptr<const Evaluable> apply_smoother(
    Smoother tag, const FeFunction& v,
    std::shared_ptr<const FeSpace> morley_space,
    std::shared_ptr<const CompanionOperator> companion);

}  // namespace biharm
