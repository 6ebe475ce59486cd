#pragma once

#include <filesystem>

#include <Eigen/Sparse>

#include "biharm/fespace.hpp"

namespace biharm {

/// Penalty constants and the dG symmetrization parameter.
struct SchemeParams {
  double sigma1 = 20.0;   // dG value-jump penalty
  double sigma2 = 20.0;   // dG normal-derivative penalty
  double sigma_ip = 20.0; // C0IP penalty
  double theta = 1.0;     // dG/C0IP symmetrization, in [-1,1]

  void validate() const;
};

/// Assembled sparse operator with a symmetry tag; wraps the compressed
/// Eigen storage.
struct SparseMatrix {
  Eigen::SparseMatrix<double> mat;
  bool symmetric = false;

  int rows() const { return static_cast<int>(mat.rows()); }
  int cols() const { return static_cast<int>(mat.cols()); }
  /// max |A - A^T| over all entries.
  double asymmetry() const;
  /// Coordinate text format: header "rows cols nnz", then "i j value" lines.
  void save_coordinate_format(const std::filesystem::path& file) const;
};

/// Piecewise Hessian form a_pw(v,w) = sum_K int_K D^2 v : D^2 w dx.
SparseMatrix assemble_apw(const FeSpace& space);

/// dG/C0IP consistency part b_h(v,w) = -theta J(v,w) - J(w,v) with
/// J(v,w) = sum_E int_E <D^2 v nu_E> . [grad w] ds. Zero for Morley and
/// WOPSIP.
SparseMatrix assemble_consistency(const FeSpace& space, double theta);

/// Penalty form per scheme: c_dG, c_IP or c_P; zero for Morley.
SparseMatrix assemble_penalty(const FeSpace& space, const SchemeParams& params);

/// The full scheme form a_h = a_pw + b_h + c_h.
SparseMatrix scheme_form(const FeSpace& space, const SchemeParams& params);

enum class NormTag {
  EnergyPw,  // ||| . |||_pw = || D^2_pw . ||
  H,         // || . ||_h   (energy + j_h jumps)
  DG,        // || . ||_dG
  IP,        // || . ||_IP
  P,         // || . ||_P   (WOPSIP)
};

NormTag norm_from_string(const std::string& name);
/// Scheme norm used for convergence control and Gram matrices.
NormTag scheme_norm(Scheme scheme);

/// Evaluates the requested discrete norm of an arbitrary piecewise
/// function.
double norms(const Evaluable& v, const Triangulation& mesh, NormTag which,
             const SchemeParams& params = {});

/// The jump seminorm j_h entering || . ||_h.
double jump_seminorm(const Evaluable& v, const Triangulation& mesh);

/// Quadratic penalty values c_dG(v,v), c_IP(v,v), c_P(v,v) evaluated
/// pointwise (independent of the matrix path).
double penalty_value_dg(const Evaluable& v, const Triangulation& mesh,
                        const SchemeParams& params);
double penalty_value_ip(const Evaluable& v, const Triangulation& mesh,
                        const SchemeParams& params);
double penalty_value_p(const Evaluable& v, const Triangulation& mesh);

/// Gram matrix of the scheme norm (a_pw plus the penalty part, no
/// consistency terms); symmetric positive definite on the reduced dofs.
SparseMatrix norm_gram_matrix(const FeSpace& space, const SchemeParams& params);

}  // namespace biharm
