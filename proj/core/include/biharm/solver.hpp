#pragma once

#include <filesystem>
#include <vector>

#include "biharm/problems.hpp"

namespace biharm {

class SolverError : public Error {
public:
  explicit SolverError(const std::string& what) : Error("solver_error", what) {}
};

/// Direct sparse solve A x = b via LU factorization. Throws SolverError on
/// structurally or numerically singular input.
Eigen::VectorXd sparse_solve(const SparseMatrix& A, const Eigen::VectorXd& b);

/// One Newton step record.
struct NewtonStep {
  int iteration = 0;
  double residual_dual_norm = 0.0;  // ||N_h(x)|| in the discrete dual norm
  double correction_norm = 0.0;     // scheme norm of the Newton correction
  double quadratic_ratio = 0.0;     // e_k / e_{k-1}^2, 0 when undefined
};

struct NewtonReport {
  std::vector<NewtonStep> steps;
  bool converged = false;
  Eigen::VectorXd solution;

  int iterations() const { return static_cast<int>(steps.size()); }
  /// Serializes one line per iteration: "iter residual correction ratio".
  void save_log(const std::filesystem::path& file) const;
};

/// Undamped Newton iteration on the discrete residual; stops when the
/// scheme norm of the correction drops below the tolerance. Reports
/// divergence (three consecutive growing corrections), singular Jacobians
/// and the iteration cap as SolverError.
NewtonReport newton_solve(const DiscreteProblem& problem,
                          const Eigen::VectorXd& initial);

/// Default initial iterate: solution of the linear problem
/// a_h(u0, .) = F(J I_M .).
Eigen::VectorXd initial_guess(const DiscreteProblem& problem);

/// Smallest generalized singular value of the linearized operator at u_h
/// in the scheme norm: sigma_min of M^{-1/2} K M^{-1/2} with K the
/// Jacobian and M the norm Gram matrix. Dense computation, dimension
/// capped at 4000.
double infsup_estimate(const DiscreteProblem& problem, const Eigen::VectorXd& u);

}  // namespace biharm
