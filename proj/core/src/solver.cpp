#include "biharm/solver.hpp"

#include <cmath>
#include <fstream>

#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

namespace biharm {

Eigen::VectorXd sparse_solve(const SparseMatrix& A, const Eigen::VectorXd& b) {
  if (A.rows() != A.cols())
    throw SolverError("matrix is not square");
  if (A.rows() != b.size())
    throw SolverError("dimension mismatch between matrix and right-hand side");
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.analyzePattern(A.mat);
  lu.factorize(A.mat);
  if (lu.info() != Eigen::Success)
    throw SolverError("singular matrix: " + lu.lastErrorMessage());
  Eigen::VectorXd x = lu.solve(b);
  if (lu.info() != Eigen::Success) throw SolverError("sparse solve failed");
  return x;
}

void NewtonReport::save_log(const std::filesystem::path& file) const {
  std::ofstream out(file);
  if (!out) throw Error("io_error", "cannot write " + file.string());
  out << "# iteration residual_dual_norm correction_norm quadratic_ratio\n";
  out.precision(16);
  for (const NewtonStep& s : steps)
    out << s.iteration << ' ' << s.residual_dual_norm << ' ' << s.correction_norm
        << ' ' << s.quadratic_ratio << '\n';
}

namespace {

// dual and primal norms with respect to the scheme-norm Gram matrix
class GramNorms {
public:
  explicit GramNorms(const SparseMatrix& gram) {
    chol_.compute(gram.mat);
    if (chol_.info() != Eigen::Success)
      throw SolverError("norm Gram matrix is not positive definite");
    gram_ = &gram.mat;
  }
  double primal(const Eigen::VectorXd& v) const {
    return std::sqrt(v.dot(*gram_ * v));
  }
  double dual(const Eigen::VectorXd& r) const {
    return std::sqrt(r.dot(chol_.solve(r)));
  }

private:
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> chol_;
  const Eigen::SparseMatrix<double>* gram_ = nullptr;
};

}  // namespace

NewtonReport newton_solve(const DiscreteProblem& problem,
                          const Eigen::VectorXd& initial) {
  const NewtonControls& controls = problem.spec().newton;
  const GramNorms norms(problem.gram_matrix());

  NewtonReport report;
  Eigen::VectorXd x = initial;
  double prev_correction = 0.0;
  double residual_floor = 0.0;
  int growth_streak = 0;

  for (int k = 1; k <= controls.max_iterations; ++k) {
    const Eigen::VectorXd r = problem.residual(x);
    // machine-level residual: the previous step already hit the root
    const double rdual = norms.dual(r);
    if (k == 1) {
      residual_floor = 1e-13 * std::max(1.0, rdual);
    } else if (rdual <= residual_floor) {
      report.converged = true;
      report.solution = x;
      return report;
    }
    const SparseMatrix K = problem.jacobian(x);
    Eigen::VectorXd delta;
    try {
      delta = sparse_solve(K, r);
    } catch (const SolverError& err) {
      throw SolverError("Newton iteration " + std::to_string(k) + ": " +
                        err.what());
    }
    x -= delta;

    NewtonStep step;
    step.iteration = k;
    step.residual_dual_norm = rdual;
    step.correction_norm = norms.primal(delta);
    if (k > 1 && prev_correction > 0.0)
      step.quadratic_ratio = step.correction_norm / (prev_correction * prev_correction);
    report.steps.push_back(step);

    if (step.correction_norm <= controls.tolerance) {
      report.converged = true;
      report.solution = x;
      return report;
    }
    if (k > 1 && step.correction_norm > prev_correction) {
      if (++growth_streak >= 3)
        throw SolverError("Newton divergence: correction grew over " +
                          std::to_string(growth_streak) + " consecutive steps");
    } else {
      growth_streak = 0;
    }
    prev_correction = step.correction_norm;
  }
  throw SolverError("Newton did not converge within " +
                    std::to_string(controls.max_iterations) + " iterations");
}

Eigen::VectorXd initial_guess(const DiscreteProblem& problem) {
  return sparse_solve(problem.scheme_matrix(), problem.load_vector());
}

double infsup_estimate(const DiscreteProblem& problem, const Eigen::VectorXd& u) {
  const int n = problem.n_unknowns();
  if (n > 4000)
    throw SolverError("inf-sup diagnostic capped at 4000 dofs, got " +
                      std::to_string(n));
  const Eigen::MatrixXd K = Eigen::MatrixXd(problem.jacobian(u).mat);
  const Eigen::MatrixXd M = Eigen::MatrixXd(problem.gram_matrix().mat);
  const Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success)
    throw SolverError("norm Gram matrix is not positive definite");
  const Eigen::MatrixXd L = llt.matrixL();
  // C = L^{-1} K L^{-T}
  Eigen::MatrixXd C = L.triangularView<Eigen::Lower>().solve(K);
  C = L.triangularView<Eigen::Lower>().solve(C.transpose()).transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(C);
  return svd.singularValues().minCoeff();
}

}  // namespace biharm
