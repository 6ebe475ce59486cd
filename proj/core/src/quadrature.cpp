#include "biharm/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include <Eigen/Eigenvalues>

namespace biharm {

namespace {

// Gauss nodes/weights on [-1,1] for the weight (1-x)^alpha via Golub-Welsch
// on the Jacobi(alpha,0) recurrence. alpha = 0 gives Gauss-Legendre.
void gauss_jacobi(int n, double alpha, Eigen::VectorXd& nodes,
                  Eigen::VectorXd& weights) {
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  const double a = alpha, b = 0.0;
  for (int k = 0; k < n; ++k) {
    const double kk = k;
    const double denom = (2 * kk + a + b) * (2 * kk + a + b + 2);
    const double diag =
        (k == 0 && a + b == 0.0) ? 0.0 : (b * b - a * a) / (denom == 0.0 ? 1.0 : denom);
    jac(k, k) = diag;
    if (k + 1 < n) {
      const double k1 = kk + 1;
      const double num = 4 * k1 * (k1 + a) * (k1 + b) * (k1 + a + b);
      const double den = (2 * k1 + a + b - 1) * (2 * k1 + a + b) * (2 * k1 + a + b) *
                         (2 * k1 + a + b + 1);
      const double off = std::sqrt(num / den);
      jac(k, k + 1) = off;
      jac(k + 1, k) = off;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  nodes = es.eigenvalues();
  // mu0 = integral of (1-x)^a over [-1,1]
  const double mu0 = std::pow(2.0, a + 1.0) / (a + 1.0);
  weights.resize(n);
  for (int k = 0; k < n; ++k) {
    const double v = es.eigenvectors()(0, k);
    weights[k] = mu0 * v * v;
  }
}

QuadratureRule collapsed_triangle_rule(int degree) {
  const int n = (degree + 2) / 2;  // 2n-1 >= degree
  Eigen::VectorXd xg, wg, xj, wj;
  gauss_jacobi(n, 0.0, xg, wg);  // Legendre
  gauss_jacobi(n, 1.0, xj, wj);  // Jacobi(1,0), weight (1-x)
  QuadratureRule rule;
  rule.degree = degree;
  rule.points.resize(n * n, 3);
  rule.weights.resize(n * n);
  int idx = 0;
  for (int i = 0; i < n; ++i) {
    const double eta = 0.5 * (xj[i] + 1.0);   // in (0,1)
    const double weta = 0.25 * wj[i];         // includes (1-eta) factor and map
    for (int j = 0; j < n; ++j) {
      const double xi = 0.5 * (xg[j] + 1.0);
      const double x = xi * (1.0 - eta);
      const double y = eta;
      rule.points(idx, 0) = 1.0 - x - y;
      rule.points(idx, 1) = x;
      rule.points(idx, 2) = y;
      rule.weights[idx] = weta * 0.5 * wg[j];
      ++idx;
    }
  }
  return rule;
}

QuadratureRule make_symmetric(std::initializer_list<std::pair<double, Eigen::Vector3d>>
                                  orbits,
                              int degree) {
  // each entry: (weight per point, barycentric representative); generates the
  // full S3 orbit of the representative
  std::vector<Eigen::Vector3d> pts;
  std::vector<double> wts;
  for (const auto& [w, l] : orbits) {
    std::array<Eigen::Vector3d, 6> perms = {
        Eigen::Vector3d(l[0], l[1], l[2]), Eigen::Vector3d(l[0], l[2], l[1]),
        Eigen::Vector3d(l[1], l[0], l[2]), Eigen::Vector3d(l[1], l[2], l[0]),
        Eigen::Vector3d(l[2], l[0], l[1]), Eigen::Vector3d(l[2], l[1], l[0])};
    for (const auto& p : perms) {
      bool dup = false;
      for (const auto& q : pts)
        if ((p - q).norm() < 1e-14) { dup = true; break; }
      if (!dup) {
        pts.push_back(p);
        wts.push_back(w);
      }
    }
  }
  QuadratureRule rule;
  rule.degree = degree;
  rule.points.resize(static_cast<int>(pts.size()), 3);
  rule.weights.resize(static_cast<int>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    rule.points.row(static_cast<int>(i)) = pts[i].transpose();
    rule.weights[static_cast<int>(i)] = wts[i];
  }
  return rule;
}

QuadratureRule build_triangle_rule(int degree) {
  // Classical symmetric rules for the lowest degrees (weights are per-point
  // on the reference triangle of area 1/2), product rules beyond.
  switch (degree) {
    case 1:
      return make_symmetric({{0.5, {1.0 / 3, 1.0 / 3, 1.0 / 3}}}, 1);
    case 2:
      return make_symmetric({{1.0 / 6, {2.0 / 3, 1.0 / 6, 1.0 / 6}}}, 2);
    case 3:
    case 4: {
      // Dunavant degree-4, 6 points, all positive and interior
      const double w1 = 0.223381589678011 / 2.0, a1 = 0.445948490915965;
      const double w2 = 0.109951743655322 / 2.0, a2 = 0.091576213509771;
      return make_symmetric({{w1, {1.0 - 2 * a1, a1, a1}}, {w2, {1.0 - 2 * a2, a2, a2}}},
                            degree);
    }
    case 5: {
      const double w0 = 0.225 / 2.0;
      const double w1 = 0.132394152788506 / 2.0, a1 = 0.470142064105115;
      const double w2 = 0.125939180544827 / 2.0, a2 = 0.101286507323456;
      return make_symmetric({{w0, {1.0 / 3, 1.0 / 3, 1.0 / 3}},
                             {w1, {1.0 - 2 * a1, a1, a1}},
                             {w2, {1.0 - 2 * a2, a2, a2}}},
                            5);
    }
    default:
      return collapsed_triangle_rule(degree);
  }
}

}  // namespace

QuadratureRule triangle_rule(int degree) {
  if (degree < 1 || degree > 14)
    throw Error("quadrature_error",
                "triangle_rule degree must be in [1,14], got " + std::to_string(degree));
  static std::map<int, QuadratureRule> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(degree);
  if (it == cache.end()) it = cache.emplace(degree, build_triangle_rule(degree)).first;
  return it->second;
}

QuadratureRule edge_rule(int degree) {
  if (degree < 1 || degree > 10)
    throw Error("quadrature_error",
                "edge_rule degree must be in [1,10], got " + std::to_string(degree));
  const int n = (degree + 2) / 2;
  Eigen::VectorXd x, w;
  gauss_jacobi(n, 0.0, x, w);
  QuadratureRule rule;
  rule.degree = 2 * n - 1;
  rule.points.resize(n, 1);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.points(i, 0) = 0.5 * (x[i] + 1.0);
    rule.weights[i] = 0.5 * w[i];
  }
  return rule;
}

}  // namespace biharm
