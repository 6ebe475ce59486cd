#pragma once

#include <Eigen/Dense>

#include "biharm/mesh.hpp"

namespace biharm {

/// Quadrature rule on the reference triangle (barycentric points, weights
/// summing to 1/2) or the unit edge [0,1] (parametric points, weights
/// summing to 1). `degree` is the guaranteed polynomial exactness.
struct QuadratureRule {
  Eigen::MatrixXd points;   // one row per point; 3 columns (barycentric) or 1
  Eigen::VectorXd weights;  // positive, reference measure
  int degree = 0;

  int size() const { return static_cast<int>(weights.size()); }
};

/// Rule exact for bivariate polynomials of total degree <= degree,
/// 1 <= degree <= 14. Low degrees use classical symmetric rules, higher
/// degrees a collapsed Gauss-Legendre x Gauss-Jacobi product.
QuadratureRule triangle_rule(int degree);

/// Gauss-Legendre rule on [0,1], exact to the given degree, 1 <= degree <= 10.
QuadratureRule edge_rule(int degree);

/// Maps a reference-triangle rule onto triangle t given by three vertex
/// positions; invokes fn(point, weight) with the physical weight.
template <typename Fn>
void for_each_point(const Triangulation& mesh, int t, const QuadratureRule& rule,
                    Fn&& fn) {
  const auto& tri = mesh.triangle(t);
  const Eigen::Vector2d a = mesh.vertex(tri[0]);
  const Eigen::Vector2d b = mesh.vertex(tri[1]);
  const Eigen::Vector2d c = mesh.vertex(tri[2]);
  const double scale = 2.0 * mesh.area(t);
  for (int q = 0; q < rule.size(); ++q) {
    const Eigen::Vector2d x = rule.points(q, 0) * a + rule.points(q, 1) * b +
                              rule.points(q, 2) * c;
    fn(x, scale * rule.weights[q]);
  }
}

/// Same on an arbitrary physical triangle (p0,p1,p2) with positive area.
template <typename Fn>
void for_each_point(const Eigen::Vector2d& p0, const Eigen::Vector2d& p1,
                    const Eigen::Vector2d& p2, const QuadratureRule& rule,
                    Fn&& fn) {
  const double area2 =
      (p1.x() - p0.x()) * (p2.y() - p0.y()) - (p2.x() - p0.x()) * (p1.y() - p0.y());
  for (int q = 0; q < rule.size(); ++q) {
    const Eigen::Vector2d x =
        rule.points(q, 0) * p0 + rule.points(q, 1) * p1 + rule.points(q, 2) * p2;
    fn(x, area2 * rule.weights[q]);
  }
}

/// Maps an edge rule onto edge e of the mesh; fn(point, weight) with the
/// arc-length weight.
template <typename Fn>
void for_each_edge_point(const Triangulation& mesh, int e,
                         const QuadratureRule& rule, Fn&& fn) {
  const Edge& edge = mesh.edge(e);
  const Eigen::Vector2d p0 = mesh.vertex(edge.vertices[0]);
  const Eigen::Vector2d p1 = mesh.vertex(edge.vertices[1]);
  for (int q = 0; q < rule.size(); ++q) {
    const double s = rule.points(q, 0);
    fn(Eigen::Vector2d((1.0 - s) * p0 + s * p1), edge.length * rule.weights[q]);
  }
}

}  // namespace biharm
