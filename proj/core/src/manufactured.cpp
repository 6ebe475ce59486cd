#include "biharm/manufactured.hpp"

#include <array>
#include <cmath>

namespace biharm {

Eigen::Vector2d ManufacturedSolution::gradient(const Eigen::Vector2d& p) const {
  return {derivative(1, 0, p), derivative(0, 1, p)};
}

Eigen::Matrix2d ManufacturedSolution::hessian(const Eigen::Vector2d& p) const {
  Eigen::Matrix2d h;
  const double uxy = derivative(1, 1, p);
  h << derivative(2, 0, p), uxy, uxy, derivative(0, 2, p);
  return h;
}

double ManufacturedSolution::laplacian(const Eigen::Vector2d& p) const {
  return derivative(2, 0, p) + derivative(0, 2, p);
}

double ManufacturedSolution::bilaplacian(const Eigen::Vector2d& p) const {
  return derivative(4, 0, p) + 2.0 * derivative(2, 2, p) + derivative(0, 4, p);
}

Evaluation ManufacturedSolution::evaluate(int, const Eigen::Vector2d& x) const {
  Evaluation out;
  out.value = value(x);
  out.gradient = gradient(x);
  out.hessian = hessian(x);
  return out;
}

namespace {

// u(x,y) = f(x) g(y) with one-dimensional derivative tables
class TensorProductSolution : public ManufacturedSolution {
public:
  using Derivs = std::function<std::array<double, 5>(double)>;
  TensorProductSolution(std::string name, Derivs f, Derivs g)
      : name_(std::move(name)), f_(std::move(f)), g_(std::move(g)) {}

  double derivative(int dx, int dy, const Eigen::Vector2d& p) const override {
    return f_(p.x())[dx] * g_(p.y())[dy];
  }
  std::string name() const override { return name_; }

private:
  std::string name_;
  Derivs f_, g_;
};

std::array<double, 5> sin2_derivs(double t) {
  // sin^2(pi t) = (1 - cos(2 pi t)) / 2
  const double c = std::cos(2.0 * M_PI * t);
  const double s = std::sin(2.0 * M_PI * t);
  const double pi = M_PI;
  return {0.5 * (1.0 - c), pi * s, 2.0 * pi * pi * c, -4.0 * pi * pi * pi * s,
          -8.0 * pi * pi * pi * pi * c};
}

std::array<double, 5> poly_derivs(double t) {
  // t^2 (1-t)^2 = t^2 - 2 t^3 + t^4
  return {t * t - 2.0 * t * t * t + t * t * t * t,
          2.0 * t - 6.0 * t * t + 4.0 * t * t * t,
          2.0 - 12.0 * t + 12.0 * t * t,
          -12.0 + 24.0 * t,
          24.0};
}

std::array<double, 5> lshape_derivs(double t) {
  // t^2 (1-t^2)^2 = t^2 - 2 t^4 + t^6
  const double t2 = t * t, t3 = t2 * t, t4 = t2 * t2, t5 = t4 * t;
  return {t2 - 2.0 * t4 + t3 * t3,
          2.0 * t - 8.0 * t3 + 6.0 * t5,
          2.0 - 24.0 * t2 + 30.0 * t4,
          -48.0 * t + 120.0 * t3,
          -48.0 + 360.0 * t2};
}

}  // namespace

std::shared_ptr<const ManufacturedSolution> manufactured_solution(
    const std::string& name) {
  if (name == "sin2")
    return std::make_shared<TensorProductSolution>("sin2", sin2_derivs, sin2_derivs);
  if (name == "poly")
    return std::make_shared<TensorProductSolution>("poly", poly_derivs, poly_derivs);
  if (name == "lshape")
    return std::make_shared<TensorProductSolution>("lshape", lshape_derivs,
                                                   lshape_derivs);
  throw Error("config_error", "unknown manufactured solution '" + name + "'");
}

double biharmonic_source(const ManufacturedSolution& u, const Eigen::Vector2d& p) {
  return u.bilaplacian(p);
}

double navier_stokes_source(const ManufacturedSolution& u, const Eigen::Vector2d& p) {
  const double lap_x = u.derivative(3, 0, p) + u.derivative(1, 2, p);
  const double lap_y = u.derivative(2, 1, p) + u.derivative(0, 3, p);
  return u.bilaplacian(p) + u.derivative(1, 0, p) * lap_y -
         u.derivative(0, 1, p) * lap_x;
}

namespace {

double vk_bracket_of(const ManufacturedSolution& a, const ManufacturedSolution& b,
                     const Eigen::Vector2d& p) {
  return a.derivative(2, 0, p) * b.derivative(0, 2, p) +
         a.derivative(0, 2, p) * b.derivative(2, 0, p) -
         2.0 * a.derivative(1, 1, p) * b.derivative(1, 1, p);
}

}  // namespace

double von_karman_source_first(const ManufacturedSolution& u,
                               const ManufacturedSolution& v,
                               const Eigen::Vector2d& p) {
  return u.bilaplacian(p) - vk_bracket_of(u, v, p);
}

double von_karman_source_second(const ManufacturedSolution& u,
                                const ManufacturedSolution& v,
                                const Eigen::Vector2d& p) {
  return v.bilaplacian(p) + 0.5 * vk_bracket_of(u, u, p);
}

}  // namespace biharm
