#include <doctest.h>

#include <cmath>
#include <random>

#include "biharm/forms.hpp"
#include "biharm/manufactured.hpp"
#include "biharm/study.hpp"
#include "biharm/transfer.hpp"

using namespace biharm;

namespace {

FeFunction random_function(std::shared_ptr<const FeSpace> space, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  FeFunction f(space);
  for (int i = 0; i < space->dim(); ++i) f.coeffs()[i] = dist(rng);
  return f;
}

FeFunction inject(const Evaluable& f, std::shared_ptr<const FeSpace> space) {
  FeFunction out(space);
  for (int t = 0; t < space->mesh().triangle_count(); ++t) {
    const auto dofs = space->local_dof_values(t, f);
    for (int l = 0; l < 6; ++l) {
      const int g = space->global_dof(t, l);
      if (g >= 0) out.coeffs()[g] = dofs[l];
    }
  }
  return out;
}

// quadratic polynomials times the H^2_0 square bubble x^2(1-x)^2 y^2(1-y)^2,
// with closed-form derivatives through order two
class BumpTimesQuadratic : public Evaluable {
public:
  BumpTimesQuadratic(double c0, double cx, double cy)
      : c0_(c0), cx_(cx), cy_(cy) {}

  Evaluation evaluate(int, const Eigen::Vector2d& p) const override {
    const double x = p.x(), y = p.y();
    const auto fx = table(x);
    const auto fy = table(y);
    const double q = c0_ + cx_ * x + cy_ * y;
    const Eigen::Vector2d dq(cx_, cy_);
    Evaluation out;
    out.value = fx[0] * fy[0] * q;
    out.gradient.x() = fx[1] * fy[0] * q + fx[0] * fy[0] * dq.x();
    out.gradient.y() = fx[0] * fy[1] * q + fx[0] * fy[0] * dq.y();
    out.hessian(0, 0) = fx[2] * fy[0] * q + 2.0 * fx[1] * fy[0] * dq.x();
    out.hessian(1, 1) = fx[0] * fy[2] * q + 2.0 * fx[0] * fy[1] * dq.y();
    out.hessian(0, 1) = fx[1] * fy[1] * q + fx[1] * fy[0] * dq.y() +
                        fx[0] * fy[1] * dq.x();
    out.hessian(1, 0) = out.hessian(0, 1);
    return out;
  }

private:
  static std::array<double, 3> table(double t) {
    const double b = t * t * (1.0 - t) * (1.0 - t);
    const double db = 2.0 * t - 6.0 * t * t + 4.0 * t * t * t;
    const double ddb = 2.0 - 12.0 * t + 12.0 * t * t;
    return {b, db, ddb};
  }
  double c0_, cx_, cy_;
};

}  // namespace

TEST_CASE("Morley interpolation is a projection") {
  const Triangulation mesh = Triangulation::structured_square(3);
  auto morley = std::make_shared<FeSpace>(mesh, Scheme::Morley);
  const FeFunction v = random_function(morley, 1);
  const FeFunction iv = morley_interpolate(v, morley);
  CHECK((iv.coeffs() - v.coeffs()).lpNorm<Eigen::Infinity>() < 1e-13);

  // idempotence through the smoother interface
  const auto once = apply_smoother(Smoother::IM, v, morley, nullptr);
  const auto* once_fe = dynamic_cast<const FeFunction*>(once.get());
  REQUIRE(once_fe != nullptr);
  const FeFunction twice = morley_interpolate(*once_fe, morley);
  CHECK((twice.coeffs() - once_fe->coeffs()).lpNorm<Eigen::Infinity>() < 1e-13);
}

TEST_CASE("interpolation matrix is the identity on the Morley space") {
  const Triangulation mesh = Triangulation::structured_square(2);
  auto morley = std::make_shared<FeSpace>(mesh, Scheme::Morley);
  const Eigen::SparseMatrix<double> L = morley_interpolation_matrix(*morley, *morley);
  const Eigen::MatrixXd dense(L);
  CHECK((dense - Eigen::MatrixXd::Identity(morley->dim(), morley->dim()))
            .cwiseAbs()
            .maxCoeff() < 1e-13);
}

TEST_CASE("interpolation matrix agrees with the interpolation operator") {
  const Triangulation mesh = Triangulation::structured_square(2).refined();
  auto morley = std::make_shared<FeSpace>(mesh, Scheme::Morley);
  for (Scheme scheme : {Scheme::DG, Scheme::C0IP, Scheme::WOPSIP}) {
    auto space = std::make_shared<FeSpace>(mesh, scheme);
    const Eigen::SparseMatrix<double> L = morley_interpolation_matrix(*space, *morley);
    const FeFunction v = random_function(space, 17);
    const FeFunction iv = morley_interpolate(v, morley);
    const Eigen::VectorXd through_matrix = L * v.coeffs();
    CHECK((through_matrix - iv.coeffs()).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("companion is a right inverse of Morley interpolation") {
  for (auto base : {Triangulation::structured_square(2), Triangulation::lshape()}) {
    const Triangulation mesh = base.refined();
    auto morley = std::make_shared<FeSpace>(mesh, Scheme::Morley);
    auto J = CompanionOperator::make(morley);
    const FeFunction v = random_function(morley, 23);
    const C1Function jv = J->apply(v);
    const FeFunction back = morley_interpolate(jv, morley);
    CHECK((back.coeffs() - v.coeffs()).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("companion of zero is zero") {
  const Triangulation mesh = Triangulation::structured_square(2);
  auto morley = std::make_shared<FeSpace>(mesh, Scheme::Morley);
  auto J = CompanionOperator::make(morley);
  const C1Function jz = J->apply(FeFunction(morley));
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const Evaluation e = jz.evaluate(t, mesh.centroid(t));
    CHECK(e.value == 0.0);
    CHECK(e.gradient.norm() == 0.0);
  }
}

TEST_CASE("companion output is C1-conforming and clamped at the boundary") {
  const Triangulation mesh = Triangulation::structured_square(2).refined();
  auto morley = std::make_shared<FeSpace>(mesh, Scheme::Morley);
  auto J = CompanionOperator::make(morley);
  const C1Function jv = J->apply(random_function(morley, 31));

  int sampled = 0;
  for (int e = 0; e < mesh.edge_count() && sampled < 20; ++e) {
    if (mesh.edge(e).on_boundary()) continue;
    for (double s : {0.17, 0.44, 0.71, 0.93}) {
      const TraceJump tj = trace_jump(jv, mesh, e, s);
      CHECK(std::abs(tj.value_jump) < 1e-10);
      CHECK(std::abs(tj.normal_derivative_jump) < 1e-10);
      // full gradient jump, not only the normal component
      const Edge& edge = mesh.edge(e);
      const Eigen::Vector2d x = (1.0 - s) * mesh.vertex(edge.vertices[0]) +
                                s * mesh.vertex(edge.vertices[1]);
      const EdgeTraces tr = edge_traces(jv, mesh, e, x);
      CHECK((tr.plus.gradient - tr.minus.gradient).norm() < 1e-10);
      ++sampled;
    }
  }
  CHECK(sampled >= 20);

  for (int e = 0; e < mesh.edge_count(); ++e) {
    if (!mesh.edge(e).on_boundary()) continue;
    for (double s : {0.0, 0.3, 0.6, 1.0}) {
      const TraceJump tj = trace_jump(jv, mesh, e, s);
      CHECK(std::abs(tj.value_jump) < 1e-11);          // trace itself on boundary
      CHECK(std::abs(tj.normal_derivative_jump) < 1e-11);
      const Edge& edge = mesh.edge(e);
      const Eigen::Vector2d x = (1.0 - s) * mesh.vertex(edge.vertices[0]) +
                                s * mesh.vertex(edge.vertices[1]);
      CHECK(jv.evaluate(edge.tri_plus, x).gradient.norm() < 1e-11);
    }
  }
}

TEST_CASE("companion L2-orthogonality against local P2") {
  const Triangulation mesh = Triangulation::structured_square(2);
  auto morley = std::make_shared<FeSpace>(mesh, Scheme::Morley);
  auto J = CompanionOperator::make(morley);
  const FeFunction v = random_function(morley, 47);
  const C1Function jv = J->apply(v);

  const double scale = norms(v, mesh, NormTag::EnergyPw) + 1.0;
  const QuadratureRule rule = triangle_rule(12);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const Eigen::Vector2d c = mesh.centroid(t);
    const double h = mesh.h(t);
    Eigen::Matrix<double, 6, 1> moments = Eigen::Matrix<double, 6, 1>::Zero();
    const auto& tri = mesh.triangle(t);
    for (int s = 0; s < 3; ++s) {
      for_each_point(mesh.vertex(tri[s]), mesh.vertex(tri[(s + 1) % 3]), c, rule,
                     [&](const Eigen::Vector2d& x, double w) {
                       const double diff =
                           v.evaluate(t, x).value - jv.evaluate(t, x).value;
                       const Eigen::Vector2d p = (x - c) / h;
                       Eigen::Matrix<double, 6, 1> mono;
                       mono << 1, p.x(), p.y(), p.x() * p.x(), p.x() * p.y(),
                           p.y() * p.y();
                       moments += (w * diff) * mono;
                     });
    }
    CHECK(moments.lpNorm<Eigen::Infinity>() < 1e-10 * scale);
  }
}

TEST_CASE("companion preserves vertex values, averaged gradients and edge means") {
  const Triangulation mesh = Triangulation::structured_square(2);
  auto morley = std::make_shared<FeSpace>(mesh, Scheme::Morley);
  auto J = CompanionOperator::make(morley);
  const FeFunction v = random_function(morley, 53);
  const C1Function jv = J->apply(v);

  for (int z = 0; z < mesh.vertex_count(); ++z) {
    const auto& tris = mesh.triangles_at_vertex(z);
    const Eigen::Vector2d p = mesh.vertex(z);
    // (a) vertex values agree with the (single-valued) Morley vertex value
    const double vm = v.evaluate(tris.front(), p).value;
    CHECK(jv.evaluate(tris.front(), p).value == doctest::Approx(vm).epsilon(1e-11));
    if (!mesh.vertex_on_boundary(z)) {
      // (b) gradient is the average of the one-sided Morley gradients
      Eigen::Vector2d avg = Eigen::Vector2d::Zero();
      for (int t : tris) avg += v.evaluate(t, p).gradient;
      avg /= static_cast<double>(tris.size());
      CHECK((jv.evaluate(tris.front(), p).gradient - avg).norm() < 1e-10);
    }
  }
  // (c) edge normal-derivative means are preserved
  const QuadratureRule rule = edge_rule(9);
  for (int e = 0; e < mesh.edge_count(); ++e) {
    const Edge& edge = mesh.edge(e);
    double mean_v = 0.0, mean_jv = 0.0;
    for (int q = 0; q < rule.size(); ++q) {
      const double s = rule.points(q, 0);
      const Eigen::Vector2d x = (1.0 - s) * mesh.vertex(edge.vertices[0]) +
                                s * mesh.vertex(edge.vertices[1]);
      mean_v +=
          rule.weights[q] * edge.normal.dot(v.evaluate(edge.tri_plus, x).gradient);
      mean_jv +=
          rule.weights[q] * edge.normal.dot(jv.evaluate(edge.tri_plus, x).gradient);
    }
    CHECK(mean_jv == doctest::Approx(mean_v).epsilon(1e-10).scale(1.0));
  }
}

TEST_CASE("Hessian integral mean property of Morley interpolation") {
  // holds for H^2_0 inputs; checked with bump-times-polynomial functions
  const Triangulation mesh = Triangulation::structured_square(3);
  auto morley = std::make_shared<FeSpace>(mesh, Scheme::Morley);
  std::mt19937 rng(71);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int k = 0; k < 10; ++k) {
    const BumpTimesQuadratic v(dist(rng), dist(rng), dist(rng));
    const FeFunction iv = morley_interpolate(v, morley);
    const auto mean_v = project_pw_constant_hessian(v, mesh, 12);
    const auto mean_iv = project_pw_constant_hessian(iv, mesh, 2);
    for (int t = 0; t < mesh.triangle_count(); ++t)
      CHECK((mean_v[t] - mean_iv[t]).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("transfer into the C0IP space") {
  const Triangulation mesh = Triangulation::structured_square(2).refined();
  auto morley = std::make_shared<FeSpace>(mesh, Scheme::Morley);
  auto c0ip = std::make_shared<FeSpace>(mesh, Scheme::C0IP);

  SUBCASE("zero maps to zero") {
    const FeFunction z = transfer_to_c0ip(FeFunction(morley), c0ip);
    CHECK(z.coeffs().lpNorm<Eigen::Infinity>() == 0.0);
  }

  SUBCASE("vertex values copied, midpoint averages taken") {
    const FeFunction v = random_function(morley, 5);
    const FeFunction tv = transfer_to_c0ip(v, c0ip);
    for (int e = 0; e < mesh.edge_count(); ++e) {
      const Edge& edge = mesh.edge(e);
      if (edge.on_boundary()) continue;
      const double vp = v.evaluate(edge.tri_plus, edge.midpoint).value;
      const double vm = v.evaluate(edge.tri_minus, edge.midpoint).value;
      const double got = tv.evaluate(edge.tri_plus, edge.midpoint).value;
      CHECK(got == doctest::Approx(0.5 * (vp + vm)).epsilon(1e-12).scale(1.0));
      // when the Morley traces agree the value is preserved exactly
      if (std::abs(vp - vm) < 1e-14)
        CHECK(got == doctest::Approx(vp).epsilon(1e-13).scale(1.0));
    }
  }

  SUBCASE("transfer error controlled by the interpolation error") {
    const auto exact = manufactured_solution("sin2");
    Triangulation level = Triangulation::structured_square(2);
    for (int l = 0; l < 3; ++l) {
      auto m = std::make_shared<FeSpace>(level, Scheme::Morley);
      auto c = std::make_shared<FeSpace>(level, Scheme::C0IP);
      const FeFunction imv = morley_interpolate(*exact, m);
      const FeFunction icv = transfer_to_c0ip(imv, c);
      // || v - I_C I_M v ||_h / ||| v - I_M v |||_pw stays bounded
      struct Diff : Evaluable {
        const Evaluable *a, *b;
        Evaluation evaluate(int t, const Eigen::Vector2d& x) const override {
          Evaluation ea = a->evaluate(t, x), eb = b->evaluate(t, x);
          ea.value -= eb.value;
          ea.gradient -= eb.gradient;
          ea.hessian -= eb.hessian;
          return ea;
        }
      } diff_ic, diff_im;
      diff_ic.a = exact.get();
      diff_ic.b = &icv;
      diff_im.a = exact.get();
      diff_im.b = &imv;
      const double num = norms(diff_ic, level, NormTag::H);
      const double den = norms(diff_im, level, NormTag::EnergyPw);
      REQUIRE(den > 0.0);
      MESSAGE("level ", l, " transfer ratio ", num / den);
      CHECK(num / den < 10.0);
      level = level.refined();
    }
  }
}

TEST_CASE("smoother dispatch") {
  const Triangulation mesh = Triangulation::structured_square(2);
  auto morley = std::make_shared<FeSpace>(mesh, Scheme::Morley);
  auto J = CompanionOperator::make(morley);
  const FeFunction v = random_function(morley, 77);

  const auto id = apply_smoother(Smoother::Id, v, morley, J);
  const auto jim = apply_smoother(Smoother::JIM, v, morley, J);
  const C1Function direct = J->apply(v);
  std::mt19937 rng(79);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    Eigen::Vector3d l(dist(rng), dist(rng), dist(rng));
    l /= l.sum();
    const auto& tri = mesh.triangle(t);
    const Eigen::Vector2d x = l[0] * mesh.vertex(tri[0]) + l[1] * mesh.vertex(tri[1]) +
                              l[2] * mesh.vertex(tri[2]);
    CHECK(id->evaluate(t, x).value == v.evaluate(t, x).value);
    // JIM on a Morley function equals the companion (I_M v = v)
    CHECK(jim->evaluate(t, x).value ==
          doctest::Approx(direct.evaluate(t, x).value).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("Morley interpolation error decays with rate one") {
  const auto exact = manufactured_solution("sin2");
  Triangulation mesh = Triangulation::structured_square(2);
  std::vector<double> hs, errs;
  for (int l = 0; l < 4; ++l) {
    auto morley = std::make_shared<FeSpace>(mesh, Scheme::Morley);
    const FeFunction iv = morley_interpolate(*exact, morley);
    struct Diff : Evaluable {
      const Evaluable *a, *b;
      Evaluation evaluate(int t, const Eigen::Vector2d& x) const override {
        Evaluation ea = a->evaluate(t, x), eb = b->evaluate(t, x);
        ea.value -= eb.value;
        ea.gradient -= eb.gradient;
        ea.hessian -= eb.hessian;
        return ea;
      }
    } diff;
    diff.a = exact.get();
    diff.b = &iv;
    hs.push_back(mesh.h_max());
    errs.push_back(norms(diff, mesh, NormTag::EnergyPw));
    mesh = mesh.refined();
  }
  const auto [rate, residual] = fit_rate(hs, errs);
  MESSAGE("interpolation energy rate ", rate, " residual ", residual);
  CHECK(rate == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("companion approximation of P2 functions decays with rate two") {
  const auto exact = manufactured_solution("sin2");
  Triangulation mesh = Triangulation::structured_square(2);
  std::vector<double> hs, errs;
  for (int l = 0; l < 3; ++l) {
    auto dg = std::make_shared<FeSpace>(mesh, Scheme::DG);
    auto morley = std::make_shared<FeSpace>(mesh, Scheme::Morley);
    auto J = CompanionOperator::make(morley);
    const FeFunction v2 = inject(*exact, dg);
    const C1Function jv = J->apply(morley_interpolate(v2, morley));
    double l2sq = 0.0;
    const QuadratureRule rule = triangle_rule(14);
    for (int t = 0; t < mesh.triangle_count(); ++t) {
      const auto& tri = mesh.triangle(t);
      const Eigen::Vector2d c = mesh.centroid(t);
      for (int s = 0; s < 3; ++s)
        for_each_point(mesh.vertex(tri[s]), mesh.vertex(tri[(s + 1) % 3]), c, rule,
                       [&](const Eigen::Vector2d& x, double w) {
                         const double d =
                             v2.evaluate(t, x).value - jv.evaluate(t, x).value;
                         l2sq += w * d * d;
                       });
    }
    hs.push_back(mesh.h_max());
    errs.push_back(std::sqrt(l2sq));
    mesh = mesh.refined();
  }
  const auto [rate, residual] = fit_rate(hs, errs);
  MESSAGE("companion L2 approximation rate ", rate, " residual ", residual);
  CHECK(rate > 1.7);
}
