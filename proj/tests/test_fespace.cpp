#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "biharm/forms.hpp"

using namespace biharm;

namespace {

// smooth test function with closed-form derivatives
struct Smooth : Evaluable {
  std::function<double(const Eigen::Vector2d&)> v;
  std::function<Eigen::Vector2d(const Eigen::Vector2d&)> g;
  std::function<Eigen::Matrix2d(const Eigen::Vector2d&)> h;
  int degree = -1;

  Evaluation evaluate(int, const Eigen::Vector2d& x) const override {
    return {v(x), g(x), h(x)};
  }
  int polynomial_degree() const override { return degree; }
};

Smooth x_squared() {
  Smooth s;
  s.v = [](const Eigen::Vector2d& p) { return p.x() * p.x(); };
  s.g = [](const Eigen::Vector2d& p) { return Eigen::Vector2d(2.0 * p.x(), 0.0); };
  s.h = [](const Eigen::Vector2d&) {
    Eigen::Matrix2d m;
    m << 2, 0, 0, 0;
    return m;
  };
  s.degree = 2;
  return s;
}

// injects a function into a Lagrange-type space by its local dofs
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

FeFunction random_function(std::shared_ptr<const FeSpace> space, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  FeFunction f(space);
  for (int i = 0; i < space->dim(); ++i) f.coeffs()[i] = dist(rng);
  return f;
}

}  // namespace

TEST_CASE("space dimensions on the n=2 square") {
  const Triangulation mesh = Triangulation::structured_square(2);
  CHECK(FeSpace(mesh, Scheme::Morley).dim() == 9);
  CHECK(FeSpace(mesh, Scheme::DG).dim() == 48);
  CHECK(FeSpace(mesh, Scheme::WOPSIP).dim() == 48);
  CHECK(FeSpace(mesh, Scheme::C0IP).dim() == 9);
}

TEST_CASE("P2 evaluation reproduces x^2 on a DG space") {
  const Triangulation mesh = Triangulation::structured_square(2);
  auto space = std::make_shared<FeSpace>(mesh, Scheme::DG);
  const FeFunction f = inject(x_squared(), space);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    Eigen::Vector3d l(dist(rng), dist(rng), dist(rng));
    l /= l.sum();
    const auto& tri = mesh.triangle(t);
    const Eigen::Vector2d x = l[0] * mesh.vertex(tri[0]) + l[1] * mesh.vertex(tri[1]) +
                              l[2] * mesh.vertex(tri[2]);
    const Evaluation e = f.evaluate(t, x);
    CHECK(e.value == doctest::Approx(x.x() * x.x()).epsilon(1e-13));
    CHECK(e.gradient.x() == doctest::Approx(2.0 * x.x()).epsilon(1e-12));
    CHECK(std::abs(e.gradient.y()) < 1e-13);
    CHECK(e.hessian(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(std::abs(e.hessian(0, 1)) < 1e-12);
    CHECK(std::abs(e.hessian(1, 1)) < 1e-12);
  }
}

TEST_CASE("zero coefficients evaluate to zero") {
  const Triangulation mesh = Triangulation::structured_square(2);
  auto space = std::make_shared<FeSpace>(mesh, Scheme::Morley);
  const FeFunction zero(space);
  const Evaluation e = zero.evaluate(0, mesh.centroid(0));
  CHECK(e.value == 0.0);
  CHECK(e.gradient.norm() == 0.0);
  CHECK(e.hessian.norm() == 0.0);
}

TEST_CASE("Morley dof-functional duality is the identity") {
  for (auto base : {Triangulation::structured_square(2), Triangulation::lshape()}) {
    const Triangulation mesh = base.refined();
    auto space = std::make_shared<FeSpace>(mesh, Scheme::Morley);
    for (int a = 0; a < space->dim(); ++a) {
      FeFunction basis(space);
      basis.coeffs()[a] = 1.0;
      for (int t = 0; t < mesh.triangle_count(); ++t) {
        const auto dofs = space->local_dof_values(t, basis);
        for (int l = 0; l < 6; ++l) {
          const int g = space->global_dof(t, l);
          if (g < 0) continue;
          CHECK(dofs[l] ==
                doctest::Approx(g == a ? 1.0 : 0.0).epsilon(1e-12).scale(1.0));
        }
      }
    }
  }
}

TEST_CASE("trace jumps") {
  const Triangulation mesh = Triangulation::structured_square(2);
  auto dg = std::make_shared<FeSpace>(mesh, Scheme::DG);

  SUBCASE("globally smooth injection has zero jumps on interior edges") {
    const FeFunction f = inject(x_squared(), dg);
    for (int e = 0; e < mesh.edge_count(); ++e) {
      if (mesh.edge(e).on_boundary()) continue;
      for (double s : {0.1, 0.5, 0.9}) {
        const TraceJump tj = trace_jump(f, mesh, e, s);
        CHECK(std::abs(tj.value_jump) < 1e-13);
        CHECK(std::abs(tj.normal_derivative_jump) < 1e-12);
      }
    }
  }

  SUBCASE("Morley normal-derivative means are continuous") {
    auto morley = std::make_shared<FeSpace>(mesh, Scheme::Morley);
    const FeFunction v = random_function(morley, 11);
    const QuadratureRule rule = edge_rule(5);
    for (int e = 0; e < mesh.edge_count(); ++e) {
      if (mesh.edge(e).on_boundary()) continue;
      double mean = 0.0;
      for (int q = 0; q < rule.size(); ++q)
        mean += rule.weights[q] *
                trace_jump(v, mesh, e, rule.points(q, 0)).normal_derivative_jump;
      CHECK(std::abs(mean) < 1e-12);
    }
  }

  SUBCASE("indicator patch has unit value jump") {
    const Triangulation two = Triangulation::structured_square(1);
    auto space = std::make_shared<FeSpace>(two, Scheme::DG);
    FeFunction ind(space);
    for (int l = 0; l < 6; ++l) ind.coeffs()[space->global_dof(0, l)] = 1.0;
    int interior = -1;
    for (int e = 0; e < two.edge_count(); ++e)
      if (!two.edge(e).on_boundary()) interior = e;
    REQUIRE(interior >= 0);
    for (double s : {0.2, 0.5, 0.8}) {
      const TraceJump tj = trace_jump(ind, two, interior, s);
      CHECK(tj.value_jump == doctest::Approx(1.0).epsilon(1e-13));
    }
  }
}

TEST_CASE("piecewise constant Hessian projection") {
  SUBCASE("x^2 gives the constant Hessian and zero oscillation") {
    const Triangulation mesh = Triangulation::structured_square(2);
    const Smooth f = x_squared();
    const auto means = project_pw_constant_hessian(f, mesh);
    for (const auto& m : means) {
      CHECK(m(0, 0) == doctest::Approx(2.0).epsilon(1e-13));
      CHECK(std::abs(m(0, 1)) < 1e-13);
      CHECK(std::abs(m(1, 1)) < 1e-13);
    }
    CHECK(hessian_oscillation(f, mesh) < 1e-12);
  }

  SUBCASE("x^3 mean second derivative on the reference triangle") {
    const Triangulation mesh({{0, 0}, {1, 0}, {0, 1}}, {{{0, 1, 2}}});
    Smooth f;
    f.v = [](const Eigen::Vector2d& p) { return p.x() * p.x() * p.x(); };
    f.g = [](const Eigen::Vector2d& p) {
      return Eigen::Vector2d(3.0 * p.x() * p.x(), 0.0);
    };
    f.h = [](const Eigen::Vector2d& p) {
      Eigen::Matrix2d m;
      m << 6.0 * p.x(), 0, 0, 0;
      return m;
    };
    const auto means = project_pw_constant_hessian(f, mesh);
    CHECK(means[0](0, 0) == doctest::Approx(2.0).epsilon(1e-13));
  }

  SUBCASE("oscillation decays with rate one for sin(pi x) sin(pi y)") {
    Smooth f;
    f.v = [](const Eigen::Vector2d& p) {
      return std::sin(M_PI * p.x()) * std::sin(M_PI * p.y());
    };
    f.g = [](const Eigen::Vector2d& p) {
      return Eigen::Vector2d(M_PI * std::cos(M_PI * p.x()) * std::sin(M_PI * p.y()),
                             M_PI * std::sin(M_PI * p.x()) * std::cos(M_PI * p.y()));
    };
    f.h = [](const Eigen::Vector2d& p) {
      const double pi2 = M_PI * M_PI;
      Eigen::Matrix2d m;
      const double ss = std::sin(M_PI * p.x()) * std::sin(M_PI * p.y());
      const double cc = std::cos(M_PI * p.x()) * std::cos(M_PI * p.y());
      m << -pi2 * ss, pi2 * cc, pi2 * cc, -pi2 * ss;
      return m;
    };
    Triangulation mesh = Triangulation::structured_square(2);
    std::vector<double> osc;
    for (int l = 0; l < 3; ++l) {
      osc.push_back(hessian_oscillation(f, mesh));
      mesh = mesh.refined();
    }
    for (std::size_t l = 1; l < osc.size(); ++l) {
      const double rate = std::log2(osc[l - 1] / osc[l]);
      CHECK(rate == doctest::Approx(1.0).epsilon(0.1));
    }
  }
}

TEST_CASE("C0IP partition of unity before constraints") {
  const Triangulation mesh = Triangulation::structured_square(2).refined();
  const FeSpace space(mesh, Scheme::C0IP);
  std::array<Evaluation, 6> basis;
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    Eigen::Vector3d l(dist(rng), dist(rng), dist(rng));
    l /= l.sum();
    const auto& tri = mesh.triangle(t);
    const Eigen::Vector2d x = l[0] * mesh.vertex(tri[0]) + l[1] * mesh.vertex(tri[1]) +
                              l[2] * mesh.vertex(tri[2]);
    space.eval_basis(t, x, basis);
    double sum = 0.0;
    Eigen::Vector2d gsum = Eigen::Vector2d::Zero();
    for (const auto& b : basis) {
      sum += b.value;
      gsum += b.gradient;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(gsum.norm() < 1e-11);
  }
}

TEST_CASE("norm equivalence ratios stay in a stable interval") {
  // the ratio intervals are recorded and compared across one refinement;
  // no universal constant is asserted
  Triangulation coarse = Triangulation::structured_square(2);
  Triangulation fine = coarse.refined();
  const SchemeParams params;
  auto interval = [&](const Triangulation& mesh, Scheme scheme, NormTag tag,
                      unsigned seed) {
    auto space = std::make_shared<FeSpace>(mesh, scheme);
    double lo = 1e300, hi = 0.0;
    for (int k = 0; k < 50; ++k) {
      const FeFunction v = random_function(space, seed + k);
      const double num = norms(v, mesh, tag, params);
      const double den = norms(v, mesh, NormTag::H, params);
      REQUIRE(den > 0.0);
      lo = std::min(lo, num / den);
      hi = std::max(hi, num / den);
    }
    return std::pair<double, double>{lo, hi};
  };

  const auto [dg_lo_c, dg_hi_c] = interval(coarse, Scheme::DG, NormTag::DG, 100);
  const auto [dg_lo_f, dg_hi_f] = interval(fine, Scheme::DG, NormTag::DG, 200);
  MESSAGE("dG/h ratio interval coarse [", dg_lo_c, ", ", dg_hi_c, "] fine [",
          dg_lo_f, ", ", dg_hi_f, "]");
  CHECK(dg_lo_c > 0.1);
  CHECK(dg_hi_f < 10.0 * dg_hi_c);  // stable under one refinement

  const auto [ip_lo_c, ip_hi_c] = interval(coarse, Scheme::C0IP, NormTag::IP, 300);
  const auto [ip_lo_f, ip_hi_f] = interval(fine, Scheme::C0IP, NormTag::IP, 400);
  MESSAGE("IP/h ratio interval coarse [", ip_lo_c, ", ", ip_hi_c, "] fine [",
          ip_lo_f, ", ", ip_hi_f, "]");
  CHECK(ip_lo_c > 0.1);
  CHECK(ip_hi_f < 10.0 * ip_hi_c);

  // on Morley functions the h norm equals the piecewise energy norm
  auto morley = std::make_shared<FeSpace>(fine, Scheme::Morley);
  for (int k = 0; k < 10; ++k) {
    const FeFunction v = random_function(morley, 500 + k);
    const double pw = norms(v, fine, NormTag::EnergyPw);
    const double h = norms(v, fine, NormTag::H);
    CHECK(h == doctest::Approx(pw).epsilon(1e-12));
  }
}

TEST_CASE("coefficient save/load round trip") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "biharm_fespace_test";
  fs::create_directories(dir);
  const Triangulation mesh = Triangulation::structured_square(3);
  auto space = std::make_shared<FeSpace>(mesh, Scheme::Morley);
  const FeFunction f = random_function(space, 42);
  const fs::path file = dir / "coeffs.txt";
  f.save(file);
  const FeFunction g = FeFunction::load(file, space);
  CHECK((f.coeffs() - g.coeffs()).lpNorm<Eigen::Infinity>() == 0.0);

  auto dg = std::make_shared<FeSpace>(mesh, Scheme::DG);
  CHECK_THROWS_AS(FeFunction::load(file, dg), Error);  // scheme tag mismatch
  const Triangulation other = Triangulation::structured_square(4);
  auto morley4 = std::make_shared<FeSpace>(other, Scheme::Morley);
  CHECK_THROWS_AS(FeFunction::load(file, morley4), Error);  // mesh hash mismatch
}
