#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "biharm/study.hpp"

using namespace biharm;

namespace {

namespace fs = std::filesystem;

fs::path workdir() {
  const fs::path dir = fs::temp_directory_path() / "biharm_study_test";
  fs::create_directories(dir);
  return dir;
}

// global quadratic with closed-form derivatives, exactly representable in P2
class QuadraticExact : public ManufacturedSolution {
public:
  double derivative(int dx, int dy, const Eigen::Vector2d& p) const override {
    // u = x^2 + x y
    if (dx == 0 && dy == 0) return p.x() * p.x() + p.x() * p.y();
    if (dx == 1 && dy == 0) return 2.0 * p.x() + p.y();
    if (dx == 0 && dy == 1) return p.x();
    if (dx == 2 && dy == 0) return 2.0;
    if (dx == 1 && dy == 1) return 1.0;
    return 0.0;
  }
  std::string name() const override { return "quadratic"; }
};

}  // namespace

TEST_CASE("error norms") {
  const Triangulation mesh = Triangulation::structured_square(3);

  SUBCASE("DG interpolant of a global quadratic has zero errors") {
    auto dg = std::make_shared<FeSpace>(mesh, Scheme::DG);
    const QuadraticExact exact;
    FeFunction uh(dg);
    for (int t = 0; t < mesh.triangle_count(); ++t) {
      const auto dofs = dg->local_dof_values(t, exact);
      for (int l = 0; l < 6; ++l) uh.coeffs()[dg->global_dof(t, l)] = dofs[l];
    }
    const auto errs = error_norms(exact, uh,
                                  {ErrorNorm::EnergyPw, ErrorNorm::H1Broken,
                                   ErrorNorm::L2});
    for (const auto& [tag, err] : errs) CHECK(err <= 1e-12);
  }

  SUBCASE("zero approximation reproduces the exact energy norm") {
    auto morley = std::make_shared<FeSpace>(mesh, Scheme::Morley);
    const auto exact = manufactured_solution("sin2");
    const FeFunction zero(morley);
    const auto errs = error_norms(*exact, zero, {ErrorNorm::EnergyPw});
    // closed form: int |D^2 sin^2(pi x) sin^2(pi y)|^2 = 2 pi^4
    CHECK(errs.at("energy_pw") ==
          doctest::Approx(std::sqrt(2.0) * M_PI * M_PI).epsilon(1e-8));
  }

  SUBCASE("vector errors combine in the Euclidean sense") {
    auto morley = std::make_shared<FeSpace>(mesh, Scheme::Morley);
    const auto u = manufactured_solution("sin2");
    const auto v = manufactured_solution("poly");
    const VectorFeFunction zero(morley);
    const auto errs =
        error_norms(*u, *v, zero, {ErrorNorm::L2});
    const auto eu = error_norms(*u, FeFunction(morley), {ErrorNorm::L2});
    const auto ev = error_norms(*v, FeFunction(morley), {ErrorNorm::L2});
    CHECK(errs.at("L2") ==
          doctest::Approx(std::hypot(eu.at("L2"), ev.at("L2"))).epsilon(1e-13));
  }
}

TEST_CASE("rate fitting") {
  SUBCASE("exact power data recovers the exponent") {
    std::vector<double> h = {0.4, 0.2, 0.1, 0.05};
    std::vector<double> e;
    for (double hh : h) e.push_back(3.0 * std::pow(hh, 1.75));
    const auto [rate, res] = fit_rate(h, e);
    CHECK(rate == doctest::Approx(1.75).epsilon(1e-12));
    CHECK(res < 1e-12);
  }
  SUBCASE("deterministic: identical inputs give identical fits") {
    std::vector<double> h = {0.4, 0.2, 0.1};
    std::vector<double> e = {1.1e-1, 2.9e-2, 7.4e-3};
    const auto a = fit_rate(h, e);
    const auto b = fit_rate(h, e);
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
  }
  SUBCASE("uses only the last three levels") {
    std::vector<double> h = {0.8, 0.4, 0.2, 0.1};
    std::vector<double> e = {17.0, 0.4, 0.1, 0.025};  // first level off-trend
    const auto [rate, res] = fit_rate(h, e);
    CHECK(rate == doctest::Approx(2.0).epsilon(1e-10));
  }
}

TEST_CASE("config parsing") {
  const fs::path dir = workdir();
  const fs::path file = dir / "study.cfg";
  {
    std::ofstream out(file);
    out << "# example study\n";
    out << "problem = navier_stokes\n";
    out << "scheme = dg\n";
    out << "R = im\n";
    out << "S = jim\n";
    out << "sigma1 = 25\n";
    out << "theta = 0.5\n";
    out << "mesh = square\n";
    out << "levels = 1:3\n";
    out << "solution = sin2\n";
    out << "norms = energy_pw, L2\n";
    out << "output = " << (dir / "ns_dg").string() << "\n";
    out << "newton_tol = 1e-9\n";
  }
  const StudyConfig cfg = parse_config(file);
  CHECK(cfg.kind == ProblemKind::NavierStokes);
  CHECK(cfg.scheme == Scheme::DG);
  CHECK(cfg.R == Smoother::IM);
  CHECK(cfg.S == Smoother::JIM);
  CHECK(cfg.params.sigma1 == 25.0);
  CHECK(cfg.params.theta == 0.5);
  CHECK(cfg.level_min == 1);
  CHECK(cfg.level_max == 3);
  CHECK(cfg.solution == "sin2");
  CHECK(cfg.norms.size() == 2);
  CHECK(cfg.newton.tolerance == 1e-9);

  SUBCASE("unknown keys are rejected with the line number") {
    const fs::path bad = dir / "bad.cfg";
    std::ofstream out(bad);
    out << "problem = navier_stokes\nsolution = sin2\nbogus = 1\n";
    out.close();
    CHECK_THROWS_WITH_AS(parse_config(bad), doctest::Contains(":3:"), Error);
  }
  SUBCASE("invalid scheme rejected") {
    const fs::path bad = dir / "bad2.cfg";
    std::ofstream out(bad);
    out << "scheme = q1\nsolution = sin2\n";
    out.close();
    CHECK_THROWS_AS(parse_config(bad), Error);
  }
}

TEST_CASE("biharmonic Morley study converges at the expected rates") {
  const fs::path dir = workdir();
  StudyConfig cfg;
  cfg.kind = ProblemKind::Biharmonic;
  cfg.scheme = Scheme::Morley;
  cfg.R = Smoother::Id;
  cfg.S = Smoother::JIM;
  cfg.mesh_family = "square";
  cfg.level_min = 1;
  cfg.level_max = 3;
  cfg.solution = "sin2";
  cfg.output = (dir / "biharmonic_morley").string();
  const StudyResult result = run_study(cfg);
  REQUIRE(result.levels.size() == 3);
  for (const auto& lr : result.levels) {
    CHECK(lr.newton.converged);
    CHECK(lr.newton.iterations() == 1);  // linear problem
  }
  MESSAGE("rates: energy ", result.rates.at("energy_pw"), " H1 ",
          result.rates.at("H1_broken"), " L2 ", result.rates.at("L2"));
  CHECK(result.rates.at("energy_pw") == doctest::Approx(1.0).epsilon(0.15));
  CHECK(result.rates.at("L2") == doctest::Approx(2.0).epsilon(0.15));

  SUBCASE("csv round trip reproduces the level table and rates") {
    const StudyResult parsed = StudyResult::read_csv(cfg.output + ".csv");
    REQUIRE(parsed.levels.size() == result.levels.size());
    for (std::size_t i = 0; i < parsed.levels.size(); ++i) {
      CHECK(parsed.levels[i].level == result.levels[i].level);
      CHECK(parsed.levels[i].dofs == result.levels[i].dofs);
      CHECK(parsed.levels[i].h_max == result.levels[i].h_max);
      CHECK(parsed.levels[i].wall_time_s == result.levels[i].wall_time_s);
      CHECK(parsed.levels[i].newton.iterations() ==
            result.levels[i].newton.iterations());
      for (const auto& [tag, err] : result.levels[i].errors)
        CHECK(parsed.levels[i].errors.at(tag) == err);
    }
    for (const auto& [tag, rate] : result.rates) {
      CHECK(parsed.rates.at(tag) == rate);
      CHECK(parsed.rate_residuals.at(tag) == result.rate_residuals.at(tag));
    }
  }

  SUBCASE("json emitted") {
    std::ifstream in(cfg.output + ".json");
    REQUIRE(in.good());
    std::string all((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
    CHECK(all.find("\"rates\"") != std::string::npos);
    CHECK(all.find("\"newton\"") != std::string::npos);
  }
}

TEST_CASE("study mesh families") {
  CHECK(study_mesh("square", 0).triangle_count() == 2);
  CHECK(study_mesh("square", 2).triangle_count() == 32);
  CHECK(study_mesh("lshape", 1).triangle_count() == 24);
  CHECK_THROWS_AS(study_mesh("dodecahedron", 0), Error);

  const fs::path dir = workdir();
  const fs::path file = dir / "saved.mesh";
  Triangulation::lshape().save(file);
  CHECK(study_mesh("file:" + file.string(), 0).triangle_count() == 6);
}

TEST_CASE("matrix export through the study config") {
  const fs::path dir = workdir();
  StudyConfig cfg;
  cfg.kind = ProblemKind::Biharmonic;
  cfg.scheme = Scheme::Morley;
  cfg.level_min = 1;
  cfg.level_max = 1;
  cfg.solution = "sin2";
  cfg.output = (dir / "export_run").string();
  cfg.matrix_out = (dir / "a_h.txt").string();
  run_study(cfg);
  std::ifstream in(*cfg.matrix_out);
  REQUIRE(in.good());
  int rows, cols, nnz;
  in >> rows >> cols >> nnz;
  CHECK(rows == cols);
  CHECK(nnz > 0);
}
