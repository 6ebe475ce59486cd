#include "biharm/study.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace biharm {

std::string to_string(ErrorNorm n) {
  switch (n) {
    case ErrorNorm::EnergyPw: return "energy_pw";
    case ErrorNorm::H1Broken: return "H1_broken";
    case ErrorNorm::L2: return "L2";
  }
  return "?";
}

ErrorNorm error_norm_from_string(const std::string& name) {
  if (name == "energy_pw") return ErrorNorm::EnergyPw;
  if (name == "H1_broken" || name == "h1_broken") return ErrorNorm::H1Broken;
  if (name == "L2" || name == "l2") return ErrorNorm::L2;
  throw Error("config_error", "unknown error norm '" + name + "'");
}

namespace {

constexpr int kErrorQuadDegree = 10;

struct ErrorAccumulator {
  double energy = 0.0, h1 = 0.0, l2 = 0.0;

  void add(const Evaluation& exact, const Evaluation& approx, double w) {
    energy += w * (exact.hessian - approx.hessian).squaredNorm();
    h1 += w * (exact.gradient - approx.gradient).squaredNorm();
    l2 += w * (exact.value - approx.value) * (exact.value - approx.value);
  }
  double get(ErrorNorm n) const {
    switch (n) {
      case ErrorNorm::EnergyPw: return std::sqrt(energy);
      case ErrorNorm::H1Broken: return std::sqrt(h1);
      case ErrorNorm::L2: return std::sqrt(l2);
    }
    return 0.0;
  }
};

ErrorAccumulator accumulate_errors(const ManufacturedSolution& exact,
                                   const FeFunction& uh) {
  const Triangulation& mesh = uh.space().mesh();
  const QuadratureRule rule = triangle_rule(kErrorQuadDegree);
  ErrorAccumulator acc;
  for (int t = 0; t < mesh.triangle_count(); ++t)
    for_each_point(mesh, t, rule, [&](const Eigen::Vector2d& x, double w) {
      acc.add(exact.evaluate(t, x), uh.evaluate(t, x), w);
    });
  return acc;
}

// difference of two piecewise evaluable functions
class Difference : public Evaluable {
public:
  Difference(const Evaluable& a, const Evaluable& b) : a_(a), b_(b) {}
  Evaluation evaluate(int t, const Eigen::Vector2d& x) const override {
    const Evaluation ea = a_.evaluate(t, x);
    const Evaluation eb = b_.evaluate(t, x);
    Evaluation out;
    out.value = ea.value - eb.value;
    out.gradient = ea.gradient - eb.gradient;
    out.hessian = ea.hessian - eb.hessian;
    return out;
  }
  bool on_subtriangles() const override {
    return a_.on_subtriangles() || b_.on_subtriangles();
  }

private:
  const Evaluable& a_;
  const Evaluable& b_;
};

}  // namespace

std::map<std::string, double> error_norms(const ManufacturedSolution& exact,
                                          const FeFunction& uh,
                                          const std::vector<ErrorNorm>& which) {
  const ErrorAccumulator acc = accumulate_errors(exact, uh);
  std::map<std::string, double> out;
  for (ErrorNorm n : which) out[to_string(n)] = acc.get(n);
  return out;
}

std::map<std::string, double> error_norms(const ManufacturedSolution& exact_u,
                                          const ManufacturedSolution& exact_v,
                                          const VectorFeFunction& uh,
                                          const std::vector<ErrorNorm>& which) {
  const ErrorAccumulator au = accumulate_errors(exact_u, uh.first());
  const ErrorAccumulator av = accumulate_errors(exact_v, uh.second());
  std::map<std::string, double> out;
  for (ErrorNorm n : which)
    out[to_string(n)] = std::hypot(au.get(n), av.get(n));
  return out;
}

double error_h_norm(const ManufacturedSolution& exact, const FeFunction& uh) {
  const Difference diff(exact, uh);
  return norms(diff, uh.space().mesh(), NormTag::H);
}

void StudyConfig::validate() const {
  params.validate();
  if (level_min < 0 || level_max < level_min)
    throw Error("config_error", "invalid level range");
  if (norms.empty()) throw Error("config_error", "no error norms requested");
  if (!point_source && solution.empty())
    throw Error("config_error", "either a manufactured solution or a point source is required");
  if (kind == ProblemKind::VonKarman && !solution.empty() && solution_second.empty())
    throw Error("config_error", "von Karman studies need solution and solution_second");
}

StudyConfig parse_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error("config_error", "cannot open config file " + file.string());
  StudyConfig cfg;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& what) {
    throw Error("config_error",
                file.string() + ":" + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (eq == std::string::npos) fail("expected 'key = value'");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "problem") cfg.kind = problem_from_string(value);
      else if (key == "scheme") cfg.scheme = scheme_from_string(value);
      else if (key == "R" || key == "r") cfg.R = smoother_from_string(value);
      else if (key == "S" || key == "s") cfg.S = smoother_from_string(value);
      else if (key == "sigma1") cfg.params.sigma1 = std::stod(value);
      else if (key == "sigma2") cfg.params.sigma2 = std::stod(value);
      else if (key == "sigma_ip") cfg.params.sigma_ip = std::stod(value);
      else if (key == "theta") cfg.params.theta = std::stod(value);
      else if (key == "mesh") cfg.mesh_family = value;
      else if (key == "levels") {
        const auto colon = value.find(':');
        if (colon == std::string::npos) {
          cfg.level_min = cfg.level_max = std::stoi(value);
        } else {
          cfg.level_min = std::stoi(value.substr(0, colon));
          cfg.level_max = std::stoi(value.substr(colon + 1));
        }
      } else if (key == "solution") {
        const auto comma = value.find(',');
        if (comma == std::string::npos) {
          cfg.solution = value;
        } else {
          cfg.solution = value.substr(0, comma);
          cfg.solution_second = value.substr(comma + 1);
        }
      } else if (key == "source") {
        std::istringstream ss(value);
        std::string kindword;
        ss >> kindword;
        if (kindword != "point") fail("only 'source = point x y magnitude' is supported");
        double px, py, mag;
        if (!(ss >> px >> py >> mag)) fail("expected 'point x y magnitude'");
        cfg.point_source = true;
        cfg.point_position = {px, py};
        cfg.point_magnitude = mag;
      } else if (key == "norms") {
        cfg.norms.clear();
        std::istringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ',')) {
          const auto b = item.find_first_not_of(" \t");
          const auto e = item.find_last_not_of(" \t");
          if (b != std::string::npos)
            cfg.norms.push_back(error_norm_from_string(item.substr(b, e - b + 1)));
        }
      } else if (key == "output") cfg.output = value;
      else if (key == "newton_tol") cfg.newton.tolerance = std::stod(value);
      else if (key == "newton_max_iter") cfg.newton.max_iterations = std::stoi(value);
      else if (key == "matrix_out") cfg.matrix_out = value;
      else fail("unknown key '" + key + "'");
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      fail(std::string("bad value: ") + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

Triangulation study_mesh(const std::string& family, int level) {
  Triangulation mesh = [&]() {
    if (family == "square") return Triangulation::structured_square(1);
    if (family == "lshape") return Triangulation::lshape();
    if (family.rfind("file:", 0) == 0) return Triangulation::load(family.substr(5));
    throw Error("config_error", "unknown mesh family '" + family + "'");
  }();
  for (int l = 0; l < level; ++l) mesh = mesh.refined();
  return mesh;
}

std::pair<double, double> fit_rate(const std::vector<double>& h,
                                   const std::vector<double>& err) {
  const int n = static_cast<int>(h.size());
  const int m = std::min(3, n);
  if (m < 2) return {std::nan(""), 0.0};
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = n - m; i < n; ++i) {
    if (!(err[i] > 0.0)) return {std::nan(""), 0.0};
    const double x = std::log(h[i]);
    const double y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = m * sxx - sx * sx;
  const double slope = (m * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / m;
  double res = 0.0;
  for (int i = n - m; i < n; ++i) {
    const double d = std::log(err[i]) - (intercept + slope * std::log(h[i]));
    res += d * d;
  }
  return {slope, std::sqrt(res)};
}

namespace {

ProblemSpec make_problem_spec(const StudyConfig& config) {
  ProblemSpec spec;
  spec.kind = config.kind;
  spec.scheme = config.scheme;
  spec.params = config.params;
  spec.R = config.R;
  spec.S = config.S;
  spec.newton = config.newton;
  if (config.point_source) {
    spec.source =
        SourceFunctional::point_load(config.point_position, config.point_magnitude);
    spec.source_second = SourceFunctional::zero();
    return spec;
  }
  const auto u = manufactured_solution(config.solution);
  switch (config.kind) {
    case ProblemKind::Biharmonic:
      spec.source = SourceFunctional::density(
          [u](const Eigen::Vector2d& p) { return biharmonic_source(*u, p); });
      break;
    case ProblemKind::NavierStokes:
      spec.source = SourceFunctional::density(
          [u](const Eigen::Vector2d& p) { return navier_stokes_source(*u, p); });
      break;
    case ProblemKind::VonKarman: {
      const auto v = manufactured_solution(config.solution_second);
      spec.source = SourceFunctional::density([u, v](const Eigen::Vector2d& p) {
        return von_karman_source_first(*u, *v, p);
      });
      spec.source_second = SourceFunctional::density([u, v](const Eigen::Vector2d& p) {
        return von_karman_source_second(*u, *v, p);
      });
      break;
    }
  }
  return spec;
}

// errors of a coarse solution against a reference solution on a finer,
// nested mesh; `ancestors` maps fine triangles to coarse ones
ErrorAccumulator accumulate_reference_errors(const FeFunction& reference,
                                             const FeFunction& coarse,
                                             const std::vector<int>& ancestors) {
  const Triangulation& fine = reference.space().mesh();
  const QuadratureRule rule = triangle_rule(4);
  ErrorAccumulator acc;
  for (int t = 0; t < fine.triangle_count(); ++t)
    for_each_point(fine, t, rule, [&](const Eigen::Vector2d& x, double w) {
      acc.add(reference.evaluate(t, x), coarse.evaluate(ancestors[t], x), w);
    });
  return acc;
}

}  // namespace

StudyResult run_study(const StudyConfig& config) {
  config.validate();
  const int reference_offset = config.point_source ? 2 : 0;
  const int top_level = config.level_max + reference_offset;

  std::vector<std::shared_ptr<const Triangulation>> meshes;
  meshes.push_back(
      std::make_shared<Triangulation>(study_mesh(config.mesh_family, 0)));
  for (int l = 1; l <= top_level; ++l)
    meshes.push_back(std::make_shared<Triangulation>(meshes.back()->refined()));

  StudyResult result;
  std::vector<std::shared_ptr<const FeSpace>> spaces(top_level + 1);
  std::vector<Eigen::VectorXd> solutions(top_level + 1);

  auto solve_level = [&](int level) -> NewtonReport {
    spaces[level] = std::make_shared<FeSpace>(*meshes[level], config.scheme);
    DiscreteProblem problem(make_problem_spec(config), spaces[level]);
    NewtonReport report = newton_solve(problem, initial_guess(problem));
    solutions[level] = report.solution;
    if (config.matrix_out && level == config.level_max)
      problem.scheme_matrix().save_coordinate_format(*config.matrix_out);
    return report;
  };

  for (int level = config.level_min; level <= config.level_max; ++level) {
    const auto t0 = std::chrono::steady_clock::now();
    LevelResult lr;
    lr.level = level;
    lr.h_max = meshes[level]->h_max();
    lr.newton = solve_level(level);
    lr.dofs = static_cast<int>(solutions[level].size());

    if (!config.point_source) {
      const auto exact = manufactured_solution(config.solution);
      if (config.kind == ProblemKind::VonKarman) {
        const auto exact_v = manufactured_solution(config.solution_second);
        const int n = spaces[level]->dim();
        VectorFeFunction uh(FeFunction(spaces[level], solutions[level].head(n)),
                            FeFunction(spaces[level], solutions[level].tail(n)));
        lr.errors = error_norms(*exact, *exact_v, uh, config.norms);
      } else {
        FeFunction uh(spaces[level], solutions[level]);
        lr.errors = error_norms(*exact, uh, config.norms);
      }
    }
    lr.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.levels.push_back(std::move(lr));
  }

  if (config.point_source) {
    // fine-mesh reference two levels beyond the finest study level
    result.error_oracle =
        "reference(level " + std::to_string(top_level) + ")";
    solve_level(top_level);
    const int nref = spaces[top_level]->dim();
    for (LevelResult& lr : result.levels) {
      // ancestor chain from the reference mesh down to this level
      std::vector<int> anc(meshes[top_level]->triangle_count());
      for (std::size_t t = 0; t < anc.size(); ++t) anc[t] = static_cast<int>(t);
      for (int l = top_level; l > lr.level; --l)
        for (auto& a : anc) a = meshes[l]->parent(a);
      const int n = spaces[lr.level]->dim();
      if (config.kind == ProblemKind::VonKarman) {
        const ErrorAccumulator au = accumulate_reference_errors(
            FeFunction(spaces[top_level], solutions[top_level].head(nref)),
            FeFunction(spaces[lr.level], solutions[lr.level].head(n)), anc);
        const ErrorAccumulator av = accumulate_reference_errors(
            FeFunction(spaces[top_level], solutions[top_level].tail(nref)),
            FeFunction(spaces[lr.level], solutions[lr.level].tail(n)), anc);
        for (ErrorNorm which : config.norms)
          lr.errors[to_string(which)] = std::hypot(au.get(which), av.get(which));
      } else {
        const ErrorAccumulator acc = accumulate_reference_errors(
            FeFunction(spaces[top_level], solutions[top_level]),
            FeFunction(spaces[lr.level], solutions[lr.level]), anc);
        for (ErrorNorm which : config.norms)
          lr.errors[to_string(which)] = acc.get(which);
      }
    }
  }

  // deterministic rate fit over the last three levels
  std::vector<double> hs;
  for (const LevelResult& lr : result.levels) hs.push_back(lr.h_max);
  for (ErrorNorm which : config.norms) {
    const std::string tag = to_string(which);
    std::vector<double> errs;
    for (const LevelResult& lr : result.levels) errs.push_back(lr.errors.at(tag));
    const auto [rate, res] = fit_rate(hs, errs);
    result.rates[tag] = rate;
    result.rate_residuals[tag] = res;
  }

  result.write_csv(config.output + ".csv");
  result.write_json(config.output + ".json", config);
  return result;
}

void StudyResult::write_csv(const std::filesystem::path& file) const {
  std::ofstream out(file);
  if (!out) throw Error("io_error", "cannot write " + file.string());
  out.precision(17);
  out << "level,dofs,h_max,newton_iterations,wall_time_s";
  std::vector<std::string> tags;
  if (!levels.empty())
    for (const auto& [tag, _] : levels.front().errors) tags.push_back(tag);
  for (const auto& tag : tags) out << ",err_" << tag;
  out << '\n';
  for (const LevelResult& lr : levels) {
    out << lr.level << ',' << lr.dofs << ',' << lr.h_max << ','
        << lr.newton.iterations() << ',' << lr.wall_time_s;
    for (const auto& tag : tags) out << ',' << lr.errors.at(tag);
    out << '\n';
  }
}

StudyResult StudyResult::read_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error("io_error", "cannot open " + file.string());
  std::string line;
  if (!std::getline(in, line)) throw Error("io_error", "empty csv " + file.string());
  std::vector<std::string> columns;
  {
    std::istringstream header(line);
    std::string col;
    while (std::getline(header, col, ',')) columns.push_back(col);
  }
  StudyResult result;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    std::string cell;
    LevelResult lr;
    std::size_t c = 0;
    while (std::getline(row, cell, ',')) {
      if (c >= columns.size()) throw Error("io_error", "ragged csv row");
      const std::string& name = columns[c];
      if (name == "level") lr.level = std::stoi(cell);
      else if (name == "dofs") lr.dofs = std::stoi(cell);
      else if (name == "h_max") lr.h_max = std::stod(cell);
      else if (name == "newton_iterations") {
        const int iters = std::stoi(cell);
        lr.newton.steps.resize(iters);
        for (int i = 0; i < iters; ++i) lr.newton.steps[i].iteration = i + 1;
      } else if (name == "wall_time_s") lr.wall_time_s = std::stod(cell);
      else if (name.rfind("err_", 0) == 0) lr.errors[name.substr(4)] = std::stod(cell);
      else throw Error("io_error", "unknown csv column " + name);
      ++c;
    }
    result.levels.push_back(std::move(lr));
  }
  // recompute the deterministic rate fit
  std::vector<double> hs;
  for (const LevelResult& lr : result.levels) hs.push_back(lr.h_max);
  if (!result.levels.empty()) {
    for (const auto& [tag, _] : result.levels.front().errors) {
      std::vector<double> errs;
      for (const LevelResult& lr : result.levels) errs.push_back(lr.errors.at(tag));
      const auto [rate, res] = fit_rate(hs, errs);
      result.rates[tag] = rate;
      result.rate_residuals[tag] = res;
    }
  }
  return result;
}

void StudyResult::write_json(const std::filesystem::path& file,
                             const StudyConfig& config) const {
  nlohmann::json j;
  j["config"]["problem"] = to_string(config.kind);
  j["config"]["scheme"] = to_string(config.scheme);
  j["config"]["R"] = to_string(config.R);
  j["config"]["S"] = to_string(config.S);
  j["config"]["sigma1"] = config.params.sigma1;
  j["config"]["sigma2"] = config.params.sigma2;
  j["config"]["sigma_ip"] = config.params.sigma_ip;
  j["config"]["theta"] = config.params.theta;
  j["config"]["mesh"] = config.mesh_family;
  j["config"]["levels"] = {config.level_min, config.level_max};
  if (!config.solution.empty()) j["config"]["solution"] = config.solution;
  if (!config.solution_second.empty())
    j["config"]["solution_second"] = config.solution_second;
  if (config.point_source) {
    j["config"]["point_source"] = {{"x", config.point_position.x()},
                                   {"y", config.point_position.y()},
                                   {"magnitude", config.point_magnitude}};
  }
  j["error_oracle"] = error_oracle;
  for (const LevelResult& lr : levels) {
    nlohmann::json lvl;
    lvl["level"] = lr.level;
    lvl["dofs"] = lr.dofs;
    lvl["h_max"] = lr.h_max;
    lvl["wall_time_s"] = lr.wall_time_s;
    lvl["errors"] = lr.errors;
    lvl["newton"]["converged"] = lr.newton.converged;
    lvl["newton"]["iterations"] = lr.newton.iterations();
    nlohmann::json steps = nlohmann::json::array();
    for (const NewtonStep& s : lr.newton.steps)
      steps.push_back({{"iteration", s.iteration},
                       {"residual_dual_norm", s.residual_dual_norm},
                       {"correction_norm", s.correction_norm},
                       {"quadratic_ratio", s.quadratic_ratio}});
    lvl["newton"]["steps"] = steps;
    j["levels"].push_back(lvl);
  }
  j["rates"] = rates;
  j["rate_residuals"] = rate_residuals;
  std::ofstream out(file);
  if (!out) throw Error("io_error", "cannot write " + file.string());
  out << j.dump(2) << '\n';
}

std::vector<ComparisonLevel> compare_schemes(const StudyConfig& config) {
  if (config.S != Smoother::JIM)
    throw Error("config_error", "the comparison run requires S = jim");
  if (config.solution.empty())
    throw Error("config_error", "the comparison run needs a manufactured solution");

  std::vector<std::shared_ptr<const Triangulation>> meshes;
  meshes.push_back(
      std::make_shared<Triangulation>(study_mesh(config.mesh_family, 0)));
  for (int l = 1; l <= config.level_max; ++l)
    meshes.push_back(std::make_shared<Triangulation>(meshes.back()->refined()));

  const auto exact = manufactured_solution(config.solution);
  std::shared_ptr<const ManufacturedSolution> exact_v;
  if (config.kind == ProblemKind::VonKarman)
    exact_v = manufactured_solution(config.solution_second);

  std::vector<ComparisonLevel> rows;
  for (int level = config.level_min; level <= config.level_max; ++level) {
    ComparisonLevel row;
    row.level = level;
    row.h_max = meshes[level]->h_max();

    auto solve_error = [&](Scheme scheme) -> double {
      StudyConfig c = config;
      c.scheme = scheme;
      auto space = std::make_shared<FeSpace>(*meshes[level], scheme);
      DiscreteProblem problem(make_problem_spec(c), space);
      const NewtonReport report = newton_solve(problem, initial_guess(problem));
      if (config.kind == ProblemKind::VonKarman) {
        const int n = space->dim();
        const double e1 =
            error_h_norm(*exact, FeFunction(space, report.solution.head(n)));
        const double e2 =
            error_h_norm(*exact_v, FeFunction(space, report.solution.tail(n)));
        return std::hypot(e1, e2);
      }
      return error_h_norm(*exact, FeFunction(space, report.solution));
    };

    row.err_morley = solve_error(Scheme::Morley);
    row.err_dg = solve_error(Scheme::DG);
    row.err_c0ip = solve_error(Scheme::C0IP);
    row.oscillation = hessian_oscillation(*exact, *meshes[level], kErrorQuadDegree);
    if (config.kind == ProblemKind::VonKarman)
      row.oscillation = std::hypot(
          row.oscillation,
          hessian_oscillation(*exact_v, *meshes[level], kErrorQuadDegree));

    const std::array<double, 4> vals = {row.err_morley, row.err_dg, row.err_c0ip,
                                        row.oscillation};
    const double lo = *std::min_element(vals.begin(), vals.end());
    const double hi = *std::max_element(vals.begin(), vals.end());
    if (hi <= 1e-10) {
      row.degenerate = true;  // exactly representable solution, ratios skipped
    } else {
      row.min_ratio = lo / hi;
      row.max_ratio = hi / lo;
    }
    rows.push_back(row);
  }
  return rows;
}

void write_comparison_csv(const std::vector<ComparisonLevel>& rows,
                          const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw Error("io_error", "cannot write " + file.string());
  out.precision(17);
  out << "level,h_max,err_morley,err_dg,err_c0ip,oscillation,min_ratio,max_ratio,"
         "degenerate\n";
  for (const ComparisonLevel& r : rows)
    out << r.level << ',' << r.h_max << ',' << r.err_morley << ',' << r.err_dg
        << ',' << r.err_c0ip << ',' << r.oscillation << ',' << r.min_ratio << ','
        << r.max_ratio << ',' << (r.degenerate ? 1 : 0) << '\n';
}

}  // namespace biharm
