#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "biharm/solver.hpp"

namespace biharm {

enum class ErrorNorm { EnergyPw, H1Broken, L2 };

std::string to_string(ErrorNorm n);
ErrorNorm error_norm_from_string(const std::string& name);

/// Broken error norms of a discrete function against a closed-form exact
/// solution, integrated with a rule of degree >= 8.
std::map<std::string, double> error_norms(const ManufacturedSolution& exact,
                                          const FeFunction& uh,
                                          const std::vector<ErrorNorm>& which);

/// Vector version: component errors combined in the Euclidean sense.
std::map<std::string, double> error_norms(const ManufacturedSolution& exact_u,
                                          const ManufacturedSolution& exact_v,
                                          const VectorFeFunction& uh,
                                          const std::vector<ErrorNorm>& which);

/// || u - uh ||_h of the error against a smooth exact solution (piecewise
/// energy plus the j_h jump terms of the discrete part).
double error_h_norm(const ManufacturedSolution& exact, const FeFunction& uh);

struct StudyConfig {
  ProblemKind kind = ProblemKind::NavierStokes;
  Scheme scheme = Scheme::Morley;
  Smoother R = Smoother::Id;
  Smoother S = Smoother::JIM;
  SchemeParams params;
  std::string mesh_family = "square";  // "square", "lshape" or "file:<path>"
  int level_min = 2;
  int level_max = 4;
  std::string solution;         // manufactured name; empty for raw sources
  std::string solution_second;  // von Karman second component
  bool point_source = false;
  Eigen::Vector2d point_position = Eigen::Vector2d(0.5, 0.5);
  double point_magnitude = 1.0;
  std::vector<ErrorNorm> norms = {ErrorNorm::EnergyPw, ErrorNorm::H1Broken,
                                  ErrorNorm::L2};
  std::string output = "study";
  NewtonControls newton;
  std::optional<std::string> matrix_out;  // coordinate export of the last a_h

  void validate() const;
};

/// Key-value text configuration, one "key = value" per line, '#' comments.
StudyConfig parse_config(const std::filesystem::path& file);

struct LevelResult {
  int level = 0;
  int dofs = 0;
  double h_max = 0.0;
  double wall_time_s = 0.0;
  NewtonReport newton;
  std::map<std::string, double> errors;
};

struct StudyResult {
  std::vector<LevelResult> levels;
  std::map<std::string, double> rates;          // least-squares slope, last 3 levels
  std::map<std::string, double> rate_residuals; // fit residual per norm
  std::string error_oracle = "exact";

  void write_csv(const std::filesystem::path& file) const;
  void write_json(const std::filesystem::path& file, const StudyConfig& config) const;
  /// Parses the level table back and recomputes the (deterministic) rate fit.
  static StudyResult read_csv(const std::filesystem::path& file);
};

/// Least-squares slope of log(error) vs log(h) over the last up-to-3 levels,
/// plus the fit residual.
std::pair<double, double> fit_rate(const std::vector<double>& h,
                                   const std::vector<double>& err);

/// Runs the convergence study described by the configuration and emits
/// <output>.csv and <output>.json.
StudyResult run_study(const StudyConfig& config);

/// Comparison run: Morley/dG/C0IP errors in || . ||_h against the reference
/// quantity ||(1 - Pi_0) D^2 u||; requires S = JIM and a manufactured
/// solution.
struct ComparisonLevel {
  int level = 0;
  double h_max = 0.0;
  double err_morley = 0.0;
  double err_dg = 0.0;
  double err_c0ip = 0.0;
  double oscillation = 0.0;  // ||(1-Pi_0) D^2 u||
  bool degenerate = false;   // all errors below 1e-10, ratios skipped
  double min_ratio = 0.0;
  double max_ratio = 0.0;
};
std::vector<ComparisonLevel> compare_schemes(const StudyConfig& config);
void write_comparison_csv(const std::vector<ComparisonLevel>& rows,
                          const std::filesystem::path& file);

/// Mesh for a named family at a refinement level (level 0 is the base
/// mesh, each level is one red refinement).
Triangulation study_mesh(const std::string& family, int level);

}  // namespace biharm
