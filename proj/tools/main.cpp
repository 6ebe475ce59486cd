#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "biharm/study.hpp"

namespace {

void print_study(const biharm::StudyResult& result) {
  for (const auto& lr : result.levels) {
    std::printf("level %d  dofs %6d  h_max %.4e  newton %2d", lr.level, lr.dofs,
                lr.h_max, lr.newton.iterations());
    for (const auto& [tag, err] : lr.errors) std::printf("  %s %.4e", tag.c_str(), err);
    std::printf("\n");
  }
  for (const auto& [tag, rate] : result.rates)
    std::printf("rate %-10s %6.3f  (fit residual %.2e)\n", tag.c_str(), rate,
                result.rate_residuals.at(tag));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lowest-order nonconforming FEM studies for fourth-order problems"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run a convergence study from a config file");
  run->add_option("--config", config_path, "Study configuration file")->required();

  std::string compare_config;
  auto* compare =
      app.add_subcommand("compare", "Compare Morley/dG/C0IP against ||(1-Pi0)D^2u||");
  compare->add_option("--config", compare_config, "Study configuration file")
      ->required();

  std::string mesh_path;
  auto* mesh_info = app.add_subcommand("mesh-info", "Validate and describe a mesh file");
  mesh_info->add_option("file", mesh_path, "Mesh file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const biharm::StudyConfig config = biharm::parse_config(config_path);
      const biharm::StudyResult result = biharm::run_study(config);
      print_study(result);
      std::printf("wrote %s.csv and %s.json\n", config.output.c_str(),
                  config.output.c_str());
    } else if (compare->parsed()) {
      const biharm::StudyConfig config = biharm::parse_config(compare_config);
      const auto rows = biharm::compare_schemes(config);
      biharm::write_comparison_csv(rows, config.output + "_compare.csv");
      for (const auto& r : rows) {
        if (r.degenerate)
          std::printf("level %d  all errors below 1e-10, ratios skipped\n", r.level);
        else
          std::printf(
              "level %d  morley %.4e  dg %.4e  c0ip %.4e  osc %.4e  ratio range "
              "[%.3f, %.3f]\n",
              r.level, r.err_morley, r.err_dg, r.err_c0ip, r.oscillation,
              r.min_ratio, r.max_ratio);
      }
      std::printf("wrote %s_compare.csv\n", config.output.c_str());
    } else if (mesh_info->parsed()) {
      const biharm::Triangulation mesh = biharm::Triangulation::load(mesh_path);
      std::printf("vertices        %d\n", mesh.vertex_count());
      std::printf("triangles       %d\n", mesh.triangle_count());
      std::printf("edges           %d (%d interior)\n", mesh.edge_count(),
                  mesh.interior_edge_count());
      std::printf("area            %.17g\n", mesh.domain_area());
      std::printf("h_max           %.17g\n", mesh.h_max());
      std::printf("shape-regularity %.17g\n", mesh.shape_regularity());
      std::printf("euler (V-E+T)   %d\n",
                  mesh.vertex_count() - mesh.edge_count() + mesh.triangle_count());
      std::printf("mesh-hash       %016llx\n",
                  static_cast<unsigned long long>(mesh.content_hash()));
    }
  } catch (const biharm::Error& err) {
    std::cerr << "error: " << err.error_class() << ": " << err.what() << '\n';
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: internal: " << err.what() << '\n';
    return 3;
  }
  return 0;
}
