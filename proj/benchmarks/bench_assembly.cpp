#include <benchmark/benchmark.h>

#include "biharm/solver.hpp"
#include "biharm/study.hpp"

using namespace biharm;

namespace {

std::shared_ptr<const FeSpace> make_space(int level, Scheme scheme) {
  static std::map<int, std::shared_ptr<const Triangulation>> meshes;
  auto it = meshes.find(level);
  if (it == meshes.end())
    it = meshes.emplace(level, std::make_shared<Triangulation>(
                                   study_mesh("square", level))).first;
  return std::make_shared<FeSpace>(*it->second, scheme);
}

ProblemSpec ns_spec(Scheme scheme, Smoother R, Smoother S) {
  ProblemSpec spec;
  spec.kind = ProblemKind::NavierStokes;
  spec.scheme = scheme;
  spec.R = R;
  spec.S = S;
  const auto u = manufactured_solution("sin2");
  spec.source = SourceFunctional::density(
      [u](const Eigen::Vector2d& p) { return navier_stokes_source(*u, p); });
  return spec;
}

void BM_SchemeForm(benchmark::State& state) {
  const auto space = make_space(static_cast<int>(state.range(0)), Scheme::DG);
  const SchemeParams params;
  for (auto _ : state) benchmark::DoNotOptimize(scheme_form(*space, params));
  state.SetLabel(std::to_string(space->dim()) + " dofs");
}
BENCHMARK(BM_SchemeForm)->Arg(3)->Arg(4)->Arg(5);

void BM_CompanionBuild(benchmark::State& state) {
  const auto space = make_space(static_cast<int>(state.range(0)), Scheme::Morley);
  for (auto _ : state) benchmark::DoNotOptimize(CompanionOperator::make(space));
}
BENCHMARK(BM_CompanionBuild)->Arg(3)->Arg(4);

void BM_NsJacobian(benchmark::State& state) {
  const auto space = make_space(static_cast<int>(state.range(0)), Scheme::Morley);
  const Smoother smoothers[] = {Smoother::Id, Smoother::IM, Smoother::JIM};
  const Smoother R = smoothers[state.range(1)];
  const DiscreteProblem problem(ns_spec(Scheme::Morley, R, Smoother::JIM), space);
  const Eigen::VectorXd x = initial_guess(problem);
  for (auto _ : state) benchmark::DoNotOptimize(problem.jacobian(x));
  state.SetLabel("R=" + to_string(R));
}
BENCHMARK(BM_NsJacobian)->Args({3, 0})->Args({3, 1})->Args({3, 2})->Args({4, 2});

void BM_NewtonSolve(benchmark::State& state) {
  const auto space = make_space(static_cast<int>(state.range(0)), Scheme::Morley);
  const DiscreteProblem problem(ns_spec(Scheme::Morley, Smoother::IM, Smoother::JIM),
                                space);
  for (auto _ : state) {
    const NewtonReport report = newton_solve(problem, initial_guess(problem));
    benchmark::DoNotOptimize(report.solution);
  }
}
BENCHMARK(BM_NewtonSolve)->Arg(3)->Arg(4);

}  // namespace

BENCHMARK_MAIN();
