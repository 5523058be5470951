#include <benchmark/benchmark.h>

#include "rgamlss/correction.hpp"
#include "rgamlss/smoothing_selection.hpp"
#include "toys.hpp"

using namespace rgamlss;

namespace {

void BM_CorrectionTerm(benchmark::State& state, const char* code) {
    const auto f = make_family(code);
    const CorrectionIntegrator integ;
    const LogLogisticRho rho(3.0);
    const Eigen::Vector3d eta(0.8, -0.5, 0.0);
    for (auto _ : state) benchmark::DoNotOptimize(integ.in_predictors(*f, eta, rho, 2));
}
BENCHMARK_CAPTURE(BM_CorrectionTerm, gamma, "GA");
BENCHMARK_CAPTURE(BM_CorrectionTerm, normal, "N");
BENCHMARK_CAPTURE(BM_CorrectionTerm, poisson, "PO");
BENCHMARK_CAPTURE(BM_CorrectionTerm, negbin, "NBI");

void BM_ObjectiveEvaluate(benchmark::State& state) {
    const auto t = test::gamma_toy(static_cast<int>(state.range(0)), 8, 1);
    const Objective obj = t.objective(make_log_logistic_rho(3.0));
    const Eigen::VectorXd delta = initial_coefficients(*t.design, *t.family, t.y);
    const Eigen::VectorXd lambda = Eigen::VectorXd::Ones(2);
    for (auto _ : state) benchmark::DoNotOptimize(obj.evaluate(delta, lambda, 2));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ObjectiveEvaluate)->Arg(100)->Arg(400)->Arg(1600)->Unit(benchmark::kMillisecond);

void BM_FitFixedLambda(benchmark::State& state) {
    const auto t = test::poisson_toy(200, 12, 2);
    const Objective obj = t.objective(make_log_logistic_rho(4.0));
    for (auto _ : state) benchmark::DoNotOptimize(fit_fixed_lambda(obj, Eigen::VectorXd::Ones(1)));
}
BENCHMARK(BM_FitFixedLambda)->Unit(benchmark::kMillisecond);

void BM_FitEfs(benchmark::State& state) {
    const auto t = test::gamma_toy(300, 8, 3);
    const Objective obj = t.objective(make_log_logistic_rho(3.0));
    for (auto _ : state) benchmark::DoNotOptimize(fit_efs(obj, Eigen::VectorXd::Ones(2)));
}
BENCHMARK(BM_FitEfs)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
