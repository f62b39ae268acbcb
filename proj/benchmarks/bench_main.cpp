#include <benchmark/benchmark.h>

#include <cmath>

#include "gmekit/ensemble.hpp"
#include "gmekit/fit.hpp"
#include "gmekit/measure.hpp"
#include "gmekit/quantity.hpp"
#include "gmekit/synthetic.hpp"
#include "gmekit/uncertainty.hpp"

namespace {

using namespace gmekit;

struct RedcardFixture {
  RegressorSchema schema;
  EncodedData data;
  ParametricModel model;
  Theta theta;
  std::vector<std::vector<double>> cov;

  static RedcardFixture make(std::size_t n) {
    SchemaSpec spec;
    spec.columns = {{"skin_tone", ColumnKind::Metric, {}, {}}};
    spec.interest.column = "skin_tone";
    RegressorSchema schema = RegressorSchema::compile(spec);
    const Dataset raw = make_redcard_synthetic(n, 11);
    EncodedData data = encode_dataset(raw, schema, "cards", {"games", true}, {});
    ParametricModel model = default_terms_model(schema, Family::PoissonLog);
    const FitResult fr = fit_model(model, data);
    return {std::move(schema), std::move(data), std::move(model), fr.theta, fr.cov};
  }
};

void bm_integrate_uniform(benchmark::State& state) {
  const Measure mu = Measure::uniform(0.0, 1.0);
  for (auto _ : state) {
    double v = mu.integrate1([](double x) { return std::exp(0.8 * x); });
    benchmark::DoNotOptimize(v);
  }
}
BENCHMARK(bm_integrate_uniform);

void bm_integrate_product(benchmark::State& state) {
  const Measure mu =
      Measure::product({Measure::uniform(0.0, 1.0), Measure::uniform(-1.0, 1.0)});
  for (auto _ : state) {
    double v = mu.integrate([](std::span<const double> x) { return std::exp(x[0] * x[1]); });
    benchmark::DoNotOptimize(v);
  }
}
BENCHMARK(bm_integrate_product);

void bm_gme_metric(benchmark::State& state) {
  static const RedcardFixture fx = RedcardFixture::make(static_cast<std::size_t>(2000));
  QuantityEngine engine(fx.model, fx.schema, fx.data);
  engine.set_cross_check(false);
  QuantitySpec spec;
  spec.interest_measure = Measure::uniform(0.0, 1.0);
  for (auto _ : state) {
    double v = engine.gme_metric(fx.theta, spec);
    benchmark::DoNotOptimize(v);
  }
}
BENCHMARK(bm_gme_metric);

void bm_gme_conditional(benchmark::State& state) {
  static const RedcardFixture fx = RedcardFixture::make(static_cast<std::size_t>(500));
  QuantityEngine engine(fx.model, fx.schema, fx.data);
  QuantitySpec spec;
  spec.assumption = Assumption::ConditionalJoint;
  for (auto _ : state) {
    double v = engine.gme_metric(fx.theta, spec);
    benchmark::DoNotOptimize(v);
  }
}
BENCHMARK(bm_gme_conditional);

void bm_ensemble_estimate(benchmark::State& state) {
  static const RedcardFixture fx = RedcardFixture::make(static_cast<std::size_t>(500));
  QuantityEngine engine(fx.model, fx.schema, fx.data);
  engine.set_cross_check(false);
  QuantitySpec spec;
  spec.interest_measure = Measure::uniform(0.0, 1.0);
  const ThetaEnsemble ens = make_ensemble_normal(fx.theta, fx.cov, 500, 13);
  for (auto _ : state) {
    QuantityResult r = estimate(
        [&](const Theta& t) { return std::vector<double>{engine.gme_metric(t, spec)}; }, ens);
    benchmark::DoNotOptimize(r.point[0]);
  }
}
BENCHMARK(bm_ensemble_estimate);

}  // namespace

BENCHMARK_MAIN();
