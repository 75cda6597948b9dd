#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ltor/search.hpp"

using namespace ltor;

namespace {

// Tiny synthetic regression dataset: smooth angle targets from the feature
// values, identical layout to the real bundles.
DatasetSplit synthetic_split(int rows, std::uint64_t seed) {
  DatasetSplit split;
  Rng rng(seed);
  for (int f = 0; f < 3; ++f) {
    split.features[f].resize(rows, kFeatureDim);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < kFeatureDim; ++j) split.features[f](i, j) = rng.uniform(-1.0, 1.0);
  }
  split.targets.resize(rows, 2);
  for (int i = 0; i < rows; ++i) {
    const auto& x = split.features[2];
    split.targets(i, 0) = 90.0 + 10.0 * std::sin(x(i, 1)) + 5.0 * x(i, 2);
    split.targets(i, 1) = 8.0 * std::tanh(x(i, 3)) + 3.0 * x(i, 4);
  }
  return split;
}

void fill_norm(NormalizationStats norm[3], const DatasetSplit& train) {
  for (int f = 0; f < 3; ++f) {
    for (int j = 0; j < kFeatureDim; ++j) {
      norm[f].mean[j] = train.features[f].col(j).mean();
      const double var = (train.features[f].col(j).array() - norm[f].mean[j]).square().mean();
      norm[f].stddev[j] = var > 0 ? std::sqrt(var) : 1.0;
    }
  }
}

}  // namespace

TEST_CASE("sampled configurations stay inside the search space") {
  const SearchSpace space;
  Rng rng(17);
  int doubled_seen = 0;
  for (int i = 0; i < 3000; ++i) {
    const CandidateConfig cfg = sample_config(space, rng);
    CHECK(cfg.n_layer >= 1);
    CHECK(cfg.n_layer <= 7);
    CHECK(cfg.n_neuron_drawn >= 32);
    CHECK(cfg.n_neuron_drawn <= 512);
    CHECK(cfg.batch_size >= 100);
    CHECK(cfg.batch_size <= 1000);
    CHECK(cfg.eta >= 1e-4);
    CHECK(cfg.eta <= 1e-1);
    CHECK(cfg.decay_step >= 100);
    CHECK(cfg.decay_step <= 500);
    CHECK(cfg.decay_rate >= 0.8);
    CHECK(cfg.decay_rate <= 1.0);
    if (cfg.n_layer == 1) {
      CHECK(cfg.n_neuron == 2 * cfg.n_neuron_drawn);
      ++doubled_seen;
    } else {
      CHECK(cfg.n_neuron == cfg.n_neuron_drawn);
    }
  }
  CHECK(doubled_seen > 200);  // n_layer = 1 occurs at the expected rate
}

TEST_CASE("shallow draw with 300 neurons builds a 600-unit single layer") {
  const SearchSpace space;
  // Find a draw with n_layer == 1 and check the doubling on its real value.
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const CandidateConfig cfg = sample_config(space, rng);
    if (cfg.n_layer == 1) {
      CHECK(cfg.n_neuron == 2 * cfg.n_neuron_drawn);
      return;
    }
  }
  FAIL("no single-layer draw in 200 samples");
}

TEST_CASE("learning rate is log-uniform (Kolmogorov-Smirnov)") {
  const SearchSpace space;
  Rng rng(23);
  const int n = 10000;
  std::vector<double> u(n);
  for (int i = 0; i < n; ++i) {
    const CandidateConfig cfg = sample_config(space, rng);
    // Map to [0, 1] in the log domain; uniformity there is the claim.
    u[i] = (std::log10(cfg.eta) - std::log10(space.eta_lo)) /
           (std::log10(space.eta_hi) - std::log10(space.eta_lo));
  }
  std::sort(u.begin(), u.end());
  double d = 0.0;
  for (int i = 0; i < n; ++i) {
    d = std::max(d, std::abs(u[i] - (i + 1.0) / n));
    d = std::max(d, std::abs(u[i] - static_cast<double>(i) / n));
  }
  CHECK(d < 1.63 / std::sqrt(static_cast<double>(n)));  // alpha = 0.01 critical value
}

TEST_CASE("run_search: selection, determinism, ranking") {
  const DatasetSplit train = synthetic_split(600, 41);
  const DatasetSplit val = synthetic_split(150, 42);
  const DatasetSplit test = synthetic_split(150, 43);
  NormalizationStats norm[3];
  fill_norm(norm, train);

  SearchOptions opts;
  opts.n_iter = 3;
  opts.seed = 9;
  opts.workers = 2;
  opts.max_epochs = 40;
  opts.patience = 10;

  const SearchOutcome outcome = run_search(train, val, norm, opts);
  REQUIRE(outcome.ok());
  REQUIRE(outcome.ranked.size() == 3);
  for (std::size_t i = 1; i < outcome.ranked.size(); ++i)
    CHECK(outcome.ranked[i - 1].score <= outcome.ranked[i].score);
  CHECK(outcome.winner_iteration == outcome.ranked.front().iteration);
  CHECK(outcome.ranked.front().score ==
        doctest::Approx(0.5 * (outcome.ranked.front().val_mape_alpha +
                               outcome.ranked.front().val_mape_beta)));

  SUBCASE("single-iteration search selects its only candidate") {
    SearchOptions one = opts;
    one.n_iter = 1;
    const SearchOutcome sole = run_search(train, val, norm, one);
    REQUIRE(sole.ok());
    CHECK(sole.winner_iteration == 0);
  }

  SUBCASE("re-running with the same seed reproduces everything") {
    const SearchOutcome again = run_search(train, val, norm, opts);
    REQUIRE(again.ok());
    CHECK(again.winner_iteration == outcome.winner_iteration);
    for (std::size_t i = 0; i < outcome.ranked.size(); ++i) {
      CHECK(again.ranked[i].iteration == outcome.ranked[i].iteration);
      CHECK(again.ranked[i].score == outcome.ranked[i].score);  // bitwise
    }
    for (std::size_t l = 0; l < outcome.winner_model.layers.size(); ++l)
      CHECK(again.winner_model.layers[l].w == outcome.winner_model.layers[l].w);
  }

  SUBCASE("test metrics come from a separate evaluation call") {
    const TestMetrics metrics = evaluate_model(outcome.winner_model, test);
    CHECK(std::isfinite(metrics.mape_alpha));
    CHECK(std::isfinite(metrics.mape_beta));
    CHECK(metrics.mape_alpha >= 0.0);
  }
}
