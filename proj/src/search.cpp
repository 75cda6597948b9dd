#include "ltor/search.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <future>

#include "ltor/io.hpp"

namespace ltor {

namespace {

using MatF = nn::Network<float>::Mat;

MatF to_float(const Eigen::MatrixXd& m) { return m.cast<float>(); }

double now_s() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

}  // namespace

CandidateConfig sample_config(const SearchSpace& space, Rng& rng) {
  CandidateConfig cfg;
  cfg.n_layer = static_cast<int>(rng.uniform_int(space.n_layer_lo, space.n_layer_hi));
  cfg.n_neuron_drawn = static_cast<int>(rng.uniform_int(space.n_neuron_lo, space.n_neuron_hi));
  // A single hidden layer gets twice the drawn width (shallow-network probe).
  cfg.n_neuron = cfg.n_layer == 1 ? 2 * cfg.n_neuron_drawn : cfg.n_neuron_drawn;
  cfg.activation = static_cast<nn::Activation>(rng.uniform_int(0, 2));
  cfg.initializer = static_cast<nn::Initializer>(rng.uniform_int(0, 1));
  cfg.batch_size = static_cast<int>(rng.uniform_int(space.batch_lo, space.batch_hi));
  cfg.optimizer = static_cast<nn::Optimizer>(rng.uniform_int(0, 2));
  cfg.eta = std::pow(10.0, rng.uniform(std::log10(space.eta_lo), std::log10(space.eta_hi)));
  cfg.decay_model = static_cast<nn::DecayModel>(rng.uniform_int(0, 1));
  cfg.decay_step = static_cast<int>(rng.uniform_int(space.decay_step_lo, space.decay_step_hi));
  cfg.decay_rate = rng.uniform(space.decay_rate_lo, space.decay_rate_hi);
  cfg.form = static_cast<FeatureForm>(rng.uniform_int(0, 2));
  return cfg;
}

SearchOutcome run_search(const DatasetSplit& train, const DatasetSplit& val,
                         const NormalizationStats norm[3], const SearchOptions& opts) {
  SearchOutcome outcome;

  // Shared float views of the data, one per feature form.
  MatF x_train[3], x_val[3];
  for (int f = 0; f < 3; ++f) {
    x_train[f] = to_float(train.features[f]);
    x_val[f] = to_float(val.features[f]);
  }
  const MatF y_train = to_float(train.targets);
  const MatF y_val = to_float(val.targets);

  // Configurations are pre-sampled from per-iteration streams so results do
  // not depend on worker scheduling.
  const SearchSpace space;
  const Rng base(opts.seed);
  std::vector<CandidateConfig> configs(opts.n_iter);
  for (int i = 0; i < opts.n_iter; ++i) {
    Rng rng = base.fork(0xcf90 + static_cast<std::uint64_t>(i));
    configs[i] = sample_config(space, rng);
  }

  std::vector<SearchResult> results(opts.n_iter);
  std::vector<nn::Network<float>> models(opts.n_iter);
  std::atomic<int> cursor{0};
  auto worker = [&]() {
    int i;
    while ((i = cursor.fetch_add(1)) < opts.n_iter) {
      const CandidateConfig& cfg = configs[i];
      SearchResult& res = results[i];
      res.iteration = i;
      res.config = cfg;
      const double t0 = now_s();

      Rng init_rng = base.fork(0x11d0 + static_cast<std::uint64_t>(i));
      nn::Network<float> net = nn::make_network<float>(cfg.n_layer, cfg.n_neuron, cfg.activation,
                                                       cfg.initializer, opts.output, cfg.form, init_rng);
      const int fi = static_cast<int>(cfg.form);
      net.norm_mean = norm[fi].mean.transpose().cast<float>();
      net.norm_std = norm[fi].stddev.transpose().cast<float>();

      nn::TrainingConfig tc;
      tc.optimizer = cfg.optimizer;
      tc.eta = cfg.eta;
      tc.decay_model = cfg.decay_model;
      tc.decay_step = cfg.decay_step;
      tc.decay_rate = cfg.decay_rate;
      tc.batch_size = cfg.batch_size;
      tc.patience = opts.patience;
      tc.max_epochs = opts.max_epochs;
      tc.seed = splitmix64(opts.seed ^ (0x7a21 + static_cast<std::uint64_t>(i)));

      auto trained = nn::train(std::move(net), x_train[fi], y_train, x_val[fi], y_val, tc);
      res.epochs_run = static_cast<int>(trained.trace.val_loss.size());
      res.best_val_loss = trained.trace.best_val_loss;
      if (trained.trace.status == nn::TrainStatus::diverged || trained.trace.best_epoch < 0) {
        res.failed = true;
        res.score = std::numeric_limits<double>::infinity();
      } else {
        const MatF pred = trained.model.predict_angles(x_val[fi]);
        res.val_mape_alpha = nn::mape(pred.col(0).cast<double>(), y_val.col(0).cast<double>());
        res.val_mape_beta = nn::mape(pred.col(1).cast<double>(), y_val.col(1).cast<double>());
        res.score = 0.5 * (res.val_mape_alpha + res.val_mape_beta);
        models[i] = std::move(trained.model);
      }
      res.wall_s = now_s() - t0;
    }
  };
  std::vector<std::future<void>> futures;
  for (int w = 0; w < std::max(1, opts.workers); ++w)
    futures.push_back(std::async(std::launch::async, worker));
  for (auto& f : futures) f.get();

  outcome.ranked = results;
  std::stable_sort(outcome.ranked.begin(), outcome.ranked.end(),
                   [](const SearchResult& a, const SearchResult& b) {
                     if (a.score != b.score) return a.score < b.score;
                     return a.iteration < b.iteration;
                   });
  if (!outcome.ranked.empty() && !outcome.ranked.front().failed) {
    outcome.winner_iteration = outcome.ranked.front().iteration;
    outcome.winner_config = outcome.ranked.front().config;
    outcome.winner_model = models[outcome.winner_iteration];
  }
  return outcome;
}

TestMetrics evaluate_model(const nn::Network<float>& model, const DatasetSplit& split) {
  const MatF pred = model.predict_angles(to_float(split.features[static_cast<int>(model.form)]));
  TestMetrics m;
  m.mape_alpha = nn::mape(pred.col(0).cast<double>(), split.targets.col(0));
  m.mape_beta = nn::mape(pred.col(1).cast<double>(), split.targets.col(1));
  m.mae_alpha_deg = nn::mean_abs_error(pred.col(0).cast<double>(), split.targets.col(0));
  m.mae_beta_deg = nn::mean_abs_error(pred.col(1).cast<double>(), split.targets.col(1));
  return m;
}

void save_search_results(const std::filesystem::path& dir, const SearchOutcome& outcome,
                         const TestMetrics& test, const std::string& scenario_hash, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  Table t;
  t.meta.set("artifact", "search_results");
  t.meta.set("scenario_hash", scenario_hash);
  t.meta.set_int("seed", static_cast<long long>(seed));
  t.meta.set_int("winner_iteration", outcome.winner_iteration);
  t.meta.set_double("winner_test_mape_alpha", test.mape_alpha);
  t.meta.set_double("winner_test_mape_beta", test.mape_beta);
  t.meta.set_double("winner_test_mae_alpha_deg", test.mae_alpha_deg);
  t.meta.set_double("winner_test_mae_beta_deg", test.mae_beta_deg);
  t.columns = {"rank",       "iteration", "score",     "val_mape_alpha", "val_mape_beta",
               "n_layer",    "n_neuron",  "activation", "initializer",   "batch",
               "optimizer",  "eta",       "decay_model", "decay_step",   "decay_rate",
               "form",       "epochs",    "failed",    "wall_s"};
  int rank = 0;
  for (const auto& r : outcome.ranked) {
    t.rows.push_back({static_cast<double>(rank++), static_cast<double>(r.iteration), r.score,
                      r.val_mape_alpha, r.val_mape_beta, static_cast<double>(r.config.n_layer),
                      static_cast<double>(r.config.n_neuron), static_cast<double>(r.config.activation),
                      static_cast<double>(r.config.initializer), static_cast<double>(r.config.batch_size),
                      static_cast<double>(r.config.optimizer), r.config.eta,
                      static_cast<double>(r.config.decay_model), static_cast<double>(r.config.decay_step),
                      r.config.decay_rate, static_cast<double>(r.config.form),
                      static_cast<double>(r.epochs_run), r.failed ? 1.0 : 0.0, r.wall_s});
  }
  t.save(dir / "results.tsv");

  if (outcome.ok()) {
    nlohmann::json meta;
    meta["scenario_hash"] = scenario_hash;
    meta["seed"] = seed;
    meta["winner_iteration"] = outcome.winner_iteration;
    meta["config"] = {{"n_layer", outcome.winner_config.n_layer},
                      {"n_neuron", outcome.winner_config.n_neuron},
                      {"activation", nn::to_string(outcome.winner_config.activation)},
                      {"initializer", nn::to_string(outcome.winner_config.initializer)},
                      {"batch", outcome.winner_config.batch_size},
                      {"optimizer", nn::to_string(outcome.winner_config.optimizer)},
                      {"eta", outcome.winner_config.eta},
                      {"decay_model", nn::to_string(outcome.winner_config.decay_model)},
                      {"decay_step", outcome.winner_config.decay_step},
                      {"decay_rate", outcome.winner_config.decay_rate},
                      {"form", to_string(outcome.winner_config.form)}};
    meta["test_mape_alpha"] = test.mape_alpha;
    meta["test_mape_beta"] = test.mape_beta;
    nn::save_model(dir / "winner.json", outcome.winner_model, meta);
  }
}

}  // namespace ltor
