#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ltor/dataset.hpp"
#include "ltor/nn/model_io.hpp"
#include "ltor/nn/train.hpp"

namespace ltor {

// Random-search space. Defaults are the full search ranges; all draws are
// uniform except the learning rate, which is uniform in log10.
struct SearchSpace {
  int n_layer_lo = 1, n_layer_hi = 7;
  int n_neuron_lo = 32, n_neuron_hi = 512;
  int batch_lo = 100, batch_hi = 1000;
  double eta_lo = 1e-4, eta_hi = 1e-1;
  int decay_step_lo = 100, decay_step_hi = 500;
  double decay_rate_lo = 0.8, decay_rate_hi = 1.0;
};

struct CandidateConfig {
  int n_layer = 1;
  int n_neuron_drawn = 32;
  int n_neuron = 64;  // doubled when n_layer == 1
  nn::Activation activation = nn::Activation::tanh_fn;
  nn::Initializer initializer = nn::Initializer::fan_in;
  int batch_size = 100;
  nn::Optimizer optimizer = nn::Optimizer::gd;
  double eta = 1e-3;
  nn::DecayModel decay_model = nn::DecayModel::ed;
  int decay_step = 100;
  double decay_rate = 0.9;
  FeatureForm form = FeatureForm::mee;
};

CandidateConfig sample_config(const SearchSpace& space, Rng& rng);

struct SearchOptions {
  int n_iter = 20;
  std::uint64_t seed = 0;
  int workers = 2;
  int max_epochs = 2000;
  int patience = 50;
  nn::OutputConvention output = nn::OutputConvention::direct_angles;
};

struct SearchResult {
  int iteration = 0;
  CandidateConfig config;
  bool failed = false;
  double val_mape_alpha = 0.0;
  double val_mape_beta = 0.0;
  double score = 0.0;  // mean of the two validation MAPEs
  double best_val_loss = 0.0;
  int epochs_run = 0;
  double wall_s = 0.0;
};

struct TestMetrics {
  double mape_alpha = 0.0;
  double mape_beta = 0.0;
  double mae_alpha_deg = 0.0;
  double mae_beta_deg = 0.0;
};

struct SearchOutcome {
  std::vector<SearchResult> ranked;  // ascending score, ties to the earlier iteration
  int winner_iteration = -1;
  CandidateConfig winner_config;
  nn::Network<float> winner_model;
  bool ok() const { return winner_iteration >= 0; }
};

// Random search with validation-based selection. Touches only the train and
// validation splits; test evaluation is a separate call so the test set
// cannot leak into selection.
SearchOutcome run_search(const DatasetSplit& train, const DatasetSplit& val,
                         const NormalizationStats norm[3], const SearchOptions& opts);

TestMetrics evaluate_model(const nn::Network<float>& model, const DatasetSplit& split);

// Ranked-results table + winner model file.
void save_search_results(const std::filesystem::path& dir, const SearchOutcome& outcome,
                         const TestMetrics& test, const std::string& scenario_hash, std::uint64_t seed);

}  // namespace ltor
