#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "ltor/features.hpp"
#include "ltor/indirect.hpp"
#include "ltor/rng.hpp"
#include "ltor/scenario.hpp"

namespace ltor {

// Departure-orbit randomization ball: position within dr_max * c, velocity
// within dv_max * c, c uniform in [c_lo, c_hi], directions uniform on the
// sphere.
struct PerturbationSpec {
  double dr_max_m = 100.0;
  double dv_max_ms = 0.1;
  double c_lo = 0.0;
  double c_hi = 1.0;
};

CartesianState sample_departure(const CartesianState& nominal, const PerturbationSpec& spec, Rng& rng);

struct FamilyMember {
  int id = 0;
  Vec7 y0;  // canonical departure state
  TransferSolution solution;
};

struct FamilySolveReport {
  int id = 0;
  SolveStatus status = SolveStatus::max_iterations;
  double tf_days = 0.0;
  int iterations = 0;
};

struct FamilyResult {
  std::vector<FamilyMember> members;          // converged, in id order
  std::vector<FamilySolveReport> reports;     // every attempt, in id order
  int n_failed = 0;
};

// Solves the TPBVP for randomly perturbed departures, each seeded with the
// nominal solution. Draws replacements for failed members (reported, never
// silently dropped) until `count` converged members exist or the attempt
// budget runs out.
FamilyResult optimize_family(const TransferSolution& nominal, const SpacecraftScenario& scenario,
                             const PerturbationSpec& spec, int count, std::uint64_t seed, int threads = 2);

struct DatasetConfig {
  int n_train = 50;
  int n_val = 10;
  int n_test = 10;
  int points_per_traj = 1000;
  std::uint64_t seed = 0;
  PerturbationSpec perturbation;
};

// Writes train/val/test column files, failures report and manifest.json into
// out_dir. Normalization statistics are computed on the training split only.
void assemble_dataset(const FamilyResult& family, const SpacecraftScenario& scenario,
                      const DatasetConfig& config, const std::filesystem::path& out_dir);

// Convenience: family optimization + assembly in one call.
FamilyResult generate_dataset(const TransferSolution& nominal, const SpacecraftScenario& scenario,
                              const DatasetConfig& config, const std::filesystem::path& out_dir,
                              int threads = 2);

// In-memory view used for training: raw feature matrices per form plus
// angle targets, and the train-split normalization statistics.
struct DatasetSplit {
  Eigen::MatrixXd features[3];  // indexed by FeatureForm, rows x 7
  Eigen::MatrixXd targets;      // rows x 2: alpha_deg, beta_deg
  std::int64_t rows() const { return targets.rows(); }
};

struct NormalizationStats {
  FeatureVec mean = FeatureVec::Zero();
  FeatureVec stddev = FeatureVec::Ones();
};

struct DatasetBundle {
  DatasetSplit train, val, test;
  NormalizationStats norm[3];  // per feature form, from the training split
  std::string scenario_hash;
  std::uint64_t seed = 0;
  DatasetConfig config;
};

DatasetBundle load_dataset(const std::filesystem::path& dir, bool include_test = true);

}  // namespace ltor
