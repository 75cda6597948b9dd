#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ltor/indirect.hpp"
#include "ltor/rng.hpp"
#include "ltor/scenario.hpp"

namespace ltor {

enum class PathMode { zero, linear, auto_select };

// Thrust-continuation plan: march from an easy high-thrust solution down to
// the nominal thrust, geometric steps with bisection on failure.
struct HomotopySchedule {
  double t_start_n = 50.0;
  double t_target_n = 1.0;
  double reduction_ratio = 0.8;
  double min_step_ratio = 0.99;  // stall when forced above this thrust ratio
  PathMode path_mode = PathMode::auto_select;
};

struct ContinuationRecord {
  double thrust_n = 0.0;
  double tf = 0.0;  // canonical
  Costate lam0;
  bool converged = false;
  std::string path_used = "restart";  // restart | zero | linear
  int iterations = 0;
  int revolutions = 0;
  double residual = 0.0;
  double wall_s = 0.0;
};

struct HomotopyOptions {
  std::uint64_t seed = 0;
  int max_restarts = 200;
  // After this many scaled random guesses the start finder solves at
  // bootstrap_factor times the thrust (larger basins) and continues back
  // down; set the factor to 1 to disable.
  int bootstrap_after = 24;
  double bootstrap_factor = 6.0;
  ShootingOptions shooting;
  std::filesystem::path checkpoint;  // continuation log, resumable; empty = off
  bool resume = false;
  bool verbose = false;
};

enum class HomotopyStatus { converged, start_not_found, continuation_stalled };

struct HomotopyResult {
  HomotopyStatus status = HomotopyStatus::continuation_stalled;
  std::vector<ContinuationRecord> records;
  TransferSolution solution;  // at t_target when status == converged
  bool ok() const { return status == HomotopyStatus::converged; }
};

// t_f * T ~ const extrapolation between continuation steps.
inline double guess_tf(double thrust_prev, double tf_prev, double thrust_next) {
  return thrust_prev * tf_prev / thrust_next;
}

inline Costate guess_lam0_zero(const ContinuationRecord& prev) { return prev.lam0; }

// Linear extrapolation over the last two converged thrust levels. Falls back
// to the zero path when the thrust gap vanishes.
std::optional<Costate> guess_lam0_linear(const ContinuationRecord& prev2, const ContinuationRecord& prev,
                                         double thrust_next);

// Random-restart shooting at the (high) starting thrust.
TransferSolution find_start_solution(const SpacecraftScenario& scenario, double thrust_n, Rng& rng,
                                     const HomotopyOptions& opts);

HomotopyResult run_homotopy(const SpacecraftScenario& scenario, const HomotopySchedule& schedule,
                            const HomotopyOptions& opts);

// Continuation log (one row per record) persistence.
void save_continuation_log(const std::filesystem::path& path, const SpacecraftScenario& scenario,
                           const HomotopySchedule& schedule, std::uint64_t seed,
                           const std::vector<ContinuationRecord>& records);
std::vector<ContinuationRecord> load_continuation_log(const std::filesystem::path& path,
                                                      const SpacecraftScenario& scenario);

}  // namespace ltor
