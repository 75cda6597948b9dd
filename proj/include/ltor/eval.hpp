#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "ltor/dataset.hpp"
#include "ltor/edelbaum.hpp"
#include "ltor/indirect.hpp"
#include "ltor/nn/network.hpp"
#include "ltor/scenario.hpp"

namespace ltor {

enum class CaseKind { inside_a, outside_a, uncertainty, perturbation };

inline const char* to_string(CaseKind k) {
  switch (k) {
    case CaseKind::inside_a: return "inside_a";
    case CaseKind::outside_a: return "outside_a";
    case CaseKind::uncertainty: return "uncertainty";
    case CaseKind::perturbation: return "perturbation";
  }
  return "?";
}
CaseKind case_from_string(const std::string& s);

// Stress-test definition. Departure randomization applies to the inside/
// outside cases; pointing noise and the random disturbing force apply to the
// uncertainty/perturbation cases and are resampled every hold_s seconds.
struct GeneralizationCase {
  CaseKind kind = CaseKind::inside_a;
  PerturbationSpec departure;
  double noise_sigma_deg = 0.5;
  double force_ratio = 0.01;
  double hold_s = 600.0;

  static GeneralizationCase make(CaseKind kind);
};

// NN controller: features assembled exactly as in the dataset, model's own
// normalization, full throttle, beta clamped to its physical range.
class NnPolicy {
 public:
  NnPolicy(const nn::Network<float>& model, const UnitSystem& units) : model_(&model), units_(units) {}
  ControlAngles operator()(double t, const Vec7& y) const;

 private:
  const nn::Network<float>* model_;
  UnitSystem units_;
};

struct DriveOptions {
  double stop_excess_ms = 0.05;  // hysteresis on the running minimum
  int stop_patience_nodes = 20;
  double horizon_factor = 1.5;   // times the nominal optimal t_f
  bool record_controls = false;
  double throttle_override = -1.0;  // >= 0 forces the commanded throttle (sanity checks)
};

struct DriveRecord {
  bool propagation_ok = false;
  bool controller_failure = false;
  Vec7 y0 = Vec7::Zero();          // canonical departure state
  double t_stop = 0.0;             // canonical time of the running dv minimum
  Vec7 y_stop = Vec7::Zero();      // state at that node
  double dv_ms = 0.0;              // Edelbaum distance at that node
  double a_f_km = 0.0, e_f = 0.0, i_f_deg = 0.0;
  double mass_f_kg = 0.0;
  std::vector<std::array<double, 2>> dv_trace;       // t (canonical), dv (m/s)
  std::vector<std::array<double, 3>> control_trace;  // t, alpha_deg, beta_deg
  bool ok() const { return propagation_ok && !controller_failure; }
};

// Closed-loop propagation under the NN controller with case-specific noise,
// stopping at the Edelbaum-distance minimum.
DriveRecord drive(const nn::Network<float>& model, const Vec7& y0, const SpacecraftScenario& scenario,
                  const GeneralizationCase& stress, std::uint64_t noise_seed, double tf_nominal,
                  const DriveOptions& opts = {});

struct OptimalityResult {
  bool evaluable = false;
  double mape_percent = 0.0;
  double j_nn_days = 0.0;
  double j_opt_days = 0.0;
};

// Minimum-time re-solve between the drive's exact endpoints (final true
// longitude fixed, final mass free), seeded from the nominal solution.
OptimalityResult optimality_mape(const DriveRecord& record, const SpacecraftScenario& scenario,
                                 const TransferSolution& nominal);

struct CampaignOptions {
  int n_runs = 20;
  std::uint64_t seed = 0;
  int threads = 2;
  int optimality_runs = 0;  // evaluated for the first runs of inside/outside cases
  DriveOptions drive;
};

struct CampaignRun {
  int run = 0;
  DriveRecord record;
  OptimalityResult optimality;
};

struct CampaignReport {
  CaseKind kind = CaseKind::inside_a;
  int n_runs = 0;
  int n_failed = 0;
  double mean_dv_ms = 0.0;
  double mean_a_f_km = 0.0;
  double mean_e_f = 0.0;
  double mean_i_f_deg = 0.0;
  double mean_stop_days = 0.0;
  double mean_opt_mape = 0.0;
  int n_evaluable = 0;
  double noise_sigma_emp_deg = 0.0;  // empirical std of injected pointing noise
  std::vector<CampaignRun> runs;
};

CampaignReport run_campaign(const nn::Network<float>& model, const SpacecraftScenario& scenario,
                            const TransferSolution& nominal, const GeneralizationCase& stress,
                            const CampaignOptions& opts);

// Table-3-shaped aggregate plus one row per run.
void save_reports(const std::filesystem::path& dir, const std::vector<CampaignReport>& reports,
                  const SpacecraftScenario& scenario, std::uint64_t seed);

// Deterministic per-block pointing noise (degrees) and disturbance direction
// used by the uncertainty/perturbation cases; exposed for the stress-test
// statistics checks.
double pointing_noise_deg(std::uint64_t seed, std::int64_t block, int component, double sigma_deg);
Vec3 disturbance_direction(std::uint64_t seed, std::int64_t block);

}  // namespace ltor
