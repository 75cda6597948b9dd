#include "ltor/homotopy.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "ltor/edelbaum.hpp"
#include "ltor/io.hpp"

namespace ltor {

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

ContinuationRecord make_record(double thrust_n, const TransferSolution& sol, const std::string& path,
                               double wall_s) {
  ContinuationRecord rec;
  rec.thrust_n = thrust_n;
  rec.tf = sol.tf;
  rec.lam0 = sol.lam0;
  rec.converged = sol.converged();
  rec.path_used = path;
  rec.iterations = sol.iterations;
  rec.revolutions = sol.revolutions;
  rec.residual = sol.residual_norm;
  rec.wall_s = wall_s;
  return rec;
}

}  // namespace

std::optional<Costate> guess_lam0_linear(const ContinuationRecord& prev2, const ContinuationRecord& prev,
                                         double thrust_next) {
  const double gap = prev.thrust_n - prev2.thrust_n;
  if (gap == 0.0) return std::nullopt;  // degenerate history; caller falls back to zero path
  const double scale = (thrust_next - prev.thrust_n) / gap;
  Costate lam;
  lam.x = prev.lam0.x + scale * (prev.lam0.x - prev2.lam0.x);
  lam.m = prev.lam0.m + scale * (prev.lam0.m - prev2.lam0.m);
  return lam;
}

TransferSolution find_start_solution(const SpacecraftScenario& scenario, double thrust_n, Rng& rng,
                                     const HomotopyOptions& opts) {
  const UnitSystem units = scenario.units();
  const CanonicalParams params = scenario.canonical(thrust_n);
  const Vec7 y0 = scenario.initial_state();
  const BoundarySpec boundary = scenario.boundary();

  // Transfer-time seed: Edelbaum velocity increment over the initial
  // acceleration, doubled to land above the true minimum time, but capped
  // below the burn-time limit of the propellant budget.
  const double dv_kms = edelbaum_transfer_dv_kms(scenario.departure.a, scenario.target.a,
                                                 scenario.target.inc - scenario.departure.inc,
                                                 scenario.mu_km3s2);
  const double accel_ms2 = thrust_n / scenario.m0_kg;            // m/s^2
  const double tf_seed_s = 2.0 * dv_kms * 1000.0 / accel_ms2;    // s
  const double burn_limit = (1.0 - params.mass_floor) * params.ve / params.tmax;
  const double tf_seed = std::min(units.time_to_canonical(tf_seed_s), 0.8 * burn_limit);

  ShootingOptions sopts = opts.shooting;
  sopts.set_tolerances(scenario.rtol, scenario.atol);

  TransferSolution last;
  for (int attempt = 0; attempt < std::min(opts.max_restarts, opts.bootstrap_after); ++attempt) {
    Costate lam0;
    for (int i = 0; i < 6; ++i) lam0.x[i] = rng.uniform(-1.0, 1.0);
    lam0.m = rng.uniform(0.0, 1.0);

    TransferSolution sol = solve_tpbvp(lam0, tf_seed, y0, params, boundary, sopts);
    last = sol;
    if (!sol.converged()) continue;
    // Reject non-extremal roots: the mass costate must start positive and
    // the transfer must run forward.
    if (sol.lam0.m < 0.0 || sol.tf <= 0.0) continue;
    if (opts.verbose)
      std::fprintf(stderr, "[homotopy] start found at %.3g N after %d restarts (tf = %.4g days)\n",
                   thrust_n, attempt + 1, units.days_from_canonical(sol.tf));
    return sol;
  }

  // Random restarts struggle once the transfer exceeds a few revolutions.
  // Bootstrap: solve at a higher thrust (shorter transfer, large basins) and
  // continue back down to the requested level with the usual zero/linear
  // paths. The requested thrust level is unchanged for the caller.
  if (opts.bootstrap_factor > 1.0) {
    const double high = thrust_n * opts.bootstrap_factor;
    if (opts.verbose)
      std::fprintf(stderr, "[homotopy] bootstrapping %.3g N start from %.3g N\n", thrust_n, high);
    TransferSolution upper = find_start_solution(scenario, high, rng, opts);
    if (upper.converged()) {
      std::vector<ContinuationRecord> records{make_record(high, upper, "restart", 0.0)};
      double thrust = high;
      TransferSolution current = std::move(upper);
      while (thrust > thrust_n * (1.0 + 1e-12)) {
        double next = std::max(thrust_n, thrust * 0.7);
        bool advanced = false;
        while (!advanced) {
          const ContinuationRecord& prev = records.back();
          TransferSolution sol = solve_tpbvp(prev.lam0, guess_tf(prev.thrust_n, prev.tf, next), y0,
                                             scenario.canonical(next), boundary, sopts);
          if (sol.converged()) {
            records.push_back(make_record(next, sol, "zero", 0.0));
            current = std::move(sol);
            thrust = next;
            advanced = true;
          } else {
            next = 0.5 * (thrust + next);
            if (next / thrust > 0.995) {
              current.status = SolveStatus::max_iterations;
              return current;
            }
          }
        }
      }
      return current;
    }
  }

  last.status = SolveStatus::max_iterations;
  return last;
}

void save_continuation_log(const std::filesystem::path& path, const SpacecraftScenario& scenario,
                           const HomotopySchedule& schedule, std::uint64_t seed,
                           const std::vector<ContinuationRecord>& records) {
  const UnitSystem units = scenario.units();
  Table t;
  t.meta.set("artifact", "continuation_log");
  t.meta.set("scenario", scenario.name);
  t.meta.set("scenario_hash", scenario.config_hash_hex());
  t.meta.set_int("seed", static_cast<long long>(seed));
  t.meta.set_double("t_start_n", schedule.t_start_n);
  t.meta.set_double("t_target_n", schedule.t_target_n);
  t.meta.set_double("reduction_ratio", schedule.reduction_ratio);
  t.columns = {"thrust_n", "tf_days",  "lam_p",  "lam_ex", "lam_ey", "lam_hx",      "lam_hy",
               "lam_L",    "lam_m",    "iters",  "revs",   "residual", "path",      "converged",
               "wall_s"};
  for (const auto& r : records) {
    double path_code = r.path_used == "zero" ? 0.0 : (r.path_used == "linear" ? 1.0 : 2.0);
    t.rows.push_back({r.thrust_n, units.days_from_canonical(r.tf), r.lam0.x[0], r.lam0.x[1], r.lam0.x[2],
                      r.lam0.x[3], r.lam0.x[4], r.lam0.x[5], r.lam0.m, static_cast<double>(r.iterations),
                      static_cast<double>(r.revolutions), r.residual, path_code,
                      r.converged ? 1.0 : 0.0, r.wall_s});
  }
  t.save(path);
}

std::vector<ContinuationRecord> load_continuation_log(const std::filesystem::path& path,
                                                      const SpacecraftScenario& scenario) {
  const UnitSystem units = scenario.units();
  const Table t = Table::load(path);
  if (t.meta.get_or("scenario_hash", "") != scenario.config_hash_hex())
    throw std::runtime_error("continuation log does not match scenario (config hash mismatch)");
  std::vector<ContinuationRecord> records;
  for (const auto& row : t.rows) {
    ContinuationRecord r;
    r.thrust_n = row[0];
    r.tf = units.days_to_canonical(row[1]);
    for (int i = 0; i < 6; ++i) r.lam0.x[i] = row[2 + i];
    r.lam0.m = row[8];
    r.iterations = static_cast<int>(row[9]);
    r.revolutions = static_cast<int>(row[10]);
    r.residual = row[11];
    r.path_used = row[12] == 0.0 ? "zero" : (row[12] == 1.0 ? "linear" : "restart");
    r.converged = row[13] != 0.0;
    r.wall_s = row[14];
    records.push_back(r);
  }
  return records;
}

HomotopyResult run_homotopy(const SpacecraftScenario& scenario, const HomotopySchedule& schedule,
                            const HomotopyOptions& opts) {
  HomotopyResult result;
  const Vec7 y0 = scenario.initial_state();
  const BoundarySpec boundary = scenario.boundary();
  const UnitSystem units = scenario.units();
  Rng rng = Rng(opts.seed).fork(0xb00f);

  ShootingOptions sopts = opts.shooting;
  sopts.set_tolerances(scenario.rtol, scenario.atol);

  auto checkpoint = [&]() {
    if (!opts.checkpoint.empty())
      save_continuation_log(opts.checkpoint, scenario, schedule, opts.seed, result.records);
  };
  auto solve_at = [&](double thrust_n, const Costate& lam0, double tf) {
    return solve_tpbvp(lam0, tf, y0, scenario.canonical(thrust_n), boundary, sopts);
  };

  if (opts.resume && !opts.checkpoint.empty() && std::filesystem::exists(opts.checkpoint)) {
    result.records = load_continuation_log(opts.checkpoint, scenario);
    while (!result.records.empty() && !result.records.back().converged) result.records.pop_back();
  }

  TransferSolution current;
  if (result.records.empty()) {
    const double t0 = now_seconds();
    current = find_start_solution(scenario, schedule.t_start_n, rng, opts);
    if (!current.converged()) {
      result.status = HomotopyStatus::start_not_found;
      return result;
    }
    result.records.push_back(make_record(schedule.t_start_n, current, "restart", now_seconds() - t0));
    checkpoint();
  } else {
    // Re-solve the checkpointed step to rebuild the dense trajectory.
    const ContinuationRecord& last = result.records.back();
    current = solve_at(last.thrust_n, last.lam0, last.tf);
    if (!current.converged()) {
      result.status = HomotopyStatus::start_not_found;
      return result;
    }
  }

  double thrust = result.records.back().thrust_n;
  while (thrust > schedule.t_target_n * (1.0 + 1e-12)) {
    double next = std::max(schedule.t_target_n, thrust * schedule.reduction_ratio);
    bool advanced = false;
    while (!advanced) {
      const ContinuationRecord& prev = result.records.back();
      const double tf_guess = guess_tf(prev.thrust_n, prev.tf, next);

      const double t0 = now_seconds();
      TransferSolution sol;
      std::string path;
      if (schedule.path_mode != PathMode::linear) {
        sol = solve_at(next, guess_lam0_zero(prev), tf_guess);
        path = "zero";
      }
      const bool zero_failed = schedule.path_mode == PathMode::linear || !sol.converged();
      if (zero_failed && schedule.path_mode != PathMode::zero) {
        // Look back for a second converged record to extrapolate from.
        const ContinuationRecord* prev2 = nullptr;
        for (auto it = result.records.rbegin() + 1; it != result.records.rend(); ++it)
          if (it->converged) {
            prev2 = &*it;
            break;
          }
        if (prev2) {
          if (auto lam = guess_lam0_linear(*prev2, prev, next)) {
            TransferSolution lin = solve_at(next, *lam, tf_guess);
            if (lin.converged() || !sol.converged()) {
              sol = std::move(lin);
              path = "linear";
            }
          }
        }
      }

      if (sol.converged()) {
        if (opts.verbose)
          std::fprintf(stderr, "[homotopy] %.4g N converged (%s path, %d iters, tf = %.4g days)\n", next,
                       path.c_str(), sol.iterations, units.days_from_canonical(sol.tf));
        result.records.push_back(make_record(next, sol, path, now_seconds() - t0));
        current = std::move(sol);
        thrust = next;
        checkpoint();
        advanced = true;
      } else {
        // Bisect the thrust step.
        const double mid = 0.5 * (thrust + next);
        if (mid / thrust > schedule.min_step_ratio) {
          result.status = HomotopyStatus::continuation_stalled;
          return result;
        }
        if (opts.verbose)
          std::fprintf(stderr, "[homotopy] %.4g N failed (%s); bisecting to %.4g N\n", next,
                       to_string(sol.status), mid);
        next = mid;
      }
    }
  }

  result.status = HomotopyStatus::converged;
  result.solution = std::move(current);
  return result;
}

}  // namespace ltor
