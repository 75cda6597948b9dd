#include "ltor/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>

#include "ltor/io.hpp"

namespace ltor {

CaseKind case_from_string(const std::string& s) {
  if (s == "inside_a") return CaseKind::inside_a;
  if (s == "outside_a") return CaseKind::outside_a;
  if (s == "uncertainty") return CaseKind::uncertainty;
  if (s == "perturbation") return CaseKind::perturbation;
  throw std::runtime_error("unknown case: " + s + " (expected inside_a, outside_a, uncertainty, perturbation)");
}

GeneralizationCase GeneralizationCase::make(CaseKind kind) {
  GeneralizationCase c;
  c.kind = kind;
  switch (kind) {
    case CaseKind::inside_a:
      c.departure = PerturbationSpec{100.0, 0.1, 0.0, 1.0};
      break;
    case CaseKind::outside_a:
      c.departure = PerturbationSpec{100.0, 0.1, 1.0, 1.2};
      break;
    case CaseKind::uncertainty:
    case CaseKind::perturbation:
      c.departure = PerturbationSpec{0.0, 0.0, 0.0, 0.0};  // nominal departure
      break;
  }
  return c;
}

double pointing_noise_deg(std::uint64_t seed, std::int64_t block, int component, double sigma_deg) {
  Rng rng(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(block) * 2 + component)));
  return rng.normal(0.0, sigma_deg);
}

Vec3 disturbance_direction(std::uint64_t seed, std::int64_t block) {
  Rng rng(splitmix64((seed + 0x5151) ^ splitmix64(static_cast<std::uint64_t>(block))));
  return rng.unit_vector();
}

ControlAngles NnPolicy::operator()(double, const Vec7& y) const {
  const FeatureVec f = feature_vector(model_->form, y, units_);
  nn::Network<float>::Mat x(1, kFeatureDim);
  for (int i = 0; i < kFeatureDim; ++i) x(0, i) = static_cast<float>(f[i]);
  const auto angles = model_->predict_angles(x);
  ControlAngles c;
  c.alpha = deg_to_rad(static_cast<double>(angles(0, 0)));
  c.beta = deg_to_rad(std::clamp(static_cast<double>(angles(0, 1)), -90.0, 90.0));
  c.u = 1.0;
  return c;
}

DriveRecord drive(const nn::Network<float>& model, const Vec7& y0, const SpacecraftScenario& scenario,
                  const GeneralizationCase& stress, std::uint64_t noise_seed, double tf_nominal,
                  const DriveOptions& opts) {
  DriveRecord rec;
  rec.y0 = y0;
  const UnitSystem units = scenario.units();
  const CanonicalParams params = scenario.canonical();
  const NnPolicy base_policy(model, units);
  const double hold_canonical = units.time_to_canonical(stress.hold_s);

  ControlPolicy policy;
  if (stress.kind == CaseKind::uncertainty) {
    policy = [&, hold_canonical](double t, const Vec7& y) {
      ControlAngles c = base_policy(t, y);
      const auto block = static_cast<std::int64_t>(std::floor(t / hold_canonical));
      c.alpha += deg_to_rad(pointing_noise_deg(noise_seed, block, 0, stress.noise_sigma_deg));
      c.beta += deg_to_rad(pointing_noise_deg(noise_seed, block, 1, stress.noise_sigma_deg));
      c.beta = std::clamp(c.beta, -M_PI / 2.0, M_PI / 2.0);
      return c;
    };
  } else {
    policy = [&](double t, const Vec7& y) { return base_policy(t, y); };
  }
  if (opts.throttle_override >= 0.0) {
    const ControlPolicy inner = policy;
    policy = [inner, &opts](double t, const Vec7& y) {
      ControlAngles c = inner(t, y);
      c.u = opts.throttle_override;
      return c;
    };
  }

  ExtraAcceleration extra;
  if (stress.kind == CaseKind::perturbation) {
    extra = [&, hold_canonical](double t, const Vec7& y) -> Vec3 {
      const MeeState mee = MeeState::from_vector(y.head<6>());
      const double w = 1.0 + mee.ex * std::cos(mee.L) + mee.ey * std::sin(mee.L);
      const double r = mee.p / w;
      const double gravity = params.mu / (r * r);
      const auto block = static_cast<std::int64_t>(std::floor(t / hold_canonical));
      return stress.force_ratio * gravity * disturbance_direction(noise_seed, block);
    };
  }

  const ClassicalElements target = scenario.target;
  double dv_min = std::numeric_limits<double>::infinity();
  int nodes_past_min = 0;
  double current_dv = 0.0;

  auto observe = [&](double t, const Vec7& y) -> ObserverAction {
    MeeState mee_km = MeeState::from_vector(y.head<6>());
    mee_km.p *= units.du_km;
    const ClassicalElements coe = mee_to_coe(mee_km);
    current_dv = edelbaum_dv(coe, target, scenario.mu_km3s2).dv_ms;
    rec.dv_trace.push_back({t, current_dv});
    if (opts.record_controls) {
      const ControlAngles c = policy(t, y);
      rec.control_trace.push_back({t, rad_to_deg(c.alpha), rad_to_deg(c.beta)});
    }
    if (current_dv < dv_min) {
      dv_min = current_dv;
      nodes_past_min = 0;
      rec.t_stop = t;
      rec.y_stop = y;
      rec.dv_ms = current_dv;
    } else {
      ++nodes_past_min;
      if (nodes_past_min >= opts.stop_patience_nodes && current_dv - dv_min > opts.stop_excess_ms)
        return ObserverAction::halt;
    }
    return ObserverAction::keep_going;
  };

  // Seed the monitor with the departure point.
  observe(0.0, y0);
  rec.t_stop = 0.0;
  rec.y_stop = y0;

  const double horizon = opts.horizon_factor * tf_nominal;
  OdeOptions ode = scenario.ode_options();
  ode.max_steps = 2'000'000;
  const PropagationResult res = propagate(y0, policy, 0.0, horizon, params, ode, nullptr, observe, extra);

  rec.propagation_ok = res.ok();
  // Reaching the horizon without the stop rule firing means no distance
  // minimum was found; a minimum still sitting at the departure point means
  // the controller never improved the orbit.
  rec.controller_failure = !rec.propagation_ok || res.status == OdeStatus::ok || rec.t_stop == 0.0;

  MeeState mee_km = MeeState::from_vector(rec.y_stop.head<6>());
  mee_km.p *= units.du_km;
  const ClassicalElements coe = mee_to_coe(mee_km);
  rec.a_f_km = coe.a;
  rec.e_f = coe.e;
  rec.i_f_deg = rad_to_deg(coe.inc);
  rec.mass_f_kg = rec.y_stop[6] * units.mass_kg;
  return rec;
}

OptimalityResult optimality_mape(const DriveRecord& record, const SpacecraftScenario& scenario,
                                 const TransferSolution& nominal) {
  OptimalityResult out;
  if (record.t_stop <= 0.0) return out;
  const UnitSystem units = scenario.units();

  BoundarySpec boundary;
  boundary.mode = BoundaryMode::l_fixed;
  boundary.target_mee = record.y_stop.head<6>();

  ShootingOptions sopts;
  sopts.set_tolerances(scenario.rtol, scenario.atol);
  sopts.jacobian_threads = 1;

  const TransferSolution sol =
      solve_tpbvp(nominal.lam0, record.t_stop, record.y0, scenario.canonical(), boundary, sopts);
  if (!sol.converged() || sol.tf <= 0.0) return out;
  out.evaluable = true;
  out.j_nn_days = units.days_from_canonical(record.t_stop);
  out.j_opt_days = units.days_from_canonical(sol.tf);
  out.mape_percent = 100.0 * std::abs(out.j_nn_days - out.j_opt_days) / out.j_opt_days;
  return out;
}

CampaignReport run_campaign(const nn::Network<float>& model, const SpacecraftScenario& scenario,
                            const TransferSolution& nominal, const GeneralizationCase& stress,
                            const CampaignOptions& opts) {
  CampaignReport report;
  report.kind = stress.kind;
  report.n_runs = opts.n_runs;
  report.runs.resize(opts.n_runs);

  const UnitSystem units = scenario.units();
  const CartesianState nominal_eci = mee_to_cartesian(coe_to_mee(scenario.departure), scenario.mu_km3s2);
  const Vec7 y0_nominal = scenario.initial_state();
  const Rng base(opts.seed);

  const bool optimality_case =
      stress.kind == CaseKind::inside_a || stress.kind == CaseKind::outside_a;

  std::atomic<int> cursor{0};
  auto worker = [&]() {
    int k;
    while ((k = cursor.fetch_add(1)) < opts.n_runs) {
      CampaignRun& run = report.runs[k];
      run.run = k;

      Vec7 y0 = y0_nominal;
      if (stress.departure.dr_max_m > 0.0 || stress.departure.dv_max_ms > 0.0) {
        Rng rng = base.fork(0xdead00 + static_cast<std::uint64_t>(k));
        const CartesianState dep = sample_departure(nominal_eci, stress.departure, rng);
        CartesianState dep_c;
        dep_c.r = dep.r / units.du_km;
        dep_c.v = dep.v / units.vu_kms;
        MeeState mee = cartesian_to_mee(dep_c, 1.0);
        mee.L += 2.0 * M_PI * std::round((y0_nominal[5] - mee.L) / (2.0 * M_PI));
        y0 << mee.p, mee.ex, mee.ey, mee.hx, mee.hy, mee.L, 1.0;
      }

      const std::uint64_t noise_seed = splitmix64(opts.seed ^ (0xabc000 + static_cast<std::uint64_t>(k)));
      run.record = drive(model, y0, scenario, stress, noise_seed, nominal.tf, opts.drive);
      if (optimality_case && run.record.ok() && k < opts.optimality_runs)
        run.optimality = optimality_mape(run.record, scenario, nominal);
    }
  };
  std::vector<std::future<void>> futures;
  for (int w = 0; w < std::max(1, opts.threads); ++w)
    futures.push_back(std::async(std::launch::async, worker));
  for (auto& f : futures) f.get();

  double sum_dv = 0.0, sum_a = 0.0, sum_e = 0.0, sum_i = 0.0, sum_t = 0.0, sum_opt = 0.0;
  int n_ok = 0;
  for (const auto& run : report.runs) {
    if (!run.record.ok()) {
      ++report.n_failed;
      continue;
    }
    ++n_ok;
    sum_dv += run.record.dv_ms;
    sum_a += run.record.a_f_km;
    sum_e += run.record.e_f;
    sum_i += run.record.i_f_deg;
    sum_t += units.days_from_canonical(run.record.t_stop);
    if (run.optimality.evaluable) {
      sum_opt += run.optimality.mape_percent;
      ++report.n_evaluable;
    }
  }
  if (n_ok > 0) {
    report.mean_dv_ms = sum_dv / n_ok;
    report.mean_a_f_km = sum_a / n_ok;
    report.mean_e_f = sum_e / n_ok;
    report.mean_i_f_deg = sum_i / n_ok;
    report.mean_stop_days = sum_t / n_ok;
  }
  if (report.n_evaluable > 0) report.mean_opt_mape = sum_opt / report.n_evaluable;

  // Empirical sigma of the pointing noise actually injected (all blocks of
  // all runs up to each stop time).
  if (stress.kind == CaseKind::uncertainty) {
    double sum = 0.0, sum2 = 0.0;
    std::int64_t n = 0;
    const double hold_canonical = units.time_to_canonical(stress.hold_s);
    for (int k = 0; k < opts.n_runs; ++k) {
      const std::uint64_t noise_seed = splitmix64(opts.seed ^ (0xabc000 + static_cast<std::uint64_t>(k)));
      const auto blocks = static_cast<std::int64_t>(report.runs[k].record.t_stop / hold_canonical) + 1;
      for (std::int64_t b = 0; b < blocks; ++b)
        for (int comp = 0; comp < 2; ++comp) {
          const double v = pointing_noise_deg(noise_seed, b, comp, stress.noise_sigma_deg);
          sum += v;
          sum2 += v * v;
          ++n;
        }
    }
    if (n > 1) {
      const double mean = sum / static_cast<double>(n);
      report.noise_sigma_emp_deg = std::sqrt(sum2 / static_cast<double>(n) - mean * mean);
    }
  }
  return report;
}

void save_reports(const std::filesystem::path& dir, const std::vector<CampaignReport>& reports,
                  const SpacecraftScenario& scenario, std::uint64_t seed) {
  std::filesystem::create_directories(dir);

  Table agg;
  agg.meta.set("artifact", "evaluation_report");
  agg.meta.set("scenario", scenario.name);
  agg.meta.set("scenario_hash", scenario.config_hash_hex());
  agg.meta.set_int("seed", static_cast<long long>(seed));
  agg.columns = {"case",      "n_runs",     "n_failed",   "dv_ms",     "a_f_km",
                 "e_f",       "i_f_deg",    "stop_days",  "mape_opt",  "n_evaluable",
                 "noise_sigma_emp_deg"};
  for (const auto& r : reports)
    agg.rows.push_back({static_cast<double>(static_cast<int>(r.kind)), static_cast<double>(r.n_runs),
                        static_cast<double>(r.n_failed), r.mean_dv_ms, r.mean_a_f_km, r.mean_e_f,
                        r.mean_i_f_deg, r.mean_stop_days,
                        r.n_evaluable > 0 ? r.mean_opt_mape : -1.0,
                        static_cast<double>(r.n_evaluable), r.noise_sigma_emp_deg});
  agg.save(dir / "report.tsv");

  Table runs;
  runs.meta.set("artifact", "evaluation_runs");
  runs.meta.set("scenario_hash", scenario.config_hash_hex());
  runs.meta.set_int("seed", static_cast<long long>(seed));
  runs.columns = {"case",   "run",    "ok",        "controller_failure", "dv_ms",  "a_f_km",
                  "e_f",    "i_f_deg", "stop_days", "mass_f_kg",          "mape_opt"};
  const UnitSystem units = scenario.units();
  for (const auto& r : reports)
    for (const auto& row : r.runs)
      runs.rows.push_back({static_cast<double>(static_cast<int>(r.kind)), static_cast<double>(row.run),
                           row.record.ok() ? 1.0 : 0.0, row.record.controller_failure ? 1.0 : 0.0,
                           row.record.dv_ms, row.record.a_f_km, row.record.e_f, row.record.i_f_deg,
                           units.days_from_canonical(row.record.t_stop), row.record.mass_f_kg,
                           row.optimality.evaluable ? row.optimality.mape_percent : -1.0});
  runs.save(dir / "runs.tsv");
}

}  // namespace ltor
