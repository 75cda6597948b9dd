#include "ltor/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <future>

#include <json.hpp>

#include "ltor/io.hpp"

namespace ltor {

namespace {

const std::vector<std::string> kDatasetColumns = {
    "traj_id", "t_days",  "m_kg",   "p_km",    "ex",       "ey",     "hx",     "hy",
    "L_deg",   "L_mod360_deg", "a_km", "e",    "i_deg",    "raan_deg", "argp_deg", "ta_deg",
    "x_km",    "y_km",    "z_km",   "vx_kms",  "vy_kms",   "vz_kms", "alpha_deg", "beta_deg"};

std::vector<double> build_row(int traj_id, double t_canonical, const Vec14& y, const UnitSystem& units,
                              const CanonicalParams& params) {
  const MeeState mee_c = MeeState::from_vector(y.head<6>());
  const Costate lam = Costate::from_vector(y.tail<7>());
  MeeState mee_km = mee_c;
  mee_km.p *= units.du_km;
  const ClassicalElements coe = mee_to_coe(mee_km);
  const CartesianState eci = mee_to_cartesian(mee_km, units.mu_km3s2);
  const auto control = optimal_control(mee_c, y[6], lam, params);
  if (!control) throw std::runtime_error("dataset: degenerate optimal control at a sample point");

  const double l_deg = rad_to_deg(mee_c.L);
  const double ta_deg = l_deg - rad_to_deg(coe.argp) - rad_to_deg(coe.raan);
  return {static_cast<double>(traj_id),
          units.days_from_canonical(t_canonical),
          y[6] * units.mass_kg,
          mee_km.p,
          mee_c.ex,
          mee_c.ey,
          mee_c.hx,
          mee_c.hy,
          l_deg,
          rad_to_deg(wrap_two_pi(mee_c.L)),
          coe.a,
          coe.e,
          rad_to_deg(coe.inc),
          rad_to_deg(coe.raan),
          rad_to_deg(coe.argp),
          ta_deg,
          eci.r.x(),
          eci.r.y(),
          eci.r.z(),
          eci.v.x(),
          eci.v.y(),
          eci.v.z(),
          rad_to_deg(control->alpha),
          rad_to_deg(control->beta)};
}

Table make_split_table(const SpacecraftScenario& scenario, const DatasetConfig& config,
                       const std::string& split) {
  Table t;
  t.meta.set("artifact", "dataset_split");
  t.meta.set("split", split);
  t.meta.set("scenario", scenario.name);
  t.meta.set("scenario_hash", scenario.config_hash_hex());
  t.meta.set_int("seed", static_cast<long long>(config.seed));
  t.meta.set_int("points_per_traj", config.points_per_traj);
  t.columns = kDatasetColumns;
  return t;
}

}  // namespace

CartesianState sample_departure(const CartesianState& nominal, const PerturbationSpec& spec, Rng& rng) {
  const double c_r = rng.uniform(spec.c_lo, spec.c_hi);
  const Vec3 a_r = rng.unit_vector();
  const double c_v = rng.uniform(spec.c_lo, spec.c_hi);
  const Vec3 a_v = rng.unit_vector();
  CartesianState out;
  out.r = nominal.r + c_r * (spec.dr_max_m / 1000.0) * a_r;      // km
  out.v = nominal.v + c_v * (spec.dv_max_ms / 1000.0) * a_v;     // km/s
  return out;
}

FamilyResult optimize_family(const TransferSolution& nominal, const SpacecraftScenario& scenario,
                             const PerturbationSpec& spec, int count, std::uint64_t seed, int threads) {
  FamilyResult result;
  const UnitSystem units = scenario.units();
  const CanonicalParams params = scenario.canonical();
  const BoundarySpec boundary = scenario.boundary();
  const Vec7 y0_nominal = scenario.initial_state();
  const MeeState dep_mee = coe_to_mee(scenario.departure);
  MeeState dep_km = dep_mee;
  const CartesianState nominal_eci = mee_to_cartesian(dep_km, scenario.mu_km3s2);

  ShootingOptions sopts;
  sopts.set_tolerances(scenario.rtol, scenario.atol);
  sopts.jacobian_threads = 1;  // members are already solved in parallel

  const Rng base(seed);
  const int max_attempts = 2 * count + 16;

  auto solve_member = [&](int id) -> FamilyMember {
    Rng rng = base.fork(0xde90 + static_cast<std::uint64_t>(id));
    const CartesianState dep = sample_departure(nominal_eci, spec, rng);
    CartesianState dep_canonical;
    dep_canonical.r = dep.r / units.du_km;
    dep_canonical.v = dep.v / units.vu_kms;
    MeeState mee = cartesian_to_mee(dep_canonical, 1.0);
    // Keep the unwrapped longitude on the nominal branch.
    mee.L += 2.0 * M_PI * std::round((y0_nominal[5] - mee.L) / (2.0 * M_PI));

    FamilyMember member;
    member.id = id;
    member.y0 << mee.p, mee.ex, mee.ey, mee.hx, mee.hy, mee.L, 1.0;
    member.solution = solve_tpbvp(nominal.lam0, nominal.tf, member.y0, params, boundary, sopts);
    return member;
  };

  int next_id = 0;
  while (static_cast<int>(result.members.size()) < count && next_id < max_attempts) {
    const int missing = count - static_cast<int>(result.members.size());
    std::vector<int> ids(missing);
    for (int i = 0; i < missing; ++i) ids[i] = next_id++;

    std::vector<FamilyMember> batch(missing);
    std::atomic<int> cursor{0};
    std::vector<std::future<void>> workers;
    for (int w = 0; w < std::max(1, threads); ++w) {
      workers.push_back(std::async(std::launch::async, [&]() {
        int k;
        while ((k = cursor.fetch_add(1)) < missing) batch[k] = solve_member(ids[k]);
      }));
    }
    for (auto& w : workers) w.get();

    for (auto& member : batch) {
      FamilySolveReport report;
      report.id = member.id;
      report.status = member.solution.status;
      report.tf_days = units.days_from_canonical(member.solution.tf);
      report.iterations = member.solution.iterations;
      result.reports.push_back(report);
      if (member.solution.converged()) {
        result.members.push_back(std::move(member));
      } else {
        ++result.n_failed;
      }
    }
  }
  return result;
}

void assemble_dataset(const FamilyResult& family, const SpacecraftScenario& scenario,
                      const DatasetConfig& config, const std::filesystem::path& out_dir) {
  const int needed = config.n_train + config.n_val + config.n_test;
  if (static_cast<int>(family.members.size()) < needed)
    throw std::runtime_error("assemble_dataset: only " + std::to_string(family.members.size()) +
                             " converged trajectories for a " + std::to_string(needed) + "-trajectory dataset");
  if (config.n_train <= 0 || config.n_val < 0 || config.n_test < 0)
    throw std::runtime_error("assemble_dataset: invalid split sizes");

  std::filesystem::create_directories(out_dir);
  const UnitSystem units = scenario.units();
  const CanonicalParams params = scenario.canonical();
  const Rng base(config.seed);

  // Trajectory-level split: a trajectory's points never straddle splits.
  Table tables[3] = {make_split_table(scenario, config, "train"),
                     make_split_table(scenario, config, "val"),
                     make_split_table(scenario, config, "test")};
  tables[0].meta.set_int("n_traj", config.n_train);
  tables[1].meta.set_int("n_traj", config.n_val);
  tables[2].meta.set_int("n_traj", config.n_test);

  for (int k = 0; k < needed; ++k) {
    const FamilyMember& member = family.members[k];
    const int split = k < config.n_train ? 0 : (k < config.n_train + config.n_val ? 1 : 2);
    Rng rng = base.fork(0x9a3000 + static_cast<std::uint64_t>(member.id));
    std::vector<double> times(config.points_per_traj);
    for (auto& t : times) t = rng.uniform(0.0, member.solution.tf);
    std::sort(times.begin(), times.end());
    for (const double t : times)
      tables[split].rows.push_back(build_row(member.id, t, member.solution.trajectory.eval(t), units, params));
  }

  tables[0].save(out_dir / "train.tsv");
  tables[1].save(out_dir / "val.tsv");
  tables[2].save(out_dir / "test.tsv");

  // Failure report: every attempted member solve.
  Table failures;
  failures.meta.set("artifact", "family_failures");
  failures.meta.set("scenario_hash", scenario.config_hash_hex());
  failures.meta.set_int("n_failed", family.n_failed);
  failures.columns = {"id", "converged", "status_code", "tf_days", "iterations"};
  for (const auto& r : family.reports)
    failures.rows.push_back({static_cast<double>(r.id), r.status == SolveStatus::converged ? 1.0 : 0.0,
                             static_cast<double>(static_cast<int>(r.status)), r.tf_days,
                             static_cast<double>(r.iterations)});
  failures.save(out_dir / "failures.tsv");

  // Normalization statistics from the training rows only.
  nlohmann::json manifest;
  manifest["artifact"] = "dataset_manifest";
  manifest["scenario"] = scenario.name;
  manifest["scenario_hash"] = scenario.config_hash_hex();
  manifest["seed"] = config.seed;
  manifest["counts"] = {{"n_train_traj", config.n_train},
                        {"n_val_traj", config.n_val},
                        {"n_test_traj", config.n_test},
                        {"points_per_traj", config.points_per_traj}};
  manifest["perturbation"] = {{"dr_max_m", config.perturbation.dr_max_m},
                              {"dv_max_ms", config.perturbation.dv_max_ms},
                              {"c_lo", config.perturbation.c_lo},
                              {"c_hi", config.perturbation.c_hi}};
  manifest["columns"] = kDatasetColumns;
  manifest["target_columns"] = {"alpha_deg", "beta_deg"};

  const Table& train = tables[0];
  for (const FeatureForm form : {FeatureForm::mee, FeatureForm::coe, FeatureForm::eci}) {
    const auto names = feature_column_names(form);
    nlohmann::json stats;
    std::vector<std::string> cols(names.begin(), names.end());
    stats["columns"] = cols;
    std::vector<double> mean(kFeatureDim, 0.0), stddev(kFeatureDim, 0.0);
    const double n = static_cast<double>(train.rows.size());
    for (int j = 0; j < kFeatureDim; ++j) {
      const int cj = train.column_index(names[j]);
      double mu = 0.0;
      for (const auto& row : train.rows) mu += row[cj];
      mu /= n;
      double var = 0.0;
      for (const auto& row : train.rows) var += (row[cj] - mu) * (row[cj] - mu);
      var /= n;
      mean[j] = mu;
      stddev[j] = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    stats["mean"] = mean;
    stats["std"] = stddev;
    manifest["normalization"][to_string(form)] = stats;
  }

  std::ofstream mf(out_dir / "manifest.json");
  if (!mf) throw std::runtime_error("cannot write manifest.json");
  mf << manifest.dump(2) << "\n";
}

FamilyResult generate_dataset(const TransferSolution& nominal, const SpacecraftScenario& scenario,
                              const DatasetConfig& config, const std::filesystem::path& out_dir,
                              int threads) {
  const int needed = config.n_train + config.n_val + config.n_test;
  FamilyResult family = optimize_family(nominal, scenario, config.perturbation, needed, config.seed, threads);
  assemble_dataset(family, scenario, config, out_dir);
  return family;
}

namespace {

void load_split(const std::filesystem::path& path, DatasetSplit& split) {
  const Table t = Table::load(path);
  const std::int64_t n = static_cast<std::int64_t>(t.rows.size());
  for (const FeatureForm form : {FeatureForm::mee, FeatureForm::coe, FeatureForm::eci}) {
    const auto names = feature_column_names(form);
    Eigen::MatrixXd& x = split.features[static_cast<int>(form)];
    x.resize(n, kFeatureDim);
    for (int j = 0; j < kFeatureDim; ++j) {
      const int cj = t.column_index(names[j]);
      for (std::int64_t i = 0; i < n; ++i) x(i, j) = t.rows[i][cj];
    }
  }
  split.targets.resize(n, 2);
  const int ca = t.column_index("alpha_deg");
  const int cb = t.column_index("beta_deg");
  for (std::int64_t i = 0; i < n; ++i) {
    split.targets(i, 0) = t.rows[i][ca];
    split.targets(i, 1) = t.rows[i][cb];
  }
}

}  // namespace

DatasetBundle load_dataset(const std::filesystem::path& dir, bool include_test) {
  DatasetBundle bundle;
  load_split(dir / "train.tsv", bundle.train);
  load_split(dir / "val.tsv", bundle.val);
  if (include_test) load_split(dir / "test.tsv", bundle.test);

  std::ifstream mf(dir / "manifest.json");
  if (!mf) throw std::runtime_error("cannot open manifest.json in " + dir.string());
  nlohmann::json manifest;
  mf >> manifest;
  bundle.scenario_hash = manifest.at("scenario_hash").get<std::string>();
  bundle.seed = manifest.at("seed").get<std::uint64_t>();
  bundle.config.n_train = manifest.at("counts").at("n_train_traj").get<int>();
  bundle.config.n_val = manifest.at("counts").at("n_val_traj").get<int>();
  bundle.config.n_test = manifest.at("counts").at("n_test_traj").get<int>();
  bundle.config.points_per_traj = manifest.at("counts").at("points_per_traj").get<int>();
  bundle.config.seed = bundle.seed;
  for (const FeatureForm form : {FeatureForm::mee, FeatureForm::coe, FeatureForm::eci}) {
    const auto& stats = manifest.at("normalization").at(to_string(form));
    for (int j = 0; j < kFeatureDim; ++j) {
      bundle.norm[static_cast<int>(form)].mean[j] = stats.at("mean").at(j).get<double>();
      bundle.norm[static_cast<int>(form)].stddev[j] = stats.at("std").at(j).get<double>();
    }
  }
  return bundle;
}

}  // namespace ltor
