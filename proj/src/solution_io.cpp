#include "ltor/solution_io.hpp"

#include <fstream>

#include "ltor/io.hpp"

namespace ltor {

void save_solution(const std::filesystem::path& path, const TransferSolution& sol,
                   const SpacecraftScenario& scenario, std::uint64_t seed, int n_nodes) {
  const UnitSystem units = scenario.units();
  Table t;
  t.meta.set("artifact", "transfer_solution");
  t.meta.set("scenario", scenario.name);
  t.meta.set("scenario_hash", scenario.config_hash_hex());
  t.meta.set_int("seed", static_cast<long long>(seed));
  t.meta.set_double("thrust_n", scenario.tmax_n);
  for (int i = 0; i < 6; ++i) t.meta.set_double("lam0_" + std::to_string(i), sol.lam0.x[i]);
  t.meta.set_double("lam0_m", sol.lam0.m);
  t.meta.set_double("tf_days", units.days_from_canonical(sol.tf));
  t.meta.set_double("residual_norm", sol.residual_norm);
  t.meta.set_int("revolutions", sol.revolutions);
  t.meta.set_double("rtol", scenario.rtol);
  t.meta.set_double("atol", scenario.atol);

  t.columns = {"t_days", "m_kg",   "p_km",   "ex",     "ey",     "hx",     "hy",    "L_rad",
               "x_km",   "y_km",   "z_km",   "vx_kms", "vy_kms", "vz_kms", "alpha_deg",
               "beta_deg", "u",    "lam_p",  "lam_ex", "lam_ey", "lam_hx", "lam_hy", "lam_L", "lam_m"};

  const CanonicalParams params = scenario.canonical();
  if (!sol.trajectory.empty()) {
    for (int i = 0; i < n_nodes; ++i) {
      const double tc = sol.tf * i / (n_nodes - 1);
      const Vec14 y = sol.trajectory.eval(tc);
      const MeeState mee_c = MeeState::from_vector(y.head<6>());
      const Costate lam = Costate::from_vector(y.tail<7>());
      MeeState mee_km = mee_c;
      mee_km.p *= scenario.du_km;
      const CartesianState eci = mee_to_cartesian(mee_km, scenario.mu_km3s2);
      const auto control = optimal_control(mee_c, y[6], lam, params);
      const double alpha = control ? rad_to_deg(control->alpha) : 0.0;
      const double beta = control ? rad_to_deg(control->beta) : 0.0;
      t.rows.push_back({units.days_from_canonical(tc), y[6] * scenario.m0_kg, mee_km.p, mee_c.ex, mee_c.ey,
                        mee_c.hx, mee_c.hy, mee_c.L, eci.r.x(), eci.r.y(), eci.r.z(), eci.v.x(), eci.v.y(),
                        eci.v.z(), alpha, beta, 1.0, lam.x[0], lam.x[1], lam.x[2], lam.x[3], lam.x[4],
                        lam.x[5], lam.m});
    }
  }
  t.save(path);
}

SolutionHeader load_solution_header(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open solution file: " + path.string());
  // Only the '#' metadata block is needed; stop at the column header.
  std::string line;
  std::ostringstream meta_text;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] != '#') break;
    meta_text << line.substr(1) << "\n";
  }
  std::istringstream ms(meta_text.str());
  const KeyValueFile kv = KeyValueFile::parse(ms);

  SolutionHeader h;
  for (int i = 0; i < 6; ++i) h.lam0.x[i] = kv.get_double("lam0_" + std::to_string(i));
  h.lam0.m = kv.get_double("lam0_m");
  h.tf_days = kv.get_double("tf_days");
  h.residual_norm = kv.get_double("residual_norm");
  h.revolutions = static_cast<int>(kv.get_int("revolutions"));
  h.thrust_n = kv.get_double_or("thrust_n", 0.0);
  h.scenario_hash = kv.get_or("scenario_hash", "");
  h.seed = static_cast<std::uint64_t>(kv.get_int("seed"));
  return h;
}

TransferSolution reload_solution(const SolutionHeader& header, const SpacecraftScenario& scenario) {
  if (header.scenario_hash != scenario.config_hash_hex())
    throw std::runtime_error("solution file does not match scenario (config hash mismatch)");
  const UnitSystem units = scenario.units();
  ShootingOptions opts;
  opts.set_tolerances(scenario.rtol, scenario.atol);
  TransferSolution sol = solve_tpbvp(header.lam0, units.days_to_canonical(header.tf_days),
                                     scenario.initial_state(), scenario.canonical(), scenario.boundary(),
                                     opts);
  if (!sol.converged()) throw std::runtime_error("saved solution failed to re-converge");
  return sol;
}

}  // namespace ltor
