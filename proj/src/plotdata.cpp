#include "ltor/plotdata.hpp"

#include "ltor/features.hpp"
#include "ltor/io.hpp"

namespace ltor {

void write_control_angle_table(const std::filesystem::path& path, const TransferSolution& sol,
                               const SpacecraftScenario& scenario, const nn::Network<float>* model,
                               int n_nodes) {
  const UnitSystem units = scenario.units();
  const CanonicalParams params = scenario.canonical();

  Table t;
  t.meta.set("artifact", "control_angles");
  t.meta.set("scenario", scenario.name);
  t.meta.set("scenario_hash", scenario.config_hash_hex());
  t.columns = {"t_days", "L_mod360_deg", "theta_mod360_deg", "rev_index", "alpha_deg", "beta_deg"};
  if (model) {
    t.columns.push_back("alpha_pred_deg");
    t.columns.push_back("beta_pred_deg");
  }

  if (!sol.trajectory.empty() && n_nodes > 1) {
    const double l0 = sol.trajectory.eval(0.0)[5];
    for (int i = 0; i < n_nodes; ++i) {
      const double tc = sol.tf * i / (n_nodes - 1);
      const Vec14 y = sol.trajectory.eval(tc);
      const MeeState mee = MeeState::from_vector(y.head<6>());
      const Costate lam = Costate::from_vector(y.tail<7>());
      const auto control = optimal_control(mee, y[6], lam, params);
      if (!control) continue;
      MeeState mee_km = mee;
      mee_km.p *= scenario.du_km;
      const ClassicalElements coe = mee_to_coe(mee_km);
      const double theta = mee.L - coe.argp - coe.raan;
      std::vector<double> row = {units.days_from_canonical(tc),
                                 rad_to_deg(wrap_two_pi(mee.L)),
                                 rad_to_deg(wrap_two_pi(theta)),
                                 std::floor((mee.L - l0) / (2.0 * M_PI)),
                                 rad_to_deg(control->alpha),
                                 rad_to_deg(control->beta)};
      if (model) {
        const FeatureVec f = feature_vector(model->form, y.head<7>(), units);
        nn::Network<float>::Mat x(1, kFeatureDim);
        for (int j = 0; j < kFeatureDim; ++j) x(0, j) = static_cast<float>(f[j]);
        const auto pred = model->predict_angles(x);
        row.push_back(static_cast<double>(pred(0, 0)));
        row.push_back(static_cast<double>(pred(0, 1)));
      }
      t.rows.push_back(std::move(row));
    }
  }
  t.save(path);
}

}  // namespace ltor
