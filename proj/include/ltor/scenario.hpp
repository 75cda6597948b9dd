#pragma once

#include <filesystem>
#include <string>

#include "ltor/elements.hpp"
#include "ltor/indirect.hpp"
#include "ltor/io.hpp"
#include "ltor/mee_dynamics.hpp"
#include "ltor/units.hpp"

namespace ltor {

// Transfer problem definition: departure/target orbits, spacecraft, thruster,
// and solver tolerances. Interfaces are km / s / kg / degrees; the canonical
// view used by the solver comes from canonical()/initial_state().
struct SpacecraftScenario {
  std::string name = "unnamed";
  ClassicalElements departure;  // rad, km
  ClassicalElements target;
  BoundaryMode target_l_mode = BoundaryMode::l_free;
  double m0_kg = 1000.0;
  double tmax_n = 1.0;
  double isp_s = 2000.0;
  double g0_ms2 = kStandardGravity;
  double mu_km3s2 = 398600.4418;
  double du_km = 6378.137;
  double rtol = 1e-10;
  double atol = 1e-12;

  UnitSystem units() const { return UnitSystem::make(du_km, mu_km3s2, m0_kg); }

  CanonicalParams canonical(double thrust_n = -1.0) const {
    const UnitSystem u = units();
    CanonicalParams p;
    p.mu = 1.0;
    p.tmax = u.thrust_to_canonical(thrust_n > 0.0 ? thrust_n : tmax_n);
    p.ve = u.exhaust_velocity_to_canonical(isp_s, g0_ms2);
    p.mass_floor = 0.01;
    return p;
  }

  OdeOptions ode_options() const {
    OdeOptions o;
    o.rtol = rtol;
    o.atol = atol;
    return o;
  }

  // Departure state [mee, m] in canonical units (mass unit = m0).
  Vec7 initial_state() const {
    const MeeState mee = coe_to_mee(departure);
    Vec7 y;
    y << mee.p / du_km, mee.ex, mee.ey, mee.hx, mee.hy, mee.L, 1.0;
    return y;
  }

  BoundarySpec boundary() const {
    const MeeState mee = coe_to_mee(target);
    BoundarySpec b;
    b.target_mee << mee.p / du_km, mee.ex, mee.ey, mee.hx, mee.hy, mee.L;
    b.mode = target_l_mode;
    return b;
  }

  KeyValueFile to_kv() const;
  static SpacecraftScenario from_kv(const KeyValueFile& kv);

  void save(const std::filesystem::path& path) const { to_kv().save(path); }
  static SpacecraftScenario load(const std::filesystem::path& path) {
    return from_kv(KeyValueFile::load(path));
  }

  std::uint64_t config_hash() const { return to_kv().content_hash(); }
  std::string config_hash_hex() const { return hash_hex(config_hash()); }
};

// The four nominal cases: departure in {leo, gto}, thruster in
// {1 N / 2000 s, 0.2 N / 2500 s}. Names: leo_1n, leo_02n, gto_1n, gto_02n.
SpacecraftScenario preset_scenario(const std::string& name);

}  // namespace ltor
