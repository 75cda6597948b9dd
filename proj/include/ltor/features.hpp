#pragma once

#include <array>
#include <stdexcept>
#include <string>

#include "ltor/elements.hpp"
#include "ltor/units.hpp"

namespace ltor {

// Network input forms: mass plus one of the three state representations.
// Values are in interface units (kg, km, km/s, degrees); the true longitude
// and true anomaly stay unwrapped so the feature is monotone along a
// transfer.
enum class FeatureForm { mee, coe, eci };

inline const char* to_string(FeatureForm f) {
  switch (f) {
    case FeatureForm::mee: return "F_mee";
    case FeatureForm::coe: return "F_coe";
    case FeatureForm::eci: return "F_eci";
  }
  return "?";
}

inline FeatureForm feature_form_from_string(const std::string& s) {
  if (s == "F_mee" || s == "mee") return FeatureForm::mee;
  if (s == "F_coe" || s == "coe") return FeatureForm::coe;
  if (s == "F_eci" || s == "eci") return FeatureForm::eci;
  throw std::runtime_error("unknown feature form: " + s);
}

inline constexpr int kFeatureDim = 7;
using FeatureVec = Eigen::Matrix<double, kFeatureDim, 1>;

inline std::array<std::string, kFeatureDim> feature_column_names(FeatureForm form) {
  switch (form) {
    case FeatureForm::mee:
      return {"m_kg", "p_km", "ex", "ey", "hx", "hy", "L_deg"};
    case FeatureForm::coe:
      return {"m_kg", "a_km", "e", "i_deg", "raan_deg", "argp_deg", "ta_deg"};
    case FeatureForm::eci:
      return {"m_kg", "x_km", "y_km", "z_km", "vx_kms", "vy_kms", "vz_kms"};
  }
  throw std::runtime_error("bad feature form");
}

// Feature vector from a canonical [mee, m] state. Shared by the dataset
// assembly and the closed-loop controller so both see identical inputs.
inline FeatureVec feature_vector(FeatureForm form, const Vec7& y_canonical, const UnitSystem& units) {
  MeeState mee = MeeState::from_vector(y_canonical.head<6>());
  const double m_kg = y_canonical[6] * units.mass_kg;
  FeatureVec f;
  switch (form) {
    case FeatureForm::mee:
      f << m_kg, mee.p * units.du_km, mee.ex, mee.ey, mee.hx, mee.hy, rad_to_deg(mee.L);
      return f;
    case FeatureForm::coe: {
      MeeState mee_km = mee;
      mee_km.p *= units.du_km;
      const ClassicalElements coe = mee_to_coe(mee_km);
      const double ta_unwrapped = mee.L - coe.argp - coe.raan;
      f << m_kg, coe.a, coe.e, rad_to_deg(coe.inc), rad_to_deg(coe.raan), rad_to_deg(coe.argp),
          rad_to_deg(ta_unwrapped);
      return f;
    }
    case FeatureForm::eci: {
      MeeState mee_km = mee;
      mee_km.p *= units.du_km;
      const CartesianState s = mee_to_cartesian(mee_km, units.mu_km3s2);
      f << m_kg, s.r.x(), s.r.y(), s.r.z(), s.v.x(), s.v.y(), s.v.z();
      return f;
    }
  }
  throw std::runtime_error("bad feature form");
}

}  // namespace ltor
