#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "ltor/detail/dop853_tables.hpp"

namespace ltor {

enum class OdeStatus {
  ok,             // reached the end of the interval
  halted,         // observer requested an early stop
  step_underflow, // step size collapsed below the floor
  max_steps,      // step budget exhausted
  observer_fail,  // observer flagged the state as invalid (mass floor etc.)
  non_finite,     // RHS or state became non-finite
};

inline const char* to_string(OdeStatus s) {
  switch (s) {
    case OdeStatus::ok: return "ok";
    case OdeStatus::halted: return "halted";
    case OdeStatus::step_underflow: return "step_underflow";
    case OdeStatus::max_steps: return "max_steps";
    case OdeStatus::observer_fail: return "observer_fail";
    case OdeStatus::non_finite: return "non_finite";
  }
  return "unknown";
}

enum class ObserverAction { keep_going, halt, fail };

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double max_step = std::numeric_limits<double>::infinity();
  std::int64_t max_steps = 20'000'000;
};

// Dense trajectory produced by Dop853<N>. One interpolation record per
// accepted step; evaluation is the degree-7 two-sided Horner scheme.
template <int N>
class DenseTrajectory {
 public:
  using Vec = Eigen::Matrix<double, N, 1>;

  struct Segment {
    double t0, h;
    std::array<Vec, 7> f;
    Vec y0;
  };

  bool empty() const { return segments_.empty(); }
  std::size_t size() const { return segments_.size(); }
  double t_begin() const { return segments_.empty() ? 0.0 : segments_.front().t0; }
  double t_end() const { return t_end_; }

  void clear() {
    segments_.clear();
    t_end_ = 0.0;
  }
  void push(const Segment& seg) {
    segments_.push_back(seg);
    t_end_ = seg.t0 + seg.h;
  }

  // Interpolated state at t (clamped to the covered interval).
  Vec eval(double t) const {
    const Segment& seg = locate(t);
    const double x = std::clamp((t - seg.t0) / seg.h, 0.0, 1.0);
    Vec y = Vec::Zero();
    for (int i = 0; i < 7; ++i) {
      y += seg.f[6 - i];
      y *= (i % 2 == 0) ? x : (1.0 - x);
    }
    y += seg.y0;
    return y;
  }

  // Accepted-step node times, including the initial point.
  std::vector<double> node_times() const {
    std::vector<double> t;
    t.reserve(segments_.size() + 1);
    for (const auto& s : segments_) t.push_back(s.t0);
    if (!segments_.empty()) t.push_back(t_end_);
    return t;
  }

 private:
  const Segment& locate(double t) const {
    auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                               [](double value, const Segment& s) { return value < s.t0; });
    if (it != segments_.begin()) --it;
    return *it;
  }

  std::vector<Segment> segments_;
  double t_end_ = 0.0;
};

template <int N>
struct OdeResult {
  using Vec = Eigen::Matrix<double, N, 1>;
  OdeStatus status = OdeStatus::ok;
  double t = 0.0;
  Vec y = Vec::Zero();
  std::int64_t n_steps = 0;
  std::int64_t n_rhs = 0;
};

// Dormand-Prince 8(5,3) with 7th-order dense output (Hairer's DOP853).
// RHS signature: void(double t, const Vec& y, Vec& dydt).
template <int N>
class Dop853 {
 public:
  using Vec = Eigen::Matrix<double, N, 1>;
  using Rhs = std::function<void(double, const Vec&, Vec&)>;
  using Observer = std::function<ObserverAction(double, const Vec&)>;

  static OdeResult<N> integrate(const Rhs& rhs, double t0, double t1, const Vec& y0,
                                const OdeOptions& opts = {}, DenseTrajectory<N>* dense = nullptr,
                                const Observer& observer = nullptr) {
    namespace tb = detail::dop853;
    OdeResult<N> res;
    res.t = t0;
    res.y = y0;
    if (dense) dense->clear();
    if (t1 == t0) return res;
    const double direction = (t1 > t0) ? 1.0 : -1.0;

    std::array<Vec, tb::n_stages_extended> k;
    Vec f0;
    rhs(t0, y0, f0);
    ++res.n_rhs;
    if (!f0.allFinite()) {
      res.status = OdeStatus::non_finite;
      return res;
    }

    double h = select_initial_step(rhs, t0, y0, f0, t1, opts, res.n_rhs);
    double t = t0;
    Vec y = y0;
    Vec f = f0;
    bool rejected = false;

    constexpr double kSafety = 0.9;
    constexpr double kMinFactor = 0.2;
    constexpr double kMaxFactor = 10.0;
    const double err_exp = -1.0 / 8.0;  // error estimator order 7

    while (direction * (t1 - t) > 0.0) {
      if (res.n_steps >= opts.max_steps) {
        res.status = OdeStatus::max_steps;
        break;
      }
      const double h_floor = 10.0 * std::abs(t) * std::numeric_limits<double>::epsilon();
      if (h < h_floor || h < 1e-15) {
        res.status = OdeStatus::step_underflow;
        break;
      }
      h = std::min(h, opts.max_step);
      double h_signed = direction * h;
      if (direction * (t + h_signed - t1) > 0.0) {
        h_signed = t1 - t;
        h = std::abs(h_signed);
      }

      // Stages.
      k[0] = f;
      bool finite = true;
      for (int s = 1; s < tb::n_stages; ++s) {
        Vec dy = Vec::Zero();
        for (int j = 0; j < s; ++j)
          if (tb::a[s][j] != 0.0) dy += (h_signed * tb::a[s][j]) * k[j];
        rhs(t + tb::c[s] * h_signed, y + dy, k[s]);
        ++res.n_rhs;
        if (!k[s].allFinite()) {
          finite = false;
          break;
        }
      }

      Vec y_new = Vec::Zero();
      if (finite) {
        Vec dy = Vec::Zero();
        for (int j = 0; j < tb::n_stages; ++j)
          if (tb::b[j] != 0.0) dy += (h_signed * tb::b[j]) * k[j];
        y_new = y + dy;
        rhs(t + h_signed, y_new, k[tb::n_stages]);  // k[12] = f_new
        ++res.n_rhs;
        finite = y_new.allFinite() && k[tb::n_stages].allFinite();
      }

      double err_norm = std::numeric_limits<double>::infinity();
      if (finite) {
        Vec scale;
        for (int i = 0; i < N; ++i)
          scale[i] = opts.atol + opts.rtol * std::max(std::abs(y[i]), std::abs(y_new[i]));
        double err5_2 = 0.0, err3_2 = 0.0;
        for (int i = 0; i < N; ++i) {
          double e5 = 0.0, e3 = 0.0;
          for (int j = 0; j <= tb::n_stages; ++j) {
            e5 += k[j][i] * tb::e5[j];
            e3 += k[j][i] * tb::e3[j];
          }
          e5 /= scale[i];
          e3 /= scale[i];
          err5_2 += e5 * e5;
          err3_2 += e3 * e3;
        }
        if (err5_2 == 0.0 && err3_2 == 0.0)
          err_norm = 0.0;
        else
          err_norm = h * err5_2 / std::sqrt((err5_2 + 0.01 * err3_2) * N);
      }

      if (err_norm <= 1.0) {
        // Accepted.
        double factor =
            (err_norm == 0.0) ? kMaxFactor : std::min(kMaxFactor, kSafety * std::pow(err_norm, err_exp));
        if (rejected) factor = std::min(1.0, factor);
        rejected = false;

        if (dense) {
          typename DenseTrajectory<N>::Segment seg;
          seg.t0 = t;
          seg.h = h_signed;
          seg.y0 = y;
          for (int s = tb::n_stages + 1; s < tb::n_stages_extended; ++s) {
            Vec dy = Vec::Zero();
            for (int j = 0; j < s; ++j)
              if (tb::a[s][j] != 0.0) dy += (h_signed * tb::a[s][j]) * k[j];
            rhs(t + tb::c[s] * h_signed, y + dy, k[s]);
            ++res.n_rhs;
          }
          const Vec delta = y_new - y;
          seg.f[0] = delta;
          seg.f[1] = h_signed * k[0] - delta;
          seg.f[2] = 2.0 * delta - h_signed * (k[tb::n_stages] + k[0]);
          for (int row = 0; row < 4; ++row) {
            Vec acc = Vec::Zero();
            for (int j = 0; j < tb::n_stages_extended; ++j)
              if (tb::dense_d[row][j] != 0.0) acc += tb::dense_d[row][j] * k[j];
            seg.f[3 + row] = h_signed * acc;
          }
          dense->push(seg);
        }

        t += h_signed;
        y = y_new;
        f = k[tb::n_stages];
        ++res.n_steps;
        h *= factor;

        if (observer) {
          const ObserverAction act = observer(t, y);
          if (act == ObserverAction::halt) {
            res.status = OdeStatus::halted;
            break;
          }
          if (act == ObserverAction::fail) {
            res.status = OdeStatus::observer_fail;
            break;
          }
        }
      } else {
        rejected = true;
        if (!finite) {
          h *= 0.25;
        } else {
          h *= std::max(kMinFactor, kSafety * std::pow(err_norm, err_exp));
        }
      }
    }

    res.t = t;
    res.y = y;
    return res;
  }

 private:
  // Hairer's starting-step heuristic.
  static double select_initial_step(const Rhs& rhs, double t0, const Vec& y0, const Vec& f0, double t1,
                                    const OdeOptions& opts, std::int64_t& n_rhs) {
    const double direction = (t1 > t0) ? 1.0 : -1.0;
    Vec scale;
    for (int i = 0; i < N; ++i) scale[i] = opts.atol + opts.rtol * std::abs(y0[i]);
    const double d0 = rms_norm(y0.cwiseQuotient(scale));
    const double d1 = rms_norm(f0.cwiseQuotient(scale));
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, std::abs(t1 - t0));

    Vec y1 = y0 + h0 * direction * f0;
    Vec f1;
    rhs(t0 + h0 * direction, y1, f1);
    ++n_rhs;
    double h1;
    if (!f1.allFinite()) {
      h1 = h0 * 1e-3;
    } else {
      const double d2 = rms_norm((f1 - f0).cwiseQuotient(scale)) / h0;
      if (d1 <= 1e-15 && d2 <= 1e-15)
        h1 = std::max(1e-6, h0 * 1e-3);
      else
        h1 = std::pow(0.01 / std::max(d1, d2), 1.0 / 9.0);
    }
    return std::min({100.0 * h0, h1, std::abs(t1 - t0), opts.max_step});
  }

  static double rms_norm(const Vec& v) { return v.norm() / std::sqrt(static_cast<double>(N)); }
};

}  // namespace ltor
