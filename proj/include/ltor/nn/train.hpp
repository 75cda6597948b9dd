#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "ltor/nn/network.hpp"

namespace ltor::nn {

enum class Optimizer { gd, mgd, agd };
enum class DecayModel { ed, ned };

inline const char* to_string(Optimizer o) {
  switch (o) {
    case Optimizer::gd: return "GD";
    case Optimizer::mgd: return "MGD";
    case Optimizer::agd: return "AGD";
  }
  return "?";
}
inline Optimizer optimizer_from_string(const std::string& s) {
  if (s == "GD") return Optimizer::gd;
  if (s == "MGD") return Optimizer::mgd;
  if (s == "AGD") return Optimizer::agd;
  throw std::runtime_error("unknown optimizer: " + s);
}

inline const char* to_string(DecayModel d) { return d == DecayModel::ed ? "ED" : "NED"; }
inline DecayModel decay_model_from_string(const std::string& s) {
  if (s == "ED") return DecayModel::ed;
  if (s == "NED") return DecayModel::ned;
  throw std::runtime_error("unknown decay model: " + s);
}

// Learning-rate schedules: exponential decay eta c^t and natural exponential
// decay eta e^(-c t); t counts completed decay periods (staircase).
inline double decayed_lr(double eta0, DecayModel model, double c, std::int64_t t) {
  return model == DecayModel::ed ? eta0 * std::pow(c, static_cast<double>(t))
                                 : eta0 * std::exp(-c * static_cast<double>(t));
}

struct TrainingConfig {
  Optimizer optimizer = Optimizer::agd;
  double eta = 1e-3;
  DecayModel decay_model = DecayModel::ed;
  int decay_step = 200;  // optimizer updates per decay period
  double decay_rate = 0.95;
  int batch_size = 256;
  int patience = 50;       // epochs without validation improvement
  double min_delta = 1e-4; // relative improvement below this does not reset the patience
  int max_epochs = 2000;
  std::uint64_t seed = 0;
  double momentum = 0.9;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
};

enum class TrainStatus { completed, early_stopped, diverged };

struct TrainingTrace {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  int best_epoch = -1;
  double best_val_loss = std::numeric_limits<double>::infinity();
  TrainStatus status = TrainStatus::completed;
};

// Per-parameter optimizer state (velocity, Adam moments).
template <class Scalar>
struct OptimizerState {
  using Mat = typename Network<Scalar>::Mat;
  using RowVec = typename Network<Scalar>::RowVec;
  std::vector<Mat> vw, mw, sw;
  std::vector<RowVec> vb, mb, sb;
  std::int64_t step = 0;

  static OptimizerState zeros_like(const Network<Scalar>& net) {
    OptimizerState st;
    for (const auto& layer : net.layers) {
      st.vw.push_back(Mat::Zero(layer.w.rows(), layer.w.cols()));
      st.mw.push_back(Mat::Zero(layer.w.rows(), layer.w.cols()));
      st.sw.push_back(Mat::Zero(layer.w.rows(), layer.w.cols()));
      st.vb.push_back(RowVec::Zero(layer.b.cols()));
      st.mb.push_back(RowVec::Zero(layer.b.cols()));
      st.sb.push_back(RowVec::Zero(layer.b.cols()));
    }
    return st;
  }
};

// One optimizer update. `lr` is the decayed learning rate for this step;
// state.step counts updates from 1 (Adam bias correction).
template <class Scalar, class Param, class Grad, class State>
void apply_update(Param& p, const Grad& g, State& v, State& m, State& s, Optimizer opt, double lr,
                  const TrainingConfig& cfg, std::int64_t step) {
  switch (opt) {
    case Optimizer::gd:
      p -= Scalar(lr) * g;
      break;
    case Optimizer::mgd:
      v = Scalar(cfg.momentum) * v - Scalar(lr) * g;
      p += v;
      break;
    case Optimizer::agd: {
      m = Scalar(cfg.adam_beta1) * m + Scalar(1 - cfg.adam_beta1) * g;
      s = Scalar(cfg.adam_beta2) * s + Scalar(1 - cfg.adam_beta2) * g.cwiseProduct(g);
      const double c1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(step));
      p.array() -= Scalar(lr) * (m.array() / Scalar(c1)) /
                   ((s.array() / Scalar(c2)).sqrt() + Scalar(cfg.adam_eps));
      break;
    }
  }
}

template <class Scalar>
void optimizer_step(Network<Scalar>& net, const Gradients<Scalar>& grads, OptimizerState<Scalar>& state,
                    const TrainingConfig& cfg, double lr) {
  ++state.step;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    apply_update<Scalar>(net.layers[i].w, grads.w[i], state.vw[i], state.mw[i], state.sw[i], cfg.optimizer,
                         lr, cfg, state.step);
    apply_update<Scalar>(net.layers[i].b, grads.b[i], state.vb[i], state.mb[i], state.sb[i], cfg.optimizer,
                         lr, cfg, state.step);
  }
}

template <class Scalar>
struct TrainResult {
  Network<Scalar> model;  // weights of the best validation epoch
  TrainingTrace trace;
};

// Mini-batch training with per-epoch shuffling, staircase learning-rate
// decay, early stopping on the validation MSE, and a divergence guard.
// Inputs are raw-unit features; targets are raw angle pairs, encoded to the
// network's output convention here.
template <class Scalar>
TrainResult<Scalar> train(Network<Scalar> net, const typename Network<Scalar>::Mat& x_train,
                          const typename Network<Scalar>::Mat& y_train_angles,
                          const typename Network<Scalar>::Mat& x_val,
                          const typename Network<Scalar>::Mat& y_val_angles, const TrainingConfig& cfg) {
  using Mat = typename Network<Scalar>::Mat;

  const Mat y_train = net.encode_targets(y_train_angles);
  const Mat y_val = net.encode_targets(y_val_angles);
  const std::int64_t n = x_train.rows();
  const int batch = std::max(1, std::min<int>(cfg.batch_size, static_cast<int>(n)));

  TrainResult<Scalar> result;
  result.model = net;
  TrainingTrace& trace = result.trace;

  OptimizerState<Scalar> state = OptimizerState<Scalar>::zeros_like(net);
  Rng shuffle_rng = Rng(cfg.seed).fork(0x5bfe);
  std::vector<std::int64_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  Gradients<Scalar> grads;
  Mat xb, yb;
  std::int64_t updates = 0;
  int last_meaningful = 0;
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    std::int64_t epoch_batches = 0;
    for (std::int64_t start = 0; start < n; start += batch) {
      const std::int64_t rows = std::min<std::int64_t>(batch, n - start);
      xb.resize(rows, x_train.cols());
      yb.resize(rows, y_train.cols());
      for (std::int64_t i = 0; i < rows; ++i) {
        xb.row(i) = x_train.row(order[start + i]);
        yb.row(i) = y_train.row(order[start + i]);
      }
      const double batch_loss = backward(net, xb, yb, grads);
      const double lr = decayed_lr(cfg.eta, cfg.decay_model, cfg.decay_rate, updates / cfg.decay_step);
      optimizer_step(net, grads, state, cfg, lr);
      ++updates;
      epoch_loss += batch_loss;
      ++epoch_batches;
      if (!std::isfinite(batch_loss)) break;
    }
    epoch_loss /= static_cast<double>(std::max<std::int64_t>(1, epoch_batches));

    const double val = loss<Scalar>(net.forward(x_val), y_val);
    trace.train_loss.push_back(epoch_loss);
    trace.val_loss.push_back(val);

    if (!std::isfinite(epoch_loss) || !std::isfinite(val)) {
      trace.status = TrainStatus::diverged;
      break;
    }
    if (val < trace.best_val_loss) {
      // The patience clock only resets on a meaningful improvement, but the
      // best weights track any improvement at all.
      if (val < trace.best_val_loss * (1.0 - cfg.min_delta)) last_meaningful = epoch;
      trace.best_val_loss = val;
      trace.best_epoch = epoch;
      result.model = net;
    }
    if (epoch - last_meaningful >= cfg.patience) {
      trace.status = TrainStatus::early_stopped;
      break;
    }
  }
  if (trace.best_epoch < 0) trace.status = TrainStatus::diverged;
  return result;
}

// Mean absolute percentage error (percent) with a denominator floor that
// keeps the metric finite where the signed angle crosses zero.
inline double mape(const Eigen::VectorXd& predictions, const Eigen::VectorXd& targets,
                   double floor = 0.1) {
  if (predictions.size() != targets.size() || predictions.size() == 0)
    throw std::invalid_argument("mape: bad shapes");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < targets.size(); ++i)
    acc += std::abs(predictions[i] - targets[i]) / std::max(std::abs(targets[i]), floor);
  return 100.0 * acc / static_cast<double>(targets.size());
}

// Mean absolute error in degrees, reported alongside the angle MAPEs.
inline double mean_abs_error(const Eigen::VectorXd& predictions, const Eigen::VectorXd& targets) {
  return (predictions - targets).cwiseAbs().mean();
}

}  // namespace ltor::nn
