#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ltor/features.hpp"
#include "ltor/rng.hpp"

namespace ltor::nn {

enum class Activation { sig, tanh_fn, relu };
enum class OutputConvention { direct_angles, trig_encoded };
enum class Initializer { fan_in, fan_avg };

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::sig: return "sig";
    case Activation::tanh_fn: return "tanh";
    case Activation::relu: return "relu";
  }
  return "?";
}
inline Activation activation_from_string(const std::string& s) {
  if (s == "sig" || s == "sigmoid") return Activation::sig;
  if (s == "tanh") return Activation::tanh_fn;
  if (s == "relu") return Activation::relu;
  throw std::runtime_error("unknown activation: " + s);
}

inline const char* to_string(OutputConvention c) {
  return c == OutputConvention::direct_angles ? "direct-angles" : "trig-encoded";
}
inline OutputConvention output_convention_from_string(const std::string& s) {
  if (s == "direct-angles") return OutputConvention::direct_angles;
  if (s == "trig-encoded") return OutputConvention::trig_encoded;
  throw std::runtime_error("unknown output convention: " + s);
}

inline const char* to_string(Initializer i) { return i == Initializer::fan_in ? "Fan_in" : "Fan_avg"; }
inline Initializer initializer_from_string(const std::string& s) {
  if (s == "Fan_in") return Initializer::fan_in;
  if (s == "Fan_avg") return Initializer::fan_avg;
  throw std::runtime_error("unknown initializer: " + s);
}

// Initializer scales: Fan_in sqrt(2/in), Fan_avg sqrt(6/(in+out)). Both are
// used as the target standard deviation of the draw.
inline double initializer_scale(Initializer kind, int fan_in, int fan_out) {
  return kind == Initializer::fan_in ? std::sqrt(2.0 / fan_in) : std::sqrt(6.0 / (fan_in + fan_out));
}

template <class Scalar>
Scalar activate(Scalar x, Activation kind) {
  switch (kind) {
    case Activation::sig: return Scalar(1) / (Scalar(1) + std::exp(-x));
    case Activation::tanh_fn: return std::tanh(x);
    case Activation::relu: return x > Scalar(0) ? x : Scalar(0);
  }
  return Scalar(0);
}

// Derivative expressed through the activation value a = f(x).
template <class Scalar>
Scalar activate_grad_from_value(Scalar a, Activation kind) {
  switch (kind) {
    case Activation::sig: return a * (Scalar(1) - a);
    case Activation::tanh_fn: return Scalar(1) - a * a;
    case Activation::relu: return a > Scalar(0) ? Scalar(1) : Scalar(0);
  }
  return Scalar(0);
}

// Feed-forward regression network: input normalization, identical hidden
// layers with one activation, linear output. Output is either the two
// control angles in degrees or (cos a, sin a, beta_deg).
template <class Scalar>
struct Network {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

  struct Layer {
    Mat w;      // in x out
    RowVec b;   // 1 x out
  };

  std::vector<Layer> layers;
  Activation activation = Activation::tanh_fn;
  OutputConvention output = OutputConvention::direct_angles;
  FeatureForm form = FeatureForm::eci;
  RowVec norm_mean;  // input normalization, frozen at training time
  RowVec norm_std;

  int input_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.front().w.rows()); }
  int output_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.back().w.cols()); }
  int target_dim() const { return output == OutputConvention::direct_angles ? 2 : 3; }

  std::int64_t parameter_count() const {
    std::int64_t n = 0;
    for (const auto& l : layers) n += l.w.size() + l.b.size();
    return n;
  }

  Mat normalize(const Mat& x_raw) const {
    if (x_raw.cols() != norm_mean.cols())
      throw std::invalid_argument("network: input dimension mismatch");
    return (x_raw.rowwise() - norm_mean).array().rowwise() / norm_std.array();
  }

  // Raw (pre-decode) outputs for a batch of raw-unit inputs.
  Mat forward(const Mat& x_raw) const {
    Mat h = normalize(x_raw);
    for (std::size_t i = 0; i < layers.size(); ++i) {
      h = (h * layers[i].w).rowwise() + layers[i].b;
      if (i + 1 < layers.size())
        h = h.unaryExpr([this](Scalar v) { return activate(v, activation); });
    }
    return h;
  }

  // Decoded (alpha_deg in [0, 360), beta_deg) predictions.
  Mat predict_angles(const Mat& x_raw) const {
    const Mat raw = forward(x_raw);
    if (output == OutputConvention::direct_angles) return raw;
    Mat angles(raw.rows(), 2);
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
      const double a = rad_to_deg(wrap_two_pi(std::atan2(double(raw(i, 1)), double(raw(i, 0)))));
      angles(i, 0) = Scalar(a);
      angles(i, 1) = raw(i, 2);
    }
    return angles;
  }

  // Angle targets (alpha_deg, beta_deg) converted to the training target
  // space of this output convention.
  Mat encode_targets(const Mat& angles) const {
    if (output == OutputConvention::direct_angles) return angles;
    Mat t(angles.rows(), 3);
    for (Eigen::Index i = 0; i < angles.rows(); ++i) {
      const double a = deg_to_rad(double(angles(i, 0)));
      t(i, 0) = Scalar(std::cos(a));
      t(i, 1) = Scalar(std::sin(a));
      t(i, 2) = angles(i, 1);
    }
    return t;
  }
};

// Builds a network with `n_layer` hidden layers of `n_neuron` units.
// Weight draws use the initializer scale as the standard deviation: normal
// for Fan_in, uniform (+-sqrt(3) sigma) for Fan_avg. Biases start at zero.
template <class Scalar>
Network<Scalar> make_network(int n_layer, int n_neuron, Activation act, Initializer init,
                             OutputConvention out_conv, FeatureForm form, Rng& rng) {
  if (n_layer < 1 || n_neuron < 1) throw std::invalid_argument("make_network: bad architecture");
  Network<Scalar> net;
  net.activation = act;
  net.output = out_conv;
  net.form = form;
  net.norm_mean = Network<Scalar>::RowVec::Zero(kFeatureDim);
  net.norm_std = Network<Scalar>::RowVec::Ones(kFeatureDim);

  std::vector<int> dims;
  dims.push_back(kFeatureDim);
  for (int i = 0; i < n_layer; ++i) dims.push_back(n_neuron);
  dims.push_back(out_conv == OutputConvention::direct_angles ? 2 : 3);

  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    typename Network<Scalar>::Layer layer;
    layer.w.resize(dims[i], dims[i + 1]);
    layer.b = Network<Scalar>::RowVec::Zero(dims[i + 1]);
    const double scale = initializer_scale(init, dims[i], dims[i + 1]);
    for (Eigen::Index r = 0; r < layer.w.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.w.cols(); ++c)
        layer.w(r, c) = Scalar(init == Initializer::fan_in
                                   ? rng.normal(0.0, scale)
                                   : rng.uniform(-scale * std::sqrt(3.0), scale * std::sqrt(3.0)));
    net.layers.push_back(std::move(layer));
  }
  return net;
}

// Mean squared error over all elements.
template <class Scalar>
double loss(const typename Network<Scalar>::Mat& predictions, const typename Network<Scalar>::Mat& targets) {
  if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols())
    throw std::invalid_argument("loss: shape mismatch");
  if (predictions.rows() == 0) throw std::invalid_argument("loss: empty batch");
  return (predictions - targets).squaredNorm() / static_cast<double>(predictions.size());
}

template <class Scalar>
struct Gradients {
  std::vector<typename Network<Scalar>::Mat> w;
  std::vector<typename Network<Scalar>::RowVec> b;
};

// Backpropagation of the mean-squared-error loss on a batch of raw inputs
// and encoded targets. Returns the loss.
template <class Scalar>
double backward(const Network<Scalar>& net, const typename Network<Scalar>::Mat& x_raw,
                const typename Network<Scalar>::Mat& targets, Gradients<Scalar>& grads) {
  using Mat = typename Network<Scalar>::Mat;
  const std::size_t n_layers = net.layers.size();

  std::vector<Mat> acts(n_layers + 1);
  acts[0] = net.normalize(x_raw);
  for (std::size_t i = 0; i < n_layers; ++i) {
    acts[i + 1] = (acts[i] * net.layers[i].w).rowwise() + net.layers[i].b;
    if (i + 1 < n_layers)
      acts[i + 1] = acts[i + 1].unaryExpr([&net](Scalar v) { return activate(v, net.activation); });
  }

  const Mat diff = acts[n_layers] - targets;
  const double value = diff.squaredNorm() / static_cast<double>(diff.size());

  grads.w.resize(n_layers);
  grads.b.resize(n_layers);
  Mat delta = (Scalar(2) / Scalar(diff.size())) * diff;
  for (std::size_t i = n_layers; i-- > 0;) {
    grads.w[i].noalias() = acts[i].transpose() * delta;
    grads.b[i] = delta.colwise().sum();
    if (i > 0) {
      delta = delta * net.layers[i].w.transpose();
      delta.array() *=
          acts[i].unaryExpr([&net](Scalar a) { return activate_grad_from_value(a, net.activation); }).array();
    }
  }
  return value;
}

}  // namespace ltor::nn
