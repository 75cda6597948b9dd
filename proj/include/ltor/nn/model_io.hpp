#pragma once

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "ltor/nn/network.hpp"

namespace ltor::nn {

// Model files are JSON: architecture, activation, feature form, output
// convention, normalization statistics and row-major weights. Values
// round-trip bit-exactly (shortest-representation doubles).
template <class Scalar>
nlohmann::json to_json(const Network<Scalar>& net) {
  nlohmann::json j;
  j["artifact"] = "network_model";
  j["activation"] = to_string(net.activation);
  j["output"] = to_string(net.output);
  j["feature_form"] = to_string(net.form);
  j["norm_mean"] = std::vector<double>(net.norm_mean.data(), net.norm_mean.data() + net.norm_mean.size());
  j["norm_std"] = std::vector<double>(net.norm_std.data(), net.norm_std.data() + net.norm_std.size());
  j["layers"] = nlohmann::json::array();
  for (const auto& layer : net.layers) {
    nlohmann::json lj;
    lj["in"] = layer.w.rows();
    lj["out"] = layer.w.cols();
    std::vector<double> w;
    w.reserve(layer.w.size());
    for (Eigen::Index r = 0; r < layer.w.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.w.cols(); ++c) w.push_back(double(layer.w(r, c)));
    lj["w"] = std::move(w);
    std::vector<double> b(layer.b.size());
    for (Eigen::Index c = 0; c < layer.b.cols(); ++c) b[c] = double(layer.b(c));
    lj["b"] = std::move(b);
    j["layers"].push_back(std::move(lj));
  }
  return j;
}

template <class Scalar>
Network<Scalar> network_from_json(const nlohmann::json& j) {
  Network<Scalar> net;
  net.activation = activation_from_string(j.at("activation").get<std::string>());
  net.output = output_convention_from_string(j.at("output").get<std::string>());
  net.form = feature_form_from_string(j.at("feature_form").get<std::string>());
  const auto mean = j.at("norm_mean").get<std::vector<double>>();
  const auto stddev = j.at("norm_std").get<std::vector<double>>();
  net.norm_mean.resize(static_cast<Eigen::Index>(mean.size()));
  net.norm_std.resize(static_cast<Eigen::Index>(stddev.size()));
  for (std::size_t i = 0; i < mean.size(); ++i) {
    net.norm_mean(static_cast<Eigen::Index>(i)) = Scalar(mean[i]);
    net.norm_std(static_cast<Eigen::Index>(i)) = Scalar(stddev[i]);
  }
  for (const auto& lj : j.at("layers")) {
    typename Network<Scalar>::Layer layer;
    const auto rows = lj.at("in").get<Eigen::Index>();
    const auto cols = lj.at("out").get<Eigen::Index>();
    const auto w = lj.at("w").get<std::vector<double>>();
    const auto b = lj.at("b").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(w.size()) != rows * cols ||
        static_cast<Eigen::Index>(b.size()) != cols)
      throw std::runtime_error("model file: inconsistent layer shapes");
    layer.w.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) layer.w(r, c) = Scalar(w[r * cols + c]);
    layer.b.resize(cols);
    for (Eigen::Index c = 0; c < cols; ++c) layer.b(c) = Scalar(b[c]);
    net.layers.push_back(std::move(layer));
  }
  if (net.layers.empty()) throw std::runtime_error("model file: no layers");
  return net;
}

template <class Scalar>
void save_model(const std::filesystem::path& path, const Network<Scalar>& net,
                const nlohmann::json& extra_metadata = {}) {
  nlohmann::json j = to_json(net);
  if (!extra_metadata.is_null())
    for (const auto& [key, value] : extra_metadata.items()) j[key] = value;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file: " + path.string());
  out << j.dump(2) << "\n";
}

template <class Scalar>
Network<Scalar> load_model(const std::filesystem::path& path, nlohmann::json* metadata = nullptr) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file: " + path.string());
  nlohmann::json j;
  in >> j;
  if (metadata) *metadata = j;
  return network_from_json<Scalar>(j);
}

}  // namespace ltor::nn
