#pragma once

#include <filesystem>
#include <optional>

#include "ltor/indirect.hpp"
#include "ltor/nn/network.hpp"
#include "ltor/scenario.hpp"

namespace ltor {

// Figure-ready control-angle history: true longitude folded to [0, 360),
// true anomaly likewise, revolution index, and the optimal angles; when a
// model is supplied, its predictions on the same states are appended.
void write_control_angle_table(const std::filesystem::path& path, const TransferSolution& sol,
                               const SpacecraftScenario& scenario,
                               const nn::Network<float>* model = nullptr, int n_nodes = 20000);

}  // namespace ltor
