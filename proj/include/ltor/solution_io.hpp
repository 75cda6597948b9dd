#pragma once

#include <cstdint>
#include <filesystem>

#include "ltor/indirect.hpp"
#include "ltor/scenario.hpp"

namespace ltor {

// Converged-solution persistence: a key/value header (initial costates in
// canonical units, t_f in days, residual, revolution count) followed by a
// trajectory dump, one row per output node, km / kg / degrees at the
// interface with lambda columns appended.
struct SolutionHeader {
  Costate lam0;
  double tf_days = 0.0;
  double residual_norm = 0.0;
  int revolutions = 0;
  double thrust_n = 0.0;
  std::string scenario_hash;
  std::uint64_t seed = 0;
};

void save_solution(const std::filesystem::path& path, const TransferSolution& sol,
                   const SpacecraftScenario& scenario, std::uint64_t seed, int n_nodes = 2001);

SolutionHeader load_solution_header(const std::filesystem::path& path);

// Rebuilds the dense solution from a saved header by re-propagating; the
// header must match the scenario (config hash check).
TransferSolution reload_solution(const SolutionHeader& header, const SpacecraftScenario& scenario);

}  // namespace ltor
