#pragma once

#include <string>

#include <json.hpp>

#include "rankrobust/net/mlp.hpp"

namespace rankrobust {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  Mlp model;
  nlohmann::json extra = nlohmann::json::object();  // spec snapshot, selection metadata
};

/// Weights are stored row-major per layer. Doubles are written with
/// shortest round-trip formatting, so load(save(m)) is bit-exact.
nlohmann::json checkpoint_to_json(const Mlp& m, const nlohmann::json& extra = nlohmann::json::object());
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const std::string& path, const Mlp& m,
                     const nlohmann::json& extra = nlohmann::json::object());
Checkpoint load_checkpoint(const std::string& path);

}  // namespace rankrobust
