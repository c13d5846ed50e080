#pragma once

#include <filesystem>

#include "json.hpp"
#include "xyep/core.hpp"

namespace xyep {

// Checkpoint document (JSON):
//
//   {
//     "format": "xyep-checkpoint",
//     "version": 1,
//     "topology": {"kind": "all_to_all", "n_inputs": 2, "n_hidden": 2, "n_outputs": 1}
//              or {"kind": "layered", "layer_sizes": [64, 20, 10]},
//     "roles": ["input", ..., "hidden", ..., "output", ...],
//     "weights": [[i, j, W_ij], ...],          // i < j, in connectivity order
//     "biases": [[unit, h, psi], ...],         // non-input units, psi in [-pi, pi)
//     "metadata": {...}                        // free-form, optional
//   }
//
// Doubles are written in shortest round-trip form, so save/load is exact.
inline constexpr const char* kCheckpointFormat = "xyep-checkpoint";
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  NetworkTopology topology;
  ModelParameters params;
  nlohmann::json metadata;
};

nlohmann::json topology_to_json(const NetworkTopology& topology);
NetworkTopology topology_from_json(const nlohmann::json& descriptor);

nlohmann::json checkpoint_to_json(const NetworkTopology& topology, const ModelParameters& params,
                                  const nlohmann::json& metadata = nlohmann::json::object());
Checkpoint checkpoint_from_json(const nlohmann::json& doc);

void save_checkpoint(const std::filesystem::path& path, const NetworkTopology& topology,
                     const ModelParameters& params,
                     const nlohmann::json& metadata = nlohmann::json::object());
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace xyep
