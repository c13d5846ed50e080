#include "xyep/checkpoint.hpp"

#include <cmath>
#include <fstream>

namespace xyep {

using nlohmann::json;

json topology_to_json(const NetworkTopology& topology) {
  if (topology.kind() == TopologyKind::Layered) {
    return {{"kind", "layered"}, {"layer_sizes", topology.layer_sizes()}};
  }
  return {{"kind", "all_to_all"},
          {"n_inputs", topology.n_inputs()},
          {"n_hidden", topology.n_hidden()},
          {"n_outputs", topology.n_outputs()}};
}

NetworkTopology topology_from_json(const json& descriptor) {
  try {
    const auto kind = descriptor.at("kind").get<std::string>();
    if (kind == "layered") {
      return NetworkTopology::make_layered(descriptor.at("layer_sizes").get<std::vector<int>>());
    }
    if (kind == "all_to_all") {
      return NetworkTopology::make_all_to_all(descriptor.at("n_inputs").get<int>(),
                                              descriptor.at("n_hidden").get<int>(),
                                              descriptor.at("n_outputs").get<int>());
    }
    throw ValidationError("unknown topology kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad topology descriptor: ") + e.what());
  }
}

json checkpoint_to_json(const NetworkTopology& topology, const ModelParameters& params,
                        const json& metadata) {
  if (!params.matches(topology)) throw ContractViolation("parameters do not match topology");

  json roles = json::array();
  for (auto role : topology.roles()) roles.push_back(to_string(role));

  json weights = json::array();
  const auto pairs = topology.pairs();
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    weights.push_back({pairs[k].i, pairs[k].j, params.weights[static_cast<Eigen::Index>(k)]});
  }

  json biases = json::array();
  for (int b = 0; b < topology.n_free(); ++b) {
    biases.push_back({b + topology.n_inputs(), params.bias_strengths[b], wrap_angle(params.bias_angles[b])});
  }

  return {{"format", kCheckpointFormat}, {"version", kCheckpointVersion},
          {"topology", topology_to_json(topology)}, {"roles", roles},
          {"weights", weights}, {"biases", biases}, {"metadata", metadata}};
}

Checkpoint checkpoint_from_json(const json& doc) {
  try {
    if (doc.at("format").get<std::string>() != kCheckpointFormat) {
      throw ValidationError("not an xyep checkpoint");
    }
    if (doc.at("version").get<int>() != kCheckpointVersion) {
      throw ValidationError("unsupported checkpoint version");
    }
    auto topology = topology_from_json(doc.at("topology"));

    const auto& roles = doc.at("roles");
    if (roles.size() != static_cast<std::size_t>(topology.n_units())) {
      throw ValidationError("role list length does not match topology");
    }
    for (int u = 0; u < topology.n_units(); ++u) {
      if (role_from_string(roles[static_cast<std::size_t>(u)].get<std::string>()) != topology.role(u)) {
        throw ValidationError("role of unit " + std::to_string(u) + " does not match topology");
      }
    }

    auto params = ModelParameters::zeros(topology);
    const auto& weights = doc.at("weights");
    if (weights.size() != topology.pairs().size()) {
      throw ValidationError("weight list length does not match topology");
    }
    std::vector<bool> seen(topology.pairs().size(), false);
    for (const auto& entry : weights) {
      const int i = entry.at(0).get<int>();
      const int j = entry.at(1).get<int>();
      if (i >= j) throw ValidationError("weight entries must have i < j");
      const auto k = topology.pair_index(i, j);
      if (!k) {
        throw ValidationError("weight (" + std::to_string(i) + ", " + std::to_string(j) +
                              ") is not in the topology");
      }
      if (seen[*k]) throw ValidationError("duplicate weight entry");
      seen[*k] = true;
      const double w = entry.at(2).get<double>();
      if (!std::isfinite(w)) throw ValidationError("non-finite weight");
      params.weights[static_cast<Eigen::Index>(*k)] = w;
    }

    const auto& biases = doc.at("biases");
    if (biases.size() != static_cast<std::size_t>(topology.n_free())) {
      throw ValidationError("bias list length does not match topology");
    }
    std::vector<bool> bias_seen(static_cast<std::size_t>(topology.n_free()), false);
    for (const auto& entry : biases) {
      const int unit = entry.at(0).get<int>();
      const int b = unit - topology.n_inputs();
      if (b < 0 || b >= topology.n_free()) {
        throw ValidationError("bias for unit " + std::to_string(unit) + " is not allowed");
      }
      if (bias_seen[static_cast<std::size_t>(b)]) throw ValidationError("duplicate bias entry");
      bias_seen[static_cast<std::size_t>(b)] = true;
      const double h = entry.at(1).get<double>();
      const double psi = entry.at(2).get<double>();
      if (!std::isfinite(h) || !std::isfinite(psi)) throw ValidationError("non-finite bias");
      params.bias_strengths[b] = h;
      params.bias_angles[b] = psi;
    }

    json metadata = doc.contains("metadata") ? doc.at("metadata") : json::object();
    return Checkpoint{std::move(topology), std::move(params), std::move(metadata)};
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const NetworkTopology& topology,
                     const ModelParameters& params, const json& metadata) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << checkpoint_to_json(topology, params, metadata).dump(1) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open checkpoint " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("checkpoint " + path.string() + " is not valid JSON: " + e.what());
  }
  return checkpoint_from_json(doc);
}

}  // namespace xyep
