#include "prob/checkpoint.hpp"

#include "prob/error.hpp"
#include "prob/io.hpp"

namespace prob {

using nlohmann::json;

void to_json(json& j, const GaussianState& g) {
  j = json{{"mu", g.mu}, {"sigma", g.sigma}, {"momentum", g.momentum}, {"eps", g.eps}};
}

void from_json(const json& j, GaussianState& g) {
  g.mu = j.at("mu").get<Vec>();
  g.sigma = j.at("sigma").get<Vec>();
  g.momentum = j.at("momentum").get<double>();
  g.eps = j.at("eps").get<double>();
}

json checkpoint_to_json(const Checkpoint& ck) {
  return json{{"schema_version", kCheckpointSchemaVersion},
              {"config_version", kConfigVersion},
              {"seed", ck.seed},
              {"task", ck.state.task},
              {"step", ck.state.steps},
              {"config", ck.config},
              {"params", ck.state.params},
              {"gaussian", ck.state.gaussian}};
}

Checkpoint checkpoint_from_json(const json& j) {
  try {
    const int schema = j.at("schema_version").get<int>();
    if (schema != kCheckpointSchemaVersion) {
      throw LoadError("checkpoint schema_version " + std::to_string(schema) + " is not supported (expected " +
                      std::to_string(kCheckpointSchemaVersion) + ")");
    }
    const int config_version = j.at("config_version").get<int>();
    if (config_version != kConfigVersion) {
      throw LoadError("checkpoint config_version " + std::to_string(config_version) + " does not match " +
                      std::to_string(kConfigVersion));
    }
    Checkpoint ck;
    ck.seed = j.at("seed").get<std::uint64_t>();
    ck.state.task = j.at("task").get<int>();
    ck.state.steps = j.at("step").get<std::int64_t>();
    ck.config = j.at("config").get<BenchmarkConfig>();
    ck.state.params = j.at("params").get<DetectorParams>();
    ck.state.gaussian = j.at("gaussian").get<GaussianState>();
    ck.state.gaussian.validate();
    if (ck.state.gaussian.dim() != ck.state.params.embed_dim()) {
      throw LoadError("checkpoint gaussian width does not match the detector");
    }
    return ck;
  } catch (const json::exception& e) {
    throw LoadError(std::string("malformed checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw LoadError(std::string("checkpoint config: ") + e.what());
  } catch (const DomainError& e) {
    throw LoadError(std::string("checkpoint: ") + e.what());
  }
}

std::string serialize_checkpoint(const Checkpoint& ck) { return checkpoint_to_json(ck).dump(1) + "\n"; }

Checkpoint parse_checkpoint(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw LoadError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  return checkpoint_from_json(j);
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) { write_file_atomic(path, serialize_checkpoint(ck)); }

Checkpoint load_checkpoint(const std::string& path) { return parse_checkpoint(read_file(path)); }

}  // namespace prob
