#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "prob/protocol.hpp"

namespace prob {

inline constexpr int kCheckpointSchemaVersion = 1;

struct Checkpoint {
  ModelState state;
  BenchmarkConfig config;  // echo of the run configuration
  std::uint64_t seed = 0;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

nlohmann::json checkpoint_to_json(const Checkpoint& ck);
/// Throws LoadError on a schema or config version mismatch or bad shapes.
Checkpoint checkpoint_from_json(const nlohmann::json& j);

std::string serialize_checkpoint(const Checkpoint& ck);
Checkpoint parse_checkpoint(const std::string& text);

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

void to_json(nlohmann::json& j, const GaussianState& g);
void from_json(const nlohmann::json& j, GaussianState& g);

}  // namespace prob
