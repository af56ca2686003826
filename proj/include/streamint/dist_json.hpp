#pragma once

#include <filesystem>
#include <json.hpp>
#include <vector>

#include "streamint/distributions.hpp"

namespace streamint {

/// {"type":"erlang","lambda":..,"k":..}
/// {"type":"hyper_erlang","branches":[{"alpha":..,"lambda":..,"k":..},...]}
/// {"type":"ph","alpha":[..],"T":[[..],..]}
/// {"type":"point","value":..}
nlohmann::json to_json(const Distribution& d);

/// PH documents are returned exactly as written; run validate_generator()
/// (or load_distribution with a policy) before sampling from them.
Distribution distribution_from_json(const nlohmann::json& j);

/// Reads a distribution file and, for PH documents, applies the repair policy.
/// Any repair entries are appended to `repairs`.
Distribution load_distribution(const std::filesystem::path& path, RepairPolicy policy,
                               std::vector<RepairEntry>* repairs = nullptr);

Distribution validated(const Distribution& d, RepairPolicy policy, std::vector<RepairEntry>* repairs = nullptr);

nlohmann::json to_json(const RepairEntry& e);

}  // namespace streamint
