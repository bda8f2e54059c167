#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "ehcs/design.hpp"
#include "ehcs/model.hpp"
#include "ehcs/policy.hpp"
#include "ehcs/sim.hpp"
#include "ehcs/stability.hpp"

namespace ehcs {

inline constexpr const char* kToolVersion = "1.0.0";

/// Malformed config; the message starts with the JSON field path,
/// e.g. "channel.lambda: missing".
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ProblemConfig {
  EhcsSpec spec;
  InitialCondition initial;
};

/// Parses the problem schema (plant, channel, source, battery_capacity,
/// disturbance, optional initial). Structural problems throw ConfigError;
/// semantic checks are left to validate_ehcs.
ProblemConfig parse_config(const nlohmann::json& doc);
ProblemConfig parse_config_text(const std::string& text);

/// Checks the initial condition against a validated system; throws
/// ConfigError with an "initial.*" path.
void check_initial(const InitialCondition& init, const ValidatedEhcs& ehcs);

/// 64-bit FNV-1a of the canonical (sorted-key, compact) JSON, as 16 hex digits.
std::string config_hash(const nlohmann::json& doc);
std::uint64_t fnv1a64(const std::string& bytes);

/// Policy file: {"battery_capacity", "num_latent", "num_energy_levels",
/// "rules": [{"battery", "latent", "history", "distribution": [...]}, ...]}.
/// Cells without a rule stay zero and fail validation.
nlohmann::json policy_to_json(const TransmissionPolicy& policy);
TransmissionPolicy policy_from_json(const nlohmann::json& doc);

/// {rho, verdict, alpha, xi, M, slack, iterations, ...}; the decay constants
/// are null unless the verdict is stable.
nlohmann::json report_to_json(const StabilityReport& report);
nlohmann::json capacity_to_json(const CriticalCapacityResult& result);
nlohmann::json dwell_search_to_json(const DwellSearchResult& result);
nlohmann::json dwell_table_to_json(const DwellProbTable& table);
nlohmann::json split_grid_to_json(const std::vector<PolicySplitEntry>& grid);

}  // namespace ehcs
