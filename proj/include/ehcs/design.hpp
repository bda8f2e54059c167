#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ehcs/model.hpp"
#include "ehcs/policy.hpp"
#include "ehcs/stability.hpp"

namespace ehcs {

enum class Stabilizability { stabilizable, not_stabilizable, marginal };

std::string to_string(Stabilizability s);

/// For scalar plants greedy is a complete test: the system is stabilizable
/// by some causal policy iff it is stable under greedy.
/// Throws std::invalid_argument when the plant is not scalar.
Stabilizability scalar_stabilizability(const ValidatedEhcs& ehcs,
                                       const CertifyOptions& options = {});

struct BatteryScanEntry {
  int capacity = 0;
  double rho = 0.0;
  Verdict verdict = Verdict::marginal;
};

struct CriticalCapacityResult {
  std::optional<int> critical;  // empty: none up to b_max
  int b_max = 0;
  std::vector<BatteryScanEntry> scan;
};

/// Linear scan B_cap = 0..b_max certifying greedy at each capacity. The
/// battery capacity of `ehcs` is ignored. With `full_scan` the scan continues
/// past the first stable capacity so non-monotone behaviour stays visible.
/// Throws std::invalid_argument for a non-scalar plant or b_max < 0.
CriticalCapacityResult critical_battery_capacity(const ValidatedEhcs& ehcs, int b_max = 64,
                                                 bool full_scan = false,
                                                 const CertifyOptions& options = {});

/// A p-range that induces one dwell policy for a given k. The range is
/// (p_low, p_high], or [0, p_high] when `closed_low` is set.
struct DwellCandidate {
  int k = 1;
  double p_low = 0.0;
  double p_high = 0.0;
  bool closed_low = false;
  double p = 0.0;  // representative that was certified
  double rho = 0.0;
  Verdict verdict = Verdict::marginal;
};

struct DwellSearchResult {
  std::vector<DwellCandidate> candidates;
  std::optional<std::size_t> first_stable;  // index into candidates
};

/// p-ranges for a dwell table: the distinct phi values v_1 < ... < v_m over
/// feasible states cut [0, 1] into [0, v_1], (v_1, v_2], ..., (v_m, 1].
/// Empty ranges are dropped. Representatives are the right end points,
/// except the midpoint for the last range.
std::vector<DwellCandidate> dwell_intervals(const ValidatedEhcs& ehcs,
                                            const DwellProbTable& phi);

/// Certifies one representative dwell policy per p-range for k = 1..k_max.
/// Throws std::invalid_argument for k_max < 1.
DwellSearchResult search_dwell_policies(const ValidatedEhcs& ehcs, int k_max,
                                        const CertifyOptions& options = {});

struct PolicySplitEntry {
  int tx_threshold = 1;
  int battery_capacity = 0;
  double greedy_rho = 0.0;
  Verdict greedy = Verdict::marginal;
  double dwell_rho = 0.0;
  Verdict dwell = Verdict::marginal;

  /// Dwell stabilizes where greedy does not.
  bool split() const { return dwell == Verdict::stable && greedy == Verdict::unstable; }
};

/// Certifies greedy and dwell(k, p) on every (ebar, B_cap) pair of the grid.
/// The system's own ebar and B_cap are replaced; pairs that fail validation are
/// skipped.
std::vector<PolicySplitEntry> policy_split_grid(const EhcsSpec& spec,
                                                const std::vector<int>& thresholds,
                                                const std::vector<int>& capacities, int k,
                                                double p, const CertifyOptions& options = {});

}  // namespace ehcs
