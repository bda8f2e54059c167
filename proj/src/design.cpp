#include "ehcs/design.hpp"

#include <algorithm>
#include <stdexcept>

#include "ehcs/embedding.hpp"

namespace ehcs {

std::string to_string(Stabilizability s) {
  switch (s) {
    case Stabilizability::stabilizable:
      return "stabilizable";
    case Stabilizability::not_stabilizable:
      return "not_stabilizable";
    case Stabilizability::marginal:
      return "marginal";
  }
  return "marginal";
}

Stabilizability scalar_stabilizability(const ValidatedEhcs& ehcs,
                                       const CertifyOptions& options) {
  if (ehcs.dim() != 1) {
    throw std::invalid_argument("scalar_stabilizability: plant must be scalar");
  }
  switch (certify(ehcs, greedy_policy(ehcs), options).verdict) {
    case Verdict::stable:
      return Stabilizability::stabilizable;
    case Verdict::unstable:
      return Stabilizability::not_stabilizable;
    case Verdict::marginal:
      return Stabilizability::marginal;
  }
  return Stabilizability::marginal;
}

CriticalCapacityResult critical_battery_capacity(const ValidatedEhcs& ehcs, int b_max,
                                                 bool full_scan,
                                                 const CertifyOptions& options) {
  if (ehcs.dim() != 1) {
    throw std::invalid_argument("critical_battery_capacity: plant must be scalar");
  }
  if (b_max < 0) throw std::invalid_argument("critical_battery_capacity: b_max must be >= 0");

  CriticalCapacityResult result;
  result.b_max = b_max;
  for (int cap = 0; cap <= b_max; ++cap) {
    const auto sys = with_battery_capacity(ehcs, cap);
    const auto report = certify(sys, greedy_policy(sys), options);
    result.scan.push_back({cap, report.rho, report.verdict});
    if (report.verdict == Verdict::stable && !result.critical) {
      result.critical = cap;
      if (!full_scan) break;
    }
  }
  return result;
}

std::vector<DwellCandidate> dwell_intervals(const ValidatedEhcs& ehcs,
                                            const DwellProbTable& phi) {
  std::vector<double> values;
  for (int b = 0; b <= ehcs.battery_capacity(); ++b) {
    for (int l = 0; l < ehcs.num_latent(); ++l) {
      if (b + ehcs.source().energy(l) >= ehcs.tx_threshold()) values.push_back(phi(b, l));
    }
  }
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());

  std::vector<DwellCandidate> out;
  if (values.empty()) {
    // Nothing is ever feasible: every p gives the idle policy.
    out.push_back({phi.k, 0.0, 1.0, true, 0.5});
    return out;
  }
  out.push_back({phi.k, 0.0, values.front(), true, values.front()});
  for (std::size_t i = 1; i < values.size(); ++i) {
    out.push_back({phi.k, values[i - 1], values[i], false, values[i]});
  }
  if (values.back() < 1.0) {
    out.push_back({phi.k, values.back(), 1.0, false, 0.5 * (values.back() + 1.0)});
  }
  return out;
}

DwellSearchResult search_dwell_policies(const ValidatedEhcs& ehcs, int k_max,
                                        const CertifyOptions& options) {
  if (k_max < 1) throw std::invalid_argument("search_dwell_policies: k_max must be >= 1");
  DwellSearchResult result;
  for (int k = 1; k <= k_max; ++k) {
    const auto phi = dwell_probabilities(ehcs, k);
    for (auto cand : dwell_intervals(ehcs, phi)) {
      const auto report = certify(ehcs, build_dwell_policy(ehcs, phi, cand.p), options);
      cand.rho = report.rho;
      cand.verdict = report.verdict;
      if (cand.verdict == Verdict::stable && !result.first_stable) {
        result.first_stable = result.candidates.size();
      }
      result.candidates.push_back(cand);
    }
  }
  return result;
}

std::vector<PolicySplitEntry> policy_split_grid(const EhcsSpec& spec,
                                                const std::vector<int>& thresholds,
                                                const std::vector<int>& capacities, int k,
                                                double p, const CertifyOptions& options) {
  std::vector<PolicySplitEntry> out;
  for (int ebar : thresholds) {
    for (int cap : capacities) {
      EhcsSpec s = spec;
      s.channel.tx_threshold = ebar;
      s.battery_capacity = cap;
      std::optional<ValidatedEhcs> sys;
      try {
        sys.emplace(validate_ehcs(s));
      } catch (const ValidationError&) {
        continue;
      }
      const auto g = certify(*sys, greedy_policy(*sys), options);
      const auto d = certify(*sys, build_dwell_policy(*sys, k, p), options);
      out.push_back({ebar, cap, g.rho, g.verdict, d.rho, d.verdict});
    }
  }
  return out;
}

}  // namespace ehcs
