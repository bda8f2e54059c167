#pragma once

#include <cstdint>
#include <ostream>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "ehcs/model.hpp"
#include "ehcs/policy.hpp"

namespace ehcs {

/// Independent random streams of one run.
enum class StreamTag : std::uint32_t { latent = 1, policy = 2, channel = 3, disturbance = 4 };

/// Deterministic generator for (master_seed, run_index, tag).
std::mt19937_64 make_stream(std::uint64_t master_seed, std::uint64_t run_index, StreamTag tag);

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Randomness of one run, shared by every policy simulated on it.
struct SamplePath {
  std::vector<int> latent_path;        // l(0..horizon)
  std::vector<double> policy_draws;    // one uniform per slot
  std::vector<std::uint8_t> channel_draws;  // success bit per attempt number
  std::uint64_t master_seed = 0;
  std::uint64_t run_index = 0;

  int horizon() const { return static_cast<int>(policy_draws.size()); }
};

/// Draws the latent, policy and channel streams for one run. The latent path
/// starts at `initial_latent`. Throws std::invalid_argument for horizon < 1.
SamplePath draw_sample_path(std::uint64_t master_seed, std::uint64_t run_index,
                            int horizon, const HarvestSource& source,
                            double success_prob, int initial_latent = 0);

/// Initial plant and sensor state. `latent` seeds the latent path in
/// monte_carlo; simulate reads l(0) from the path itself.
struct InitialCondition {
  Eigen::VectorXd x0;
  int battery = 0;
  int latent = 0;
  int history = 0;
};

struct Trajectory {
  std::vector<Eigen::VectorXd> x;  // x(0..T)
  std::vector<int> battery;        // b(0..T)
  std::vector<int> latent;         // l(0..T)
  std::vector<int> loop;           // gamma(0..T-1)
  std::vector<int> history;        // f(0..T)
  std::vector<int> energy;         // eps(0..T-1)
  std::vector<int> attempts;       // N^A(t): attempts in slots 0..t
  std::vector<int> successes;      // N^S(t)
};

/// Exact slot dynamics along `path`. The action is the eps whose cumulative
/// interval contains the policy draw; an attempt (eps >= ebar) consumes the
/// next channel draw by attempt number. The disturbance comes from the run's
/// own stream. Throws std::logic_error if the policy violates energy
/// causality, std::invalid_argument on size mismatches.
Trajectory simulate(const ValidatedEhcs& ehcs, const TransmissionPolicy& policy,
                    const InitialCondition& init, const SamplePath& path);

struct RunSummary {
  std::uint64_t run_index = 0;
  double terminal_sq_norm = 0.0;
  int attempts = 0;
  int successes = 0;
};

struct TrajectoryEnsemble {
  int runs = 0;
  int horizon = 0;
  std::vector<double> mean_sq_norm;  // E|x(t)|^2, t = 0..horizon
  std::vector<double> sd_sq_norm;    // sample standard deviation of |x(t)|^2
  std::vector<double> mean_norm;     // E|x(t)|
  std::vector<double> sd_norm;
  std::vector<double> q01, q10, q90, q99;  // quantiles of |x(t)|^2
  std::vector<RunSummary> summaries;
};

/// Runs `runs` independent simulations (run indices 0..runs-1) and reduces
/// them in run order, so the result does not depend on `threads`
/// (0 = hardware concurrency).
TrajectoryEnsemble monte_carlo(const ValidatedEhcs& ehcs, const TransmissionPolicy& policy,
                               const InitialCondition& init, int runs, int horizon,
                               std::uint64_t master_seed, unsigned threads = 0);

/// Linear-interpolation quantile of sorted data.
double sorted_quantile(const std::vector<double>& sorted, double q);

/// CSV with columns t,mean_sq_norm,q01,q10,q90,q99.
void write_ensemble_csv(std::ostream& os, const TrajectoryEnsemble& ens);
/// CSV with columns run_index,terminal_sq_norm,attempts,successes.
void write_summary_csv(std::ostream& os, const TrajectoryEnsemble& ens);

}  // namespace ehcs
