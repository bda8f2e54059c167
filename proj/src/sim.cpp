#include "ehcs/sim.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>

#include <Eigen/Eigenvalues>

namespace ehcs {
namespace {

int sample_column(const Eigen::MatrixXd& m, int col, double u) {
  double acc = 0.0;
  int last = -1;
  for (int r = 0; r < m.rows(); ++r) {
    const double p = m(r, col);
    if (p <= 0.0) continue;
    acc += p;
    last = r;
    if (u < acc) return r;
  }
  return last;  // u landed in the rounding gap above the last cumulative sum
}

// Disturbance sampler driven by the run's own stream.
class DisturbanceSampler {
 public:
  DisturbanceSampler(const DisturbanceModel& model, int n, std::mt19937_64 rng)
      : model_(model), n_(n), rng_(std::move(rng)) {
    if (model.kind == DisturbanceKind::iid_uniform) {
      half_ = model.half_width.size() == 1
                  ? Eigen::VectorXd::Constant(n, model.half_width(0))
                  : model.half_width;
    } else if (model.kind == DisturbanceKind::iid_gaussian) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(model.covariance);
      root_ = es.eigenvectors() *
              es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    }
  }

  Eigen::VectorXd draw() {
    switch (model_.kind) {
      case DisturbanceKind::none:
        return Eigen::VectorXd::Zero(n_);
      case DisturbanceKind::iid_uniform: {
        Eigen::VectorXd w(n_);
        for (int i = 0; i < n_; ++i) w(i) = (2.0 * uniform01(rng_) - 1.0) * half_(i);
        return w;
      }
      case DisturbanceKind::iid_gaussian: {
        Eigen::VectorXd z(n_);
        for (int i = 0; i < n_; ++i) z(i) = normal();
        return root_ * z;
      }
    }
    return Eigen::VectorXd::Zero(n_);
  }

 private:
  // Box-Muller, written out so the stream is identical across standard
  // libraries.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(1.0 - uniform01(rng_)));
    const double theta = 2.0 * std::numbers::pi * uniform01(rng_);
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  const DisturbanceModel& model_;
  int n_;
  std::mt19937_64 rng_;
  Eigen::VectorXd half_;
  Eigen::MatrixXd root_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace

std::mt19937_64 make_stream(std::uint64_t master_seed, std::uint64_t run_index,
                            StreamTag tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                    static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(run_index),
                    static_cast<std::uint32_t>(run_index >> 32),
                    static_cast<std::uint32_t>(tag)};
  return std::mt19937_64(seq);
}

SamplePath draw_sample_path(std::uint64_t master_seed, std::uint64_t run_index,
                            int horizon, const HarvestSource& source,
                            double success_prob, int initial_latent) {
  if (horizon < 1) throw std::invalid_argument("draw_sample_path: horizon must be >= 1");
  if (initial_latent < 0 || initial_latent >= source.num_latent()) {
    throw std::invalid_argument("draw_sample_path: initial latent state out of range");
  }
  SamplePath path;
  path.master_seed = master_seed;
  path.run_index = run_index;

  auto lat = make_stream(master_seed, run_index, StreamTag::latent);
  path.latent_path.resize(horizon + 1);
  path.latent_path[0] = initial_latent;
  for (int t = 0; t < horizon; ++t) {
    path.latent_path[t + 1] =
        sample_column(source.transition(), path.latent_path[t], uniform01(lat));
  }

  auto pol = make_stream(master_seed, run_index, StreamTag::policy);
  path.policy_draws.resize(horizon);
  for (auto& u : path.policy_draws) u = uniform01(pol);

  // At most one attempt per slot.
  auto ch = make_stream(master_seed, run_index, StreamTag::channel);
  path.channel_draws.resize(horizon);
  for (auto& g : path.channel_draws) g = uniform01(ch) < success_prob ? 1 : 0;
  return path;
}

Trajectory simulate(const ValidatedEhcs& ehcs, const TransmissionPolicy& policy,
                    const InitialCondition& init, const SamplePath& path) {
  const int n = ehcs.dim();
  const int horizon = path.horizon();
  if (init.x0.size() != n) throw std::invalid_argument("simulate: x0 has wrong dimension");
  if (init.battery < 0 || init.battery > ehcs.battery_capacity()) {
    throw std::invalid_argument("simulate: initial battery out of range");
  }
  if (init.history != 0 && init.history != 1) {
    throw std::invalid_argument("simulate: initial history must be 0 or 1");
  }
  if (static_cast<int>(path.latent_path.size()) != horizon + 1 ||
      static_cast<int>(path.channel_draws.size()) < horizon) {
    throw std::invalid_argument("simulate: malformed sample path");
  }
  if (policy.battery_capacity() != ehcs.battery_capacity() ||
      policy.num_latent() != ehcs.num_latent() ||
      policy.num_energy_levels() != ehcs.num_energy_levels()) {
    throw std::invalid_argument("simulate: policy grid does not match the system");
  }

  const auto& src = ehcs.source();
  const auto& ac = ehcs.plant().a_closed;
  const auto& ao = ehcs.plant().a_open;
  const int cap = ehcs.battery_capacity();
  const int ebar = ehcs.tx_threshold();
  DisturbanceSampler noise(ehcs.disturbance(), n,
                           make_stream(path.master_seed, path.run_index,
                                       StreamTag::disturbance));

  Trajectory tr;
  tr.x.reserve(horizon + 1);
  tr.x.push_back(init.x0);
  tr.battery.assign(1, init.battery);
  tr.latent.assign(1, path.latent_path[0]);
  tr.history.assign(1, init.history);
  tr.loop.reserve(horizon);
  tr.energy.reserve(horizon);
  tr.attempts.reserve(horizon);
  tr.successes.reserve(horizon);

  int na = 0;
  int ns = 0;
  for (int t = 0; t < horizon; ++t) {
    const int b = tr.battery[t];
    const int l = tr.latent[t];
    const int f = tr.history[t];
    const auto dist = policy.distribution(b, l, f);

    // Interval partition of [0, 1) by the cumulative action probabilities.
    const double u = path.policy_draws[t];
    double acc = 0.0;
    int eps = -1;
    for (int e = 0; e < dist.size(); ++e) {
      if (dist(e) <= 0.0) continue;
      acc += dist(e);
      eps = e;
      if (u < acc) break;
    }
    if (eps < 0) throw std::logic_error("simulate: empty action distribution");
    if (eps > b + src.energy(l)) {
      throw std::logic_error("simulate: energy causality violated at t=" + std::to_string(t));
    }

    const bool attempt = eps >= ebar;
    int gamma = 0;
    if (attempt) {
      gamma = path.channel_draws[na];
      ++na;
      ns += gamma;
    }
    tr.x.push_back((gamma ? ac : ao) * tr.x[t] + noise.draw());
    tr.battery.push_back(std::clamp(b + src.energy(l) - eps, 0, cap));
    tr.latent.push_back(path.latent_path[t + 1]);
    tr.history.push_back(attempt ? 1 : 0);
    tr.loop.push_back(gamma);
    tr.energy.push_back(eps);
    tr.attempts.push_back(na);
    tr.successes.push_back(ns);
  }
  return tr;
}

double sorted_quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

TrajectoryEnsemble monte_carlo(const ValidatedEhcs& ehcs, const TransmissionPolicy& policy,
                               const InitialCondition& init, int runs, int horizon,
                               std::uint64_t master_seed, unsigned threads) {
  if (runs < 1) throw std::invalid_argument("monte_carlo: runs must be >= 1");
  if (horizon < 1) throw std::invalid_argument("monte_carlo: horizon must be >= 1");
  const auto violations = validate_policy(policy, ehcs);
  if (!violations.empty()) {
    throw std::invalid_argument("monte_carlo: invalid policy (" + violations.front().reason + ")");
  }

  const std::size_t stride = static_cast<std::size_t>(horizon) + 1;
  std::vector<double> sq(static_cast<std::size_t>(runs) * stride);
  std::vector<RunSummary> summaries(runs);

  auto work = [&](int begin, int end) {
    for (int r = begin; r < end; ++r) {
      const auto path = draw_sample_path(master_seed, r, horizon, ehcs.source(),
                                         ehcs.success_prob(), init.latent);
      const auto tr = simulate(ehcs, policy, init, path);
      double* row = sq.data() + static_cast<std::size_t>(r) * stride;
      for (std::size_t t = 0; t < stride; ++t) row[t] = tr.x[t].squaredNorm();
      summaries[r] = {static_cast<std::uint64_t>(r), row[horizon], tr.attempts.back(),
                      tr.successes.back()};
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(runs));
  if (threads <= 1) {
    work(0, runs);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (runs + static_cast<int>(threads) - 1) / static_cast<int>(threads);
    for (int begin = 0; begin < runs; begin += chunk) {
      pool.emplace_back(work, begin, std::min(runs, begin + chunk));
    }
    for (auto& th : pool) th.join();
  }

  TrajectoryEnsemble ens;
  ens.runs = runs;
  ens.horizon = horizon;
  ens.summaries = std::move(summaries);
  for (auto* v : {&ens.mean_sq_norm, &ens.sd_sq_norm, &ens.mean_norm, &ens.sd_norm,
                  &ens.q01, &ens.q10, &ens.q90, &ens.q99}) {
    v->resize(stride);
  }
  std::vector<double> col(runs);
  for (std::size_t t = 0; t < stride; ++t) {
    double s1 = 0.0, n1 = 0.0;
    for (int r = 0; r < runs; ++r) {
      const double v = sq[static_cast<std::size_t>(r) * stride + t];
      col[r] = v;
      s1 += v;
      n1 += std::sqrt(v);
    }
    const double m = s1 / runs;
    const double mn = n1 / runs;
    double d1 = 0.0, d2 = 0.0;
    for (double v : col) {
      d1 += (v - m) * (v - m);
      d2 += (std::sqrt(v) - mn) * (std::sqrt(v) - mn);
    }
    ens.mean_sq_norm[t] = m;
    ens.mean_norm[t] = mn;
    ens.sd_sq_norm[t] = runs > 1 ? std::sqrt(d1 / (runs - 1)) : 0.0;
    ens.sd_norm[t] = runs > 1 ? std::sqrt(d2 / (runs - 1)) : 0.0;
    std::sort(col.begin(), col.end());
    ens.q01[t] = sorted_quantile(col, 0.01);
    ens.q10[t] = sorted_quantile(col, 0.10);
    ens.q90[t] = sorted_quantile(col, 0.90);
    ens.q99[t] = sorted_quantile(col, 0.99);
  }
  return ens;
}

void write_ensemble_csv(std::ostream& os, const TrajectoryEnsemble& ens) {
  os << "t,mean_sq_norm,q01,q10,q90,q99\n" << std::setprecision(17);
  for (std::size_t t = 0; t < ens.mean_sq_norm.size(); ++t) {
    os << t << ',' << ens.mean_sq_norm[t] << ',' << ens.q01[t] << ',' << ens.q10[t] << ','
       << ens.q90[t] << ',' << ens.q99[t] << '\n';
  }
}

void write_summary_csv(std::ostream& os, const TrajectoryEnsemble& ens) {
  os << "run_index,terminal_sq_norm,attempts,successes\n" << std::setprecision(17);
  for (const auto& s : ens.summaries) {
    os << s.run_index << ',' << s.terminal_sq_norm << ',' << s.attempts << ','
       << s.successes << '\n';
  }
}

}  // namespace ehcs
