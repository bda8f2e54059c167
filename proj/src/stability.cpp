#include "ehcs/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

namespace ehcs {
namespace {

// Iterative Tarjan over the sparsity graph of psi (edge s -> s' when
// psi(s', s) != 0). Returns component id per state.
std::vector<int> strongly_connected_components(const Eigen::SparseMatrix<double>& psi,
                                               int& num_components) {
  const int n = static_cast<int>(psi.cols());
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<char> on_stack(n, 0);
  std::vector<int> stack;
  std::vector<std::pair<int, Eigen::SparseMatrix<double>::InnerIterator>> work;
  int counter = 0;
  num_components = 0;

  for (int root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = 1;
    work.emplace_back(root, Eigen::SparseMatrix<double>::InnerIterator(psi, root));
    while (!work.empty()) {
      auto& [v, it] = work.back();
      bool descended = false;
      for (; it; ++it) {
        if (it.value() == 0.0) continue;
        const int w = static_cast<int>(it.row());
        if (index[w] == -1) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = 1;
          ++it;
          work.emplace_back(w, Eigen::SparseMatrix<double>::InnerIterator(psi, w));
          descended = true;
          break;
        }
        if (on_stack[w]) low[v] = std::min(low[v], index[w]);
      }
      if (descended) continue;
      const int done = v;
      if (low[done] == index[done]) {
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp[w] = num_components;
        } while (w != done);
        ++num_components;
      }
      work.pop_back();
      if (!work.empty()) {
        const int parent = work.back().first;
        low[parent] = std::min(low[parent], low[done]);
      }
    }
  }
  return comp;
}

double dense_block_radius(const ModeChain& chain, const PlantModel& plant,
                          const std::vector<int>& members,
                          const std::vector<int>& local) {
  const int n2 = plant.dim() * plant.dim();
  const Eigen::MatrixXd kc = kron(plant.a_closed, plant.a_closed);
  const Eigen::MatrixXd ko = kron(plant.a_open, plant.a_open);
  const int m = static_cast<int>(members.size());
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(m * n2, m * n2);
  for (int j = 0; j < m; ++j) {
    const int s = members[j];
    const Eigen::MatrixXd& k = chain.is_closed(s) ? kc : ko;
    for (Eigen::SparseMatrix<double>::InnerIterator it(chain.psi(), s); it; ++it) {
      const int i = local[it.row()];
      if (i < 0) continue;
      block.block(i * n2, j * n2, n2, n2) += it.value() * k;
    }
  }
  if (block.rows() == 1) return std::abs(block(0, 0));
  Eigen::EigenSolver<Eigen::MatrixXd> es(block, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

struct PowerOutcome {
  double rho;
  double lower;
  double upper;
  int iterations;
  bool converged;
};

// Shifted power iteration X <- T(X) + c X restricted to one irreducible
// component. The shift makes the iteration aperiodic; the generalized
// Collatz-Wielandt ratios bracket rho + c.
PowerOutcome power_block_radius(const ModeChain& chain, const PlantModel& plant,
                                const std::vector<int>& members,
                                const std::vector<int>& local, double tol,
                                int max_iter) {
  const int n = plant.dim();
  const int m = static_cast<int>(members.size());
  std::vector<Eigen::MatrixXd> x(m, Eigen::MatrixXd::Identity(n, n));
  std::vector<Eigen::MatrixXd> y(m, Eigen::MatrixXd::Zero(n, n));

  auto apply = [&](double shift) {
    for (auto& yi : y) yi.setZero();
    for (int j = 0; j < m; ++j) {
      const int s = members[j];
      const auto& a = chain.mode_matrix(s, plant);
      const Eigen::MatrixXd q = a * x[j] * a.transpose();
      for (Eigen::SparseMatrix<double>::InnerIterator it(chain.psi(), s); it; ++it) {
        const int i = local[it.row()];
        if (i >= 0) y[i] += it.value() * q;
      }
    }
    for (int j = 0; j < m; ++j) y[j] += shift * x[j];
  };

  // Pick a shift on the scale of the operator.
  apply(0.0);
  double scale = 0.0;
  for (int j = 0; j < m; ++j) scale = std::max(scale, y[j].trace() / n);
  const double shift = std::max(scale, 1e-3);

  PowerOutcome out{0.0, 0.0, std::numeric_limits<double>::infinity(), 0, false};
  for (int iter = 1; iter <= max_iter; ++iter) {
    apply(shift);
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (int j = 0; j < m; ++j) {
      if (n == 1) {
        const double r = y[j](0, 0) / x[j](0, 0);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
      } else {
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(
            0.5 * (y[j] + y[j].transpose()), 0.5 * (x[j] + x[j].transpose()),
            Eigen::EigenvaluesOnly);
        lo = std::min(lo, ges.eigenvalues().minCoeff());
        hi = std::max(hi, ges.eigenvalues().maxCoeff());
      }
    }
    out.lower = std::max(0.0, lo - shift);
    out.upper = hi - shift;
    out.rho = 0.5 * (out.lower + out.upper);
    out.iterations = iter;
    if (out.upper - out.lower <= tol * std::max(out.upper, 1e-300)) {
      out.converged = true;
      break;
    }
    double norm = 0.0;
    for (int j = 0; j < m; ++j) norm = std::max(norm, y[j].trace());
    for (int j = 0; j < m; ++j) x[j] = y[j] / norm;
  }
  return out;
}

Eigen::MatrixXd sym(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::stable:
      return "stable";
    case Verdict::unstable:
      return "unstable";
    case Verdict::marginal:
      return "marginal";
  }
  return "marginal";
}

Verdict classify_spectral_radius(double rho) {
  if (rho < 1.0 - kMarginalBand) return Verdict::stable;
  if (rho > 1.0 + kMarginalBand) return Verdict::unstable;
  return Verdict::marginal;
}

SpectralResult spectral_radius_test(const ModeChain& chain, const PlantModel& plant,
                                    double tol, int max_iter, int dense_limit) {
  if (!(tol > 0.0)) throw std::invalid_argument("spectral_radius_test: tol must be > 0");
  SpectralResult result;
  int ncomp = 0;
  const auto comp = strongly_connected_components(chain.psi(), ncomp);
  result.num_components = ncomp;

  std::vector<std::vector<int>> members(ncomp);
  for (int s = 0; s < chain.size(); ++s) members[comp[s]].push_back(s);

  const int n2 = plant.dim() * plant.dim();
  std::vector<int> local(chain.size(), -1);
  double rho = 0.0;
  double undecided_upper = 0.0;
  bool all_converged = true;
  for (const auto& mem : members) {
    result.largest_component = std::max(result.largest_component, static_cast<int>(mem.size()));
    if (mem.size() == 1 && chain.psi().coeff(mem[0], mem[0]) == 0.0) continue;
    for (int j = 0; j < static_cast<int>(mem.size()); ++j) local[mem[j]] = j;
    if (static_cast<long>(mem.size()) * n2 <= dense_limit) {
      rho = std::max(rho, dense_block_radius(chain, plant, mem, local));
    } else {
      const auto p = power_block_radius(chain, plant, mem, local, tol, max_iter);
      result.iterations += p.iterations;
      rho = std::max(rho, p.rho);
      if (!p.converged) {
        all_converged = false;
        undecided_upper = std::max(undecided_upper, p.upper);
        rho = std::max(rho, p.lower);
      }
    }
    for (int s : mem) local[s] = -1;
  }
  result.rho = rho;
  result.converged = all_converged;
  result.verdict = classify_spectral_radius(rho);
  if (!all_converged) {
    // Only bounds are known for some component.
    const double upper = std::max(rho, undecided_upper);
    if (rho > 1.0 + kMarginalBand) {
      result.verdict = Verdict::unstable;
    } else if (upper < 1.0 - kMarginalBand) {
      result.verdict = Verdict::stable;
    } else {
      result.verdict = Verdict::marginal;
    }
    result.diagnostic = "power iteration did not converge within the iteration budget";
  }
  return result;
}

std::vector<double> mode_slacks(const ModeChain& chain, const PlantModel& plant,
                                const std::vector<Eigen::MatrixXd>& r) {
  const auto tr = apply_adjoint_second_moment(chain, plant, r);
  std::vector<double> out(chain.size());
  for (int s = 0; s < chain.size(); ++s) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym(tr[s] - r[s]),
                                                      Eigen::EigenvaluesOnly);
    out[s] = es.eigenvalues().maxCoeff();
  }
  return out;
}

double certificate_slack(const ModeChain& chain, const PlantModel& plant,
                         const std::vector<Eigen::MatrixXd>& r) {
  const auto per_mode = mode_slacks(chain, plant, r);
  double slack = -std::numeric_limits<double>::infinity();
  for (double v : per_mode) slack = std::max(slack, v);
  return slack;
}

LyapunovResult lyapunov_certificate(const ModeChain& chain, const PlantModel& plant,
                                    double tol, int max_iter, double trace_cap) {
  const int n = plant.dim();
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  LyapunovResult result;
  std::vector<Eigen::MatrixXd> r(chain.size(), eye);

  auto accept = [&](std::vector<Eigen::MatrixXd> mats) -> bool {
    for (auto& m : mats) {
      m = sym(m);
      if (!m.allFinite()) return false;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() < 1.0 - 1e-8) return false;
    }
    auto per_mode = mode_slacks(chain, plant, mats);
    const double slack = *std::max_element(per_mode.begin(), per_mode.end());
    if (!(slack < 0.0)) return false;
    std::vector<int> support;
    for (int s = 0; s < chain.size(); ++s) {
      if (chain.admissible(s)) support.push_back(s);
    }
    result.certificate =
        LyapunovCertificate{std::move(mats), slack, std::move(per_mode), std::move(support)};
    return true;
  };

  for (int iter = 1; iter <= max_iter; ++iter) {
    auto next = apply_adjoint_second_moment(chain, plant, r);
    double diff = 0.0;
    double size = 1.0;
    double max_trace = 0.0;
    for (int s = 0; s < chain.size(); ++s) {
      next[s] += eye;
      diff = std::max(diff, (next[s] - r[s]).norm());
      size = std::max(size, next[s].norm());
      max_trace = std::max(max_trace, next[s].trace());
    }
    r.swap(next);
    result.iterations = iter;
    if (!std::isfinite(max_trace) || max_trace > trace_cap) {
      result.diagnostic = "fixed-point iteration diverged (trace above cap)";
      return result;
    }
    if (diff <= tol * size) {
      if (!accept(r)) result.diagnostic = "converged iterate failed certificate check";
      return result;
    }
  }

  // Slow convergence or slow divergence: solve the linear system directly.
  result.direct_solve = true;
  const auto op = second_moment_operator<double>(chain, plant);
  Eigen::SparseMatrix<double> id(op.rows(), op.cols());
  id.setIdentity();
  Eigen::SparseMatrix<double> sys = id - Eigen::SparseMatrix<double>(op.transpose());
  sys.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(sys);
  if (lu.info() != Eigen::Success) {
    result.diagnostic = "iteration budget exhausted; direct solve singular";
    return result;
  }
  const std::vector<Eigen::MatrixXd> ones(chain.size(), eye);
  const Eigen::VectorXd sol = lu.solve(stack(ones));
  if (lu.info() != Eigen::Success || !accept(unstack(sol, n))) {
    result.diagnostic = "iteration budget exhausted; direct solution not a certificate";
  }
  return result;
}

DecayConstants decay_constants(const LyapunovCertificate& cert, double rho) {
  if (!(rho < 1.0)) {
    throw std::invalid_argument("decay_constants: spectral radius must be < 1");
  }
  if (!(cert.slack < 0.0) || cert.matrices.empty()) {
    throw std::invalid_argument("decay_constants: certificate slack must be negative");
  }
  std::vector<int> modes = cert.support;
  if (modes.empty()) {
    modes.resize(cert.matrices.size());
    for (std::size_t s = 0; s < modes.size(); ++s) modes[s] = static_cast<int>(s);
  }
  double max_eig = 0.0;
  double min_eig = std::numeric_limits<double>::infinity();
  double rate = -std::numeric_limits<double>::infinity();
  for (int s : modes) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym(cert.matrices[s]),
                                                      Eigen::EigenvaluesOnly);
    const double hi = es.eigenvalues().maxCoeff();
    max_eig = std::max(max_eig, hi);
    min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
    const double slack_s =
        cert.mode_slack.size() == cert.matrices.size() ? cert.mode_slack[s] : cert.slack;
    rate = std::max(rate, slack_s / hi);
  }
  DecayConstants c;
  c.alpha = max_eig / min_eig;
  c.xi = std::max({1.0 + rate, rho, std::numeric_limits<double>::epsilon()});
  c.ultimate_bound = c.alpha / (1.0 - c.xi);
  return c;
}

StabilityReport certify(const ModeChain& chain, const PlantModel& plant,
                        const CertifyOptions& options) {
  StabilityReport report;
  report.spectral = spectral_radius_test(chain, plant, options.spectral_tol,
                                         options.spectral_max_iter);
  report.rho = report.spectral.rho;
  auto lyap = lyapunov_certificate(chain, plant, options.lyapunov_tol,
                                   options.lyapunov_max_iter);
  report.iterations = lyap.iterations;
  report.verdict = report.spectral.verdict;
  report.diagnostic = report.spectral.diagnostic;
  if (lyap.feasible()) {
    report.slack = lyap.certificate->slack;
    report.certificate = std::move(lyap.certificate);
  }
  if (report.verdict == Verdict::stable && !report.certificate) {
    report.verdict = Verdict::marginal;
    report.diagnostic = "spectral radius below one but no Lyapunov certificate (" +
                        lyap.diagnostic + ")";
  } else if (report.verdict == Verdict::unstable && report.certificate) {
    report.verdict = Verdict::marginal;
    report.diagnostic = "Lyapunov certificate found but spectral radius above one";
  }
  if (report.verdict == Verdict::stable) {
    report.constants = decay_constants(*report.certificate, report.rho);
  }
  return report;
}

StabilityReport certify(const ValidatedEhcs& ehcs, const TransmissionPolicy& policy,
                        const CertifyOptions& options) {
  return certify(build_mode_chain(ehcs, policy), ehcs.plant(), options);
}

}  // namespace ehcs
