#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ehcs/config.hpp"
#include "ehcs/design.hpp"
#include "ehcs/embedding.hpp"
#include "ehcs/sim.hpp"
#include "ehcs/stability.hpp"

namespace ehcs::cli {
namespace {

using nlohmann::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Loaded {
  json doc;
  ProblemConfig config;
  std::optional<ValidatedEhcs> ehcs;
  std::string hash;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Loaded load(const std::string& path) {
  Loaded l;
  try {
    l.doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("<root>: invalid JSON: ") + e.what());
  }
  l.config = parse_config(l.doc);
  l.ehcs.emplace(validate_ehcs(l.config.spec));
  check_initial(l.config.initial, *l.ehcs);
  l.hash = config_hash(l.doc);
  return l;
}

TransmissionPolicy make_policy(const std::string& spec, const ValidatedEhcs& ehcs) {
  if (spec == "greedy") return greedy_policy(ehcs);
  if (spec.rfind("dwell:", 0) == 0) {
    const auto body = spec.substr(6);
    const auto comma = body.find(',');
    if (comma == std::string::npos) throw UsageError("--policy dwell:k,p expects two values");
    int k = 0;
    double p = 0.0;
    try {
      std::size_t used = 0;
      k = std::stoi(body.substr(0, comma), &used);
      if (used != comma) throw std::invalid_argument("k");
      const auto ps = body.substr(comma + 1);
      p = std::stod(ps, &used);
      if (used != ps.size()) throw std::invalid_argument("p");
    } catch (const std::exception&) {
      throw UsageError("--policy dwell:k,p could not parse \"" + body + "\"");
    }
    try {
      return build_dwell_policy(ehcs, k, p);
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("--policy: ") + e.what());
    }
  }
  if (spec.rfind("file:", 0) == 0) {
    json doc;
    try {
      doc = json::parse(read_file(spec.substr(5)));
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("policy file: invalid JSON: ") + e.what());
    }
    std::optional<TransmissionPolicy> parsed;
    try {
      parsed.emplace(policy_from_json(doc));
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("policy file: ") + e.what());
    }
    auto& policy = *parsed;
    const auto violations = validate_policy(policy, ehcs);
    if (!violations.empty()) {
      const auto& v = violations.front();
      throw ConfigError("policy file: rules[battery=" + std::to_string(v.battery) +
                        ", latent=" + std::to_string(v.latent) + ", history=" +
                        std::to_string(v.history) + "]: " + v.reason);
    }
    return policy;
  }
  throw UsageError("--policy must be greedy, dwell:k,p or file:PATH");
}

json envelope(const std::string& command, const Loaded& l, json params, json result) {
  return {{"tool", "ehcs"},
          {"version", kToolVersion},
          {"command", command},
          {"config_hash", l.hash},
          {"parameters", std::move(params)},
          {"result", std::move(result)}};
}

void emit(const json& j, const std::string& out_path, std::ostream& out) {
  const auto text = j.dump(2) + "\n";
  if (out_path.empty() || out_path == "-") {
    out << text;
    return;
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw UsageError("cannot write " + out_path);
  f << text;
}

json tolerances(const CertifyOptions& o) {
  return {{"spectral_tol", o.spectral_tol},
          {"spectral_max_iter", o.spectral_max_iter},
          {"lyapunov_tol", o.lyapunov_tol},
          {"lyapunov_max_iter", o.lyapunov_max_iter},
          {"marginal_band", kMarginalBand}};
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mean-square stability certification and simulation of energy harvesting "
               "control systems"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  std::string config_path, out_path, policy_spec = "greedy";
  CertifyOptions opts;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "Problem config (JSON)")->required();
    sub->add_option("--out,-o", out_path, "Output file (default: stdout)");
  };
  auto add_tolerances = [&](CLI::App* sub) {
    sub->add_option("--tol", opts.spectral_tol, "Spectral radius relative tolerance")
        ->check(CLI::PositiveNumber);
    sub->add_option("--lyap-tol", opts.lyapunov_tol, "Lyapunov iteration tolerance")
        ->check(CLI::PositiveNumber);
    sub->add_option("--lyap-max-iter", opts.lyapunov_max_iter, "Lyapunov iteration budget")
        ->check(CLI::PositiveNumber);
  };

  auto* certify_cmd = app.add_subcommand("certify", "Certify one transmission policy");
  add_common(certify_cmd);
  add_tolerances(certify_cmd);
  certify_cmd->add_option("--policy", policy_spec, "greedy | dwell:k,p | file:PATH");

  int runs = 1000, horizon = 200;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::string out_dir = ".";
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo ensemble, written as CSV");
  sim_cmd->add_option("config", config_path, "Problem config (JSON)")->required();
  sim_cmd->add_option("--runs", runs, "Number of runs")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--horizon", horizon, "Slots per run")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--seed", seed, "Master seed");
  sim_cmd->add_option("--threads", threads, "Worker threads (0 = all cores)");
  sim_cmd->add_option("--policy", policy_spec, "greedy | dwell:k,p | file:PATH");
  sim_cmd->add_option("--out-dir", out_dir, "Directory for ensemble.csv, runs.csv, simulate.json");

  int b_max = 64;
  bool full_scan = false;
  auto* battery_cmd = app.add_subcommand("battery", "Critical battery capacity (scalar plants)");
  add_common(battery_cmd);
  add_tolerances(battery_cmd);
  battery_cmd->add_option("--max", b_max, "Largest capacity to try")->check(CLI::NonNegativeNumber);
  battery_cmd->add_flag("--full", full_scan, "Keep scanning past the first stable capacity");

  int k_max = 3;
  auto* search_cmd = app.add_subcommand("policy-search", "Dwell-time policy sweep over (k, p)");
  add_common(search_cmd);
  add_tolerances(search_cmd);
  search_cmd->add_option("--kmax", k_max, "Largest dwell length")->check(CLI::PositiveNumber);

  int k = 2;
  auto* dwell_cmd = app.add_subcommand("dwell-probs", "Dwell probability table phi_k");
  add_common(dwell_cmd);
  dwell_cmd->add_option("--k", k, "Dwell length")->check(CLI::PositiveNumber);

  double p = 0.5;
  std::vector<int> thresholds{1, 2}, capacities{1, 2};
  auto* grid_cmd = app.add_subcommand("split-grid",
                                      "Greedy vs dwell(k, p) over transmit energies and capacities");
  add_common(grid_cmd);
  add_tolerances(grid_cmd);
  grid_cmd->add_option("--k", k, "Dwell length")->check(CLI::PositiveNumber);
  grid_cmd->add_option("--p", p, "Dwell threshold")->check(CLI::Range(0.0, 1.0));
  grid_cmd->add_option("--thresholds", thresholds, "Transmit energies")->delimiter(',');
  grid_cmd->add_option("--capacities", capacities, "Battery capacities")->delimiter(',');

  auto* chain_cmd = app.add_subcommand("chain", "Mode-chain transition matrix as CSV triplets");
  add_common(chain_cmd);
  chain_cmd->add_option("--policy", policy_spec, "greedy | dwell:k,p | file:PATH");

  auto* policy_cmd = app.add_subcommand("policy", "Write a policy table as JSON");
  add_common(policy_cmd);
  policy_cmd->add_option("--policy", policy_spec, "greedy | dwell:k,p | file:PATH");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, e2;
    const int code = app.exit(e, o, e2);
    out << o.str();
    err << e2.str();
    return code == 0 ? kOk : kInvalid;
  }

  try {
    const auto l = load(config_path);
    const auto& ehcs = *l.ehcs;
    for (const auto& w : ehcs.warnings()) err << "warning: " << w << "\n";

    if (certify_cmd->parsed()) {
      const auto policy = make_policy(policy_spec, ehcs);
      const auto report = certify(ehcs, policy, opts);
      json params = tolerances(opts);
      params["policy"] = policy_spec;
      emit(envelope("certify", l, params, report_to_json(report)), out_path, out);
      return report.verdict == Verdict::marginal ? kMarginal : kOk;
    }
    if (sim_cmd->parsed()) {
      const auto policy = make_policy(policy_spec, ehcs);
      const auto ens =
          monte_carlo(ehcs, policy, l.config.initial, runs, horizon, seed, threads);
      std::filesystem::create_directories(out_dir);
      const std::filesystem::path dir(out_dir);
      {
        std::ofstream f(dir / "ensemble.csv", std::ios::binary);
        if (!f) throw UsageError("cannot write " + (dir / "ensemble.csv").string());
        write_ensemble_csv(f, ens);
      }
      {
        std::ofstream f(dir / "runs.csv", std::ios::binary);
        if (!f) throw UsageError("cannot write " + (dir / "runs.csv").string());
        write_summary_csv(f, ens);
      }
      json params = {{"runs", runs}, {"horizon", horizon}, {"seed", seed}, {"policy", policy_spec}};
      json result = {{"ensemble_csv", "ensemble.csv"},
                     {"runs_csv", "runs.csv"},
                     {"max_mean_sq_norm",
                      *std::max_element(ens.mean_sq_norm.begin(), ens.mean_sq_norm.end())},
                     {"max_mean_norm", *std::max_element(ens.mean_norm.begin(), ens.mean_norm.end())},
                     {"terminal_mean_sq_norm", ens.mean_sq_norm.back()}};
      emit(envelope("simulate", l, params, result), (dir / "simulate.json").string(), out);
      return kOk;
    }
    if (battery_cmd->parsed()) {
      const auto res = critical_battery_capacity(ehcs, b_max, full_scan, opts);
      json params = tolerances(opts);
      params["b_max"] = b_max;
      params["full_scan"] = full_scan;
      emit(envelope("battery", l, params, capacity_to_json(res)), out_path, out);
      const bool marginal = std::any_of(res.scan.begin(), res.scan.end(), [](const auto& e) {
        return e.verdict == Verdict::marginal;
      });
      return marginal ? kMarginal : kOk;
    }
    if (search_cmd->parsed()) {
      const auto res = search_dwell_policies(ehcs, k_max, opts);
      json params = tolerances(opts);
      params["k_max"] = k_max;
      emit(envelope("policy-search", l, params, dwell_search_to_json(res)), out_path, out);
      return kOk;
    }
    if (dwell_cmd->parsed()) {
      emit(envelope("dwell-probs", l, {{"k", k}}, dwell_table_to_json(dwell_probabilities(ehcs, k))),
           out_path, out);
      return kOk;
    }
    if (grid_cmd->parsed()) {
      const auto grid = policy_split_grid(l.config.spec, thresholds, capacities, k, p, opts);
      json params = tolerances(opts);
      params["k"] = k;
      params["p"] = p;
      params["thresholds"] = thresholds;
      params["capacities"] = capacities;
      json result = {{"grid", split_grid_to_json(grid)}};
      json splits = json::array();
      for (const auto& e : grid) {
        if (e.split()) splits.push_back({{"tx_threshold", e.tx_threshold},
                                         {"battery_capacity", e.battery_capacity}});
      }
      result["split_pairs"] = splits;
      emit(envelope("split-grid", l, params, result), out_path, out);
      return kOk;
    }
    if (chain_cmd->parsed()) {
      const auto chain = build_mode_chain(ehcs, make_policy(policy_spec, ehcs));
      std::ostringstream csv;
      write_psi_triplets(csv, chain);
      if (out_path.empty() || out_path == "-") {
        out << csv.str();
      } else {
        std::ofstream f(out_path, std::ios::binary);
        if (!f) throw UsageError("cannot write " + out_path);
        f << csv.str();
      }
      return kOk;
    }
    if (policy_cmd->parsed()) {
      auto doc = policy_to_json(make_policy(policy_spec, ehcs));
      doc["version"] = kToolVersion;
      doc["config_hash"] = l.hash;
      emit(doc, out_path, out);
      return kOk;
    }
  } catch (const ValidationError& e) {
    err << "error: invalid system\n";
    for (const auto& m : e.errors()) err << "  " << m << "\n";
    return kInvalid;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInvalid;
  }
  return kInvalid;
}

}  // namespace ehcs::cli
