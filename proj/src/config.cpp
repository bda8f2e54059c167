#include "ehcs/config.hpp"

#include <cmath>
#include <cstdio>

namespace ehcs {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

const json& field(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected object");
  const auto it = obj.find(key);
  if (it == obj.end()) fail(path.empty() ? key : path + "." + key, "missing");
  return *it;
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected number");
  return v.get<double>();
}

int integer(const json& v, const std::string& path) {
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::floor(d) == d && std::abs(d) < 1e9) return static_cast<int>(d);
  }
  fail(path, "expected integer");
}

std::vector<double> number_list(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected array");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(number(v[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

std::vector<int> integer_list(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected array");
  std::vector<int> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(integer(v[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

// A matrix is an array of rows, or a bare number for 1x1.
Eigen::MatrixXd matrix(const json& v, const std::string& path) {
  if (v.is_number()) return Eigen::MatrixXd::Constant(1, 1, v.get<double>());
  if (!v.is_array() || v.empty()) fail(path, "expected number or non-empty array of rows");
  const auto first = number_list(v[0], path + "[0]");
  Eigen::MatrixXd m(v.size(), first.size());
  for (std::size_t r = 0; r < v.size(); ++r) {
    const auto row = number_list(v[r], path + "[" + std::to_string(r) + "]");
    if (row.size() != first.size()) fail(path + "[" + std::to_string(r) + "]", "ragged row");
    for (std::size_t c = 0; c < row.size(); ++c) m(r, c) = row[c];
  }
  return m;
}

Eigen::VectorXd vector(const json& v, const std::string& path) {
  if (v.is_number()) return Eigen::VectorXd::Constant(1, v.get<double>());
  const auto xs = number_list(v, path);
  return Eigen::Map<const Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

HarvestSource parse_source(const json& src) {
  const std::string path = "source";
  const auto& kind_v = field(src, "kind", path);
  if (!kind_v.is_string()) fail("source.kind", "expected string");
  const auto kind = kind_v.get<std::string>();

  if (kind == "deterministic_periodic") {
    const auto schedule = integer_list(field(src, "schedule", path), "source.schedule");
    if (schedule.empty()) fail("source.schedule", "must be non-empty");
    for (std::size_t i = 0; i < schedule.size(); ++i) {
      if (schedule[i] < 0) fail("source.schedule[" + std::to_string(i) + "]", "must be >= 0");
    }
    return build_deterministic_periodic(schedule);
  }
  if (kind == "ergodic") {
    return HarvestSource::unchecked(
        matrix(field(src, "transition", path), "source.transition"),
        integer_list(field(src, "energy_map", path), "source.energy_map"));
  }
  if (kind == "periodic_stochastic") {
    SolarSourceSpec s;
    s.period = integer(field(src, "period", path), "source.period");
    s.max_intensity = number(field(src, "max_intensity", path), "source.max_intensity");
    s.max_damping = number(field(src, "max_damping", path), "source.max_damping");
    const auto& prof = field(src, "ideal_profile", path);
    if (prof.is_object()) {
      const auto& pk = field(prof, "kind", "source.ideal_profile");
      if (!pk.is_string() || pk.get<std::string>() != "clamped_sine") {
        fail("source.ideal_profile.kind", "expected \"clamped_sine\"");
      }
      if (s.period < 1) fail("source.period", "must be >= 1");
      s.ideal_profile = SolarSourceSpec::clamped_sine_profile(s.period);
    } else {
      s.ideal_profile = number_list(prof, "source.ideal_profile");
    }
    s.cloud_chain = matrix(field(src, "cloud_chain", path), "source.cloud_chain");
    s.cloud_loss = number_list(field(src, "cloud_loss", path), "source.cloud_loss");
    try {
      return build_periodic_stochastic(s);
    } catch (const std::invalid_argument& e) {
      fail("source", e.what());
    }
  }
  fail("source.kind", "unknown source kind \"" + kind + "\"");
}

DisturbanceModel parse_disturbance(const json& d) {
  const auto& kind_v = field(d, "kind", "disturbance");
  if (!kind_v.is_string()) fail("disturbance.kind", "expected string");
  const auto kind = kind_v.get<std::string>();
  if (kind == "none") return DisturbanceModel::none();
  if (kind == "iid_uniform") {
    return DisturbanceModel::uniform(
        vector(field(d, "half_width", "disturbance"), "disturbance.half_width"));
  }
  if (kind == "iid_gaussian") {
    return DisturbanceModel::gaussian(
        matrix(field(d, "covariance", "disturbance"), "disturbance.covariance"));
  }
  fail("disturbance.kind", "unknown disturbance kind \"" + kind + "\"");
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

ProblemConfig parse_config(const json& doc) {
  if (!doc.is_object()) fail("<root>", "expected object");
  ProblemConfig cfg;
  const auto& plant = field(doc, "plant", "");
  cfg.spec.plant.a_closed = matrix(field(plant, "a_closed", "plant"), "plant.a_closed");
  cfg.spec.plant.a_open = matrix(field(plant, "a_open", "plant"), "plant.a_open");

  const auto& channel = field(doc, "channel", "");
  cfg.spec.channel.success_prob = number(field(channel, "lambda", "channel"), "channel.lambda");
  cfg.spec.channel.tx_threshold =
      integer(field(channel, "tx_threshold", "channel"), "channel.tx_threshold");

  cfg.spec.source = parse_source(field(doc, "source", ""));
  cfg.spec.battery_capacity =
      integer(field(doc, "battery_capacity", ""), "battery_capacity");
  if (doc.contains("disturbance")) cfg.spec.disturbance = parse_disturbance(doc["disturbance"]);

  const int n = static_cast<int>(cfg.spec.plant.a_closed.rows());
  cfg.initial.x0 = Eigen::VectorXd::Zero(n);
  if (doc.contains("initial")) {
    const auto& init = doc["initial"];
    if (!init.is_object()) fail("initial", "expected object");
    if (init.contains("x0")) {
      cfg.initial.x0 = vector(init["x0"], "initial.x0");
      if (cfg.initial.x0.size() == 1 && n > 1) {
        cfg.initial.x0 = Eigen::VectorXd::Constant(n, cfg.initial.x0(0));
      }
    }
    if (init.contains("battery")) cfg.initial.battery = integer(init["battery"], "initial.battery");
    if (init.contains("latent")) cfg.initial.latent = integer(init["latent"], "initial.latent");
    if (init.contains("history")) cfg.initial.history = integer(init["history"], "initial.history");
  }
  return cfg;
}

ProblemConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail("<root>", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc);
}

void check_initial(const InitialCondition& init, const ValidatedEhcs& ehcs) {
  if (init.x0.size() != ehcs.dim()) fail("initial.x0", "dimension does not match the plant");
  if (!init.x0.allFinite()) fail("initial.x0", "non-finite entry");
  if (init.battery < 0 || init.battery > ehcs.battery_capacity()) {
    fail("initial.battery", "outside [0, battery_capacity]");
  }
  if (init.latent < 0 || init.latent >= ehcs.num_latent()) {
    fail("initial.latent", "outside the latent state range");
  }
  if (init.history != 0 && init.history != 1) fail("initial.history", "must be 0 or 1");
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const json& doc) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(doc.dump())));
  return buf;
}

json policy_to_json(const TransmissionPolicy& policy) {
  json rules = json::array();
  for (int b = 0; b <= policy.battery_capacity(); ++b) {
    for (int l = 0; l < policy.num_latent(); ++l) {
      for (int f = 0; f < 2; ++f) {
        const auto d = policy.distribution(b, l, f);
        rules.push_back({{"battery", b},
                         {"latent", l},
                         {"history", f},
                         {"distribution", std::vector<double>(d.begin(), d.end())}});
      }
    }
  }
  return {{"battery_capacity", policy.battery_capacity()},
          {"num_latent", policy.num_latent()},
          {"num_energy_levels", policy.num_energy_levels()},
          {"rules", std::move(rules)}};
}

TransmissionPolicy policy_from_json(const json& doc) {
  const int cap = integer(field(doc, "battery_capacity", ""), "battery_capacity");
  const int nl = integer(field(doc, "num_latent", ""), "num_latent");
  const int ne = integer(field(doc, "num_energy_levels", ""), "num_energy_levels");
  if (cap < 0 || nl < 1 || ne < 1) fail("<root>", "policy dimensions must be positive");
  TransmissionPolicy policy(cap, nl, ne);
  const auto& rules = field(doc, "rules", "");
  if (!rules.is_array()) fail("rules", "expected array");
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const std::string p = "rules[" + std::to_string(i) + "]";
    const int b = integer(field(rules[i], "battery", p), p + ".battery");
    const int l = integer(field(rules[i], "latent", p), p + ".latent");
    const int f = integer(field(rules[i], "history", p), p + ".history");
    if (b < 0 || b > cap || l < 0 || l >= nl || (f != 0 && f != 1)) fail(p, "cell out of range");
    const auto d = number_list(field(rules[i], "distribution", p), p + ".distribution");
    if (static_cast<int>(d.size()) != ne) fail(p + ".distribution", "wrong length");
    for (int e = 0; e < ne; ++e) policy.distribution(b, l, f)(e) = d[e];
  }
  return policy;
}

json report_to_json(const StabilityReport& r) {
  json j;
  j["rho"] = r.rho;
  j["verdict"] = to_string(r.verdict);
  j["alpha"] = r.constants ? json(r.constants->alpha) : json(nullptr);
  j["xi"] = r.constants ? json(r.constants->xi) : json(nullptr);
  j["M"] = r.constants ? finite_or_null(r.constants->ultimate_bound) : json(nullptr);
  j["slack"] = r.certificate ? json(r.slack) : json(nullptr);
  j["iterations"] = r.iterations;
  j["certificate_found"] = r.certificate.has_value();
  j["spectral"] = {{"converged", r.spectral.converged},
                   {"power_iterations", r.spectral.iterations},
                   {"components", r.spectral.num_components},
                   {"largest_component", r.spectral.largest_component}};
  if (!r.diagnostic.empty()) j["diagnostic"] = r.diagnostic;
  return j;
}

json capacity_to_json(const CriticalCapacityResult& result) {
  json scan = json::array();
  for (const auto& e : result.scan) {
    scan.push_back({{"battery_capacity", e.capacity},
                    {"rho", e.rho},
                    {"verdict", to_string(e.verdict)}});
  }
  return {{"critical_battery_capacity",
           result.critical ? json(*result.critical) : json(nullptr)},
          {"outcome", result.critical ? "found" : "none_up_to_b_max"},
          {"b_max", result.b_max},
          {"scan", std::move(scan)}};
}

json dwell_search_to_json(const DwellSearchResult& result) {
  json cands = json::array();
  for (std::size_t i = 0; i < result.candidates.size(); ++i) {
    const auto& c = result.candidates[i];
    cands.push_back({{"k", c.k},
                     {"p_low", c.p_low},
                     {"p_high", c.p_high},
                     {"closed_low", c.closed_low},
                     {"p", c.p},
                     {"rho", c.rho},
                     {"verdict", to_string(c.verdict)},
                     {"first_stable", result.first_stable && *result.first_stable == i}});
  }
  json first = nullptr;
  if (result.first_stable) {
    const auto& c = result.candidates[*result.first_stable];
    first = {{"k", c.k}, {"p", c.p}, {"rho", c.rho}};
  }
  return {{"candidates", std::move(cands)}, {"first_stable", std::move(first)}};
}

json dwell_table_to_json(const DwellProbTable& table) {
  return {{"k", table.k}, {"rows", "battery"}, {"cols", "latent"},
          {"phi", matrix_json(table.probs)}};
}

json split_grid_to_json(const std::vector<PolicySplitEntry>& grid) {
  json out = json::array();
  for (const auto& e : grid) {
    out.push_back({{"tx_threshold", e.tx_threshold},
                   {"battery_capacity", e.battery_capacity},
                   {"greedy", {{"rho", e.greedy_rho}, {"verdict", to_string(e.greedy)}}},
                   {"dwell", {{"rho", e.dwell_rho}, {"verdict", to_string(e.dwell)}}},
                   {"split", e.split()}});
  }
  return out;
}

}  // namespace ehcs
