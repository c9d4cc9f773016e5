#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <regex>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace pfac::cli {
namespace {

[[noreturn]] void fail(const std::string& key, const std::string& msg) {
  throw ConfigError(fmt::format("key '{}': {}", key, msg));
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_real(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) fail(key, fmt::format("'{}' is not a finite number", text));
  return v;
}

long long parse_int(const std::string& key, const std::string& text) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) fail(key, fmt::format("'{}' is not an integer", text));
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true") return true;
  if (text == "false") return false;
  fail(key, fmt::format("'{}' is not a boolean (true/false)", text));
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::string body = text;
  if (!body.empty() && body.front() == '[') {
    if (body.back() != ']') fail(key, "unbalanced '['");
    body = body.substr(1, body.size() - 2);
  }
  std::vector<double> out;
  if (trim(body).empty()) return out;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_real(key, trim(item)));
  return out;
}

std::string fmt_real(double v) { return fmt::format("{}", v); }
std::string fmt_list(const std::vector<double>& v) { return fmt::format("{}", fmt::join(v, ", ")); }

void require(bool ok, const std::string& key, const std::string& msg) {
  if (!ok) fail(key, msg);
}

void all_positive(const std::vector<double>& v, const std::string& key) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0)) fail(fmt::format("{}[{}]", key, i), fmt::format("must be > 0, got {}", v[i]));
  }
}

struct Key {
  std::string name;
  std::string type;
  std::string doc;
  std::function<void(RunConfig&, const std::string& key, const std::string& value)> set;
  std::function<std::string(const RunConfig&)> get;
  bool hashed = true;
};

Key real_key(std::string name, std::string doc, double ScenarioConfig::*field, bool strictly_positive) {
  Key k{std::move(name), "real", std::move(doc), nullptr, nullptr};
  k.set = [field, strictly_positive](RunConfig& c, const std::string& key, const std::string& v) {
    const double x = parse_real(key, v);
    if (strictly_positive) require(x > 0.0, key, fmt::format("must be > 0, got {}", x));
    else require(x >= 0.0, key, fmt::format("must be >= 0, got {}", x));
    c.scenario.*field = x;
  };
  k.get = [field](const RunConfig& c) { return fmt_real(c.scenario.*field); };
  return k;
}

Key positive_list_key(std::string name, std::string doc, std::vector<double> ScenarioConfig::*field) {
  Key k{std::move(name), "real list", std::move(doc), nullptr, nullptr};
  k.set = [field](RunConfig& c, const std::string& key, const std::string& v) {
    auto list = parse_list(key, v);
    require(!list.empty(), key, "must not be empty");
    all_positive(list, key);
    c.scenario.*field = std::move(list);
  };
  k.get = [field](const RunConfig& c) { return fmt_list(c.scenario.*field); };
  return k;
}

Key sweep_list_key(std::string name, std::string doc, std::vector<double> SweepBox::*field) {
  Key k{std::move(name), "real list", std::move(doc), nullptr, nullptr};
  k.set = [field](RunConfig& c, const std::string& key, const std::string& v) { c.sweep.*field = parse_list(key, v); };
  k.get = [field](const RunConfig& c) { return fmt_list(c.sweep.*field); };
  return k;
}

const std::vector<Key>& schema() {
  static const std::vector<Key> keys = [] {
    std::vector<Key> s;
    s.push_back({"scenario", "string", "numeric-2d | stt-missile",
                 [](RunConfig&, const std::string&, const std::string&) {},  // handled up front
                 [](const RunConfig& c) { return c.scenario.scenario; }});
    s.push_back({"controller.mode", "string", "paper (closed-form psi) | auto (synthesized psi)",
                 [](RunConfig& c, const std::string& key, const std::string& v) {
                   if (v == "paper") c.scenario.mode = PsiMode::Paper;
                   else if (v == "auto") c.scenario.mode = PsiMode::Auto;
                   else fail(key, fmt::format("'{}' is not one of paper, auto", v));
                 },
                 [](const RunConfig& c) { return std::string(c.scenario.mode == PsiMode::Auto ? "auto" : "paper"); }});
    s.push_back(positive_list_key("controller.mu", "mu_i > 0, one per adaptive stage", &ScenarioConfig::mu));
    s.push_back(positive_list_key("controller.gamma", "gamma_i > 0, one per adaptive stage", &ScenarioConfig::gamma));
    s.push_back(positive_list_key("controller.k0", "k_i(0) > 0, one per adaptive stage", &ScenarioConfig::k0));
    s.push_back(real_key("controller.deadzone", "delta >= 0; k_i' = 0 while |z_i| < delta", &ScenarioConfig::deadzone,
                         false));
    s.push_back(real_key("controller.smoothing", "eps_s > 0 of the smooth absolute value", &ScenarioConfig::smoothing,
                         true));
    s.push_back({"controller.psi_power", "int", "p in alpha_i = -mu_i k_i psi_i^p z_i: 1, 2, or 0 for the default",
                 [](RunConfig& c, const std::string& key, const std::string& v) {
                   const auto p = parse_int(key, v);
                   require(p == 0 || p == 1 || p == 2, key, "must be 0, 1 or 2");
                   c.scenario.psi_power = static_cast<int>(p);
                 },
                 [](const RunConfig& c) { return std::to_string(c.scenario.psi_power); }});
    s.push_back({"controller.sabotage", "bool", "negate the control signal (negative-control runs only)",
                 [](RunConfig& c, const std::string& key, const std::string& v) {
                   c.scenario.sabotage = parse_bool(key, v);
                 },
                 [](const RunConfig& c) { return std::string(c.scenario.sabotage ? "true" : "false"); }});
    s.push_back(real_key("missile.k1", "first-stage gain k1 > 3 eps / 4", &ScenarioConfig::missile_k1, true));
    s.push_back(real_key("missile.epsilon", "Young's-inequality constant eps > 0", &ScenarioConfig::missile_epsilon,
                         true));
    s.push_back(real_key("missile.xi", "upper shape xi > 0 of the moment slope", &ScenarioConfig::missile_xi, true));
    s.push_back(real_key("missile.s", "reference area [m^2]", &ScenarioConfig::missile_s, true));
    s.push_back(real_key("missile.l", "reference length [m]", &ScenarioConfig::missile_l, true));
    s.push_back(real_key("missile.Jx", "roll inertia [kg m^2]", &ScenarioConfig::missile_Jx, true));
    s.push_back(real_key("missile.tau_a", "actuator time constant [s], > 0", &ScenarioConfig::missile_tau_a, true));
    s.push_back(real_key("missile.rho_air", "air density [kg/m^3]", &ScenarioConfig::missile_rho_air, true));
    s.push_back(real_key("sim.horizon", "T [s]", &ScenarioConfig::horizon, true));
    s.push_back(real_key("sim.step", "RK4 step h [s]", &ScenarioConfig::step, true));
    s.push_back({"sim.decimation", "int", "record every N-th step (N >= 1)",
                 [](RunConfig& c, const std::string& key, const std::string& v) {
                   const auto n = parse_int(key, v);
                   require(n >= 1, key, "must be >= 1");
                   c.scenario.decimation = static_cast<std::size_t>(n);
                 },
                 [](const RunConfig& c) { return std::to_string(c.scenario.decimation); }});
    s.push_back({"init.x", "real list", "x(0), one entry per state",
                 [](RunConfig& c, const std::string& key, const std::string& v) { c.scenario.x0 = parse_list(key, v); },
                 [](const RunConfig& c) { return fmt_list(c.scenario.x0); }});
    s.push_back({"init.units", "string", "rad | deg (angles of init.x)",
                 [](RunConfig& c, const std::string& key, const std::string& v) {
                   if (v == "rad") c.scenario.angle_unit = AngleUnit::Radian;
                   else if (v == "deg") c.scenario.angle_unit = AngleUnit::Degree;
                   else fail(key, fmt::format("'{}' is not one of rad, deg", v));
                 },
                 [](const RunConfig& c) {
                   return std::string(c.scenario.angle_unit == AngleUnit::Degree ? "deg" : "rad");
                 }});
    s.push_back({"verify.tol_x", "real", "tail sup-norm threshold of x",
                 [](RunConfig& c, const std::string& key, const std::string& v) {
                   c.scenario.tolerances.tol_x = parse_real(key, v);
                   require(c.scenario.tolerances.tol_x > 0.0, key, "must be > 0");
                 },
                 [](const RunConfig& c) { return fmt_real(c.scenario.tolerances.tol_x); }});
    s.push_back({"verify.tol_k", "real", "gain settling threshold",
                 [](RunConfig& c, const std::string& key, const std::string& v) {
                   c.scenario.tolerances.tol_k = parse_real(key, v);
                   require(c.scenario.tolerances.tol_k > 0.0, key, "must be > 0");
                 },
                 [](const RunConfig& c) { return fmt_real(c.scenario.tolerances.tol_k); }});
    s.push_back({"verify.bound", "real", "boundedness threshold for every signal",
                 [](RunConfig& c, const std::string& key, const std::string& v) {
                   c.scenario.tolerances.bound = parse_real(key, v);
                   require(c.scenario.tolerances.bound > 0.0, key, "must be > 0");
                 },
                 [](const RunConfig& c) { return fmt_real(c.scenario.tolerances.bound); }});
    s.push_back({"verify.dominance_samples", "int", "samples of the dominance audit (auto mode)",
                 [](RunConfig& c, const std::string& key, const std::string& v) {
                   const auto n = parse_int(key, v);
                   require(n >= 1, key, "must be >= 1");
                   c.scenario.dominance_samples = static_cast<std::size_t>(n);
                 },
                 [](const RunConfig& c) { return std::to_string(c.scenario.dominance_samples); }});
    s.push_back({"verify.audit_z_max", "real", "audit box |z_i| <= z_max",
                 [](RunConfig& c, const std::string& key, const std::string& v) {
                   c.scenario.audit_box.z_max = parse_real(key, v);
                   require(c.scenario.audit_box.z_max > 0.0, key, "must be > 0");
                 },
                 [](const RunConfig& c) { return fmt_real(c.scenario.audit_box.z_max); }});
    s.push_back({"verify.audit_k", "real list", "audit box k_i in [k_min, k_max]",
                 [](RunConfig& c, const std::string& key, const std::string& v) {
                   const auto r = parse_list(key, v);
                   require(r.size() == 2 && r[0] > 0.0 && r[0] <= r[1], key, "must be 'k_min, k_max' with 0 < k_min <= k_max");
                   c.scenario.audit_box.k_min = r[0];
                   c.scenario.audit_box.k_max = r[1];
                 },
                 [](const RunConfig& c) {
                   return fmt_list({c.scenario.audit_box.k_min, c.scenario.audit_box.k_max});
                 }});
    s.push_back(real_key("verify.budget_slack", "absolute slack of the Lyapunov budget", &ScenarioConfig::budget_slack,
                         false));
    s.push_back(real_key("verify.roll_window_start", "missile: start of the |roll| check window [s]",
                         &ScenarioConfig::roll_window_start, false));
    s.push_back(real_key("verify.roll_tol_deg", "missile: |roll| bound inside the window [deg]",
                         &ScenarioConfig::roll_tol_deg, true));
    s.push_back(sweep_list_key("montecarlo.x0_lower", "lower corner of the x(0) box", &SweepBox::x0_lower));
    s.push_back(sweep_list_key("montecarlo.x0_upper", "upper corner of the x(0) box", &SweepBox::x0_upper));
    s.push_back(sweep_list_key("montecarlo.theta_lower", "lower corner of the theta box", &SweepBox::theta_lower));
    s.push_back(sweep_list_key("montecarlo.theta_upper", "upper corner of the theta box", &SweepBox::theta_upper));
    s.push_back({"montecarlo.workers", "int", "worker threads, 0 = hardware concurrency",
                 [](RunConfig& c, const std::string& key, const std::string& v) {
                   const auto n = parse_int(key, v);
                   require(n >= 0, key, "must be >= 0");
                   c.sweep.workers = static_cast<unsigned>(n);
                 },
                 [](const RunConfig& c) { return std::to_string(c.sweep.workers); }, false});
    s.push_back({"seed", "int", "seed of every random draw (>= 0)",
                 [](RunConfig& c, const std::string& key, const std::string& v) {
                   const auto n = parse_int(key, v);
                   require(n >= 0, key, "must be >= 0");
                   c.scenario.seed = static_cast<std::uint64_t>(n);
                 },
                 [](const RunConfig& c) { return std::to_string(c.scenario.seed); }});
    s.push_back({"output.dir", "string", "run registry directory",
                 [](RunConfig& c, const std::string& key, const std::string& v) {
                   require(!v.empty(), key, "must not be empty");
                   c.scenario.output_dir = v;
                 },
                 [](const RunConfig& c) { return c.scenario.output_dir; }, false});
    return s;
  }();
  return keys;
}

const char* kThetaFields[] = {"name", "kind", "offset", "amplitude", "omega", "phase",
                              "lower", "upper", "step_times", "step_values"};

void set_theta_field(ProfileComponent& p, const std::string& field, const std::string& key, const std::string& v) {
  if (field == "name") {
    p.name = v;
  } else if (field == "kind") {
    if (v == "constant") p.kind = ProfileComponent::Kind::Constant;
    else if (v == "sinusoid") p.kind = ProfileComponent::Kind::Sinusoid;
    else if (v == "steps") p.kind = ProfileComponent::Kind::Steps;
    else fail(key, fmt::format("'{}' is not one of constant, sinusoid, steps", v));
  } else if (field == "offset") {
    p.offset = parse_real(key, v);
  } else if (field == "amplitude") {
    p.amplitude = parse_real(key, v);
  } else if (field == "omega") {
    p.omega = parse_real(key, v);
  } else if (field == "phase") {
    p.phase = parse_real(key, v);
  } else if (field == "lower") {
    p.lower = parse_real(key, v);
  } else if (field == "upper") {
    p.upper = parse_real(key, v);
  } else if (field == "step_times") {
    p.step_times = parse_list(key, v);
  } else {
    p.step_values = parse_list(key, v);
  }
}

const char* kind_name(ProfileComponent::Kind k) {
  switch (k) {
    case ProfileComponent::Kind::Sinusoid: return "sinusoid";
    case ProfileComponent::Kind::Steps: return "steps";
    default: return "constant";
  }
}

struct Entry {
  std::string value;
  int line = 0;
};

std::string render(const RunConfig& cfg, bool hashed_only) {
  std::string out;
  for (const auto& k : schema()) {
    if (hashed_only && !k.hashed) continue;
    out += fmt::format("{} = {}\n", k.name, k.get(cfg));
  }
  for (std::size_t i = 0; i < cfg.scenario.theta.size(); ++i) {
    const auto& p = cfg.scenario.theta[i];
    const auto pre = fmt::format("theta.{}.", i + 1);
    out += fmt::format("{}name = {}\n", pre, p.name);
    out += fmt::format("{}kind = {}\n", pre, kind_name(p.kind));
    out += fmt::format("{}offset = {}\n", pre, fmt_real(p.offset));
    out += fmt::format("{}amplitude = {}\n", pre, fmt_real(p.amplitude));
    out += fmt::format("{}omega = {}\n", pre, fmt_real(p.omega));
    out += fmt::format("{}phase = {}\n", pre, fmt_real(p.phase));
    out += fmt::format("{}lower = {}\n", pre, fmt_real(p.lower));
    out += fmt::format("{}upper = {}\n", pre, fmt_real(p.upper));
    out += fmt::format("{}step_times = {}\n", pre, fmt_list(p.step_times));
    out += fmt::format("{}step_values = {}\n", pre, fmt_list(p.step_values));
  }
  return out;
}

}  // namespace

SweepBox default_sweep(const ScenarioConfig& cfg) {
  SweepBox box;
  if (cfg.scenario == "numeric-2d") {
    box.x0_lower = {-3.0, -3.0};
    box.x0_upper = {3.0, 3.0};
    box.theta_lower = {0.8, 1.6};
    box.theta_upper = {1.2, 2.4};
  } else {
    // roll in [-10, 10] deg, rate and deflection start at rest
    const double ten_deg = 10.0 * std::numbers::pi / 180.0;
    const bool deg = cfg.angle_unit == AngleUnit::Degree;
    box.x0_lower = {deg ? -10.0 : -ten_deg, 0.0, 0.0};
    box.x0_upper = {deg ? 10.0 : ten_deg, 0.0, 0.0};
    for (const auto& c : cfg.theta) {
      box.theta_lower.push_back(c.lower);
      box.theta_upper.push_back(c.upper);
    }
  }
  return box;
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  std::map<std::string, Entry> entries;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(fmt::format("{}:{}: expected 'key = value'", origin, line_no));
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(fmt::format("{}:{}: empty key", origin, line_no));
    if (auto it = entries.find(key); it != entries.end()) {
      throw ConfigError(fmt::format("{}:{}: key '{}' already set on line {}", origin, line_no, key, it->second.line));
    }
    entries.emplace(key, Entry{value, line_no});
  }

  auto located = [&](const std::string& key, const ConfigError& e) {
    return ConfigError(fmt::format("{}:{}: {}", origin, entries.at(key).line, e.what()));
  };

  RunConfig cfg;
  const std::string scenario = entries.count("scenario") ? entries.at("scenario").value : "numeric-2d";
  try {
    cfg.scenario = default_config(scenario);
  } catch (const ConfigError&) {
    const auto names = registered_scenarios();
    throw ConfigError(fmt::format("{}: key 'scenario': unknown scenario '{}' (known: {})", origin, scenario,
                                  fmt::join(names, ", ")));
  }

  static const std::regex theta_re(R"(theta\.([1-9][0-9]?)\.([a-z_]+))");
  std::map<std::size_t, std::vector<std::string>> theta_keys;
  for (const auto& [key, entry] : entries) {
    std::smatch m;
    if (std::regex_match(key, m, theta_re)) {
      const std::string field = m[2];
      if (std::find(std::begin(kThetaFields), std::end(kThetaFields), field) == std::end(kThetaFields)) {
        throw located(key, ConfigError(fmt::format("key '{}': unknown theta field '{}'", key, field)));
      }
      theta_keys[std::stoul(m[1])].push_back(key);
      continue;
    }
    const auto& keys = schema();
    const auto it = std::find_if(keys.begin(), keys.end(), [&](const Key& k) { return k.name == key; });
    if (it == keys.end()) throw located(key, ConfigError(fmt::format("key '{}': unknown key", key)));
    try {
      it->set(cfg, key, entry.value);
    } catch (const ConfigError& e) {
      throw located(key, e);
    }
  }

  if (!theta_keys.empty()) {
    if (theta_keys.rbegin()->first != theta_keys.size()) {
      throw ConfigError(fmt::format("{}: theta components must be numbered 1..m without gaps", origin));
    }
    std::vector<ProfileComponent> comps(theta_keys.size());
    for (const auto& [index, keys] : theta_keys) {
      auto& p = comps[index - 1];
      p.name = fmt::format("theta{}", index);
      for (const auto& key : keys) {
        try {
          set_theta_field(p, key.substr(key.rfind('.') + 1), key, entries.at(key).value);
        } catch (const ConfigError& e) {
          throw located(key, e);
        }
      }
    }
    cfg.scenario.theta = std::move(comps);
  }

  const SweepBox defaults = default_sweep(cfg.scenario);
  if (cfg.sweep.x0_lower.empty()) cfg.sweep.x0_lower = defaults.x0_lower;
  if (cfg.sweep.x0_upper.empty()) cfg.sweep.x0_upper = defaults.x0_upper;
  if (cfg.sweep.theta_lower.empty()) cfg.sweep.theta_lower = defaults.theta_lower;
  if (cfg.sweep.theta_upper.empty()) cfg.sweep.theta_upper = defaults.theta_upper;
  if (cfg.sweep.x0_lower.size() != cfg.sweep.x0_upper.size() ||
      cfg.sweep.theta_lower.size() != cfg.sweep.theta_upper.size()) {
    throw ConfigError(fmt::format("{}: montecarlo box corners differ in size", origin));
  }
  for (std::size_t i = 0; i < cfg.sweep.x0_lower.size(); ++i) {
    if (cfg.sweep.x0_lower[i] > cfg.sweep.x0_upper[i]) {
      throw ConfigError(fmt::format("{}: key 'montecarlo.x0_lower[{}]': exceeds the upper corner", origin, i));
    }
  }
  for (std::size_t i = 0; i < cfg.sweep.theta_lower.size(); ++i) {
    if (cfg.sweep.theta_lower[i] > cfg.sweep.theta_upper[i]) {
      throw ConfigError(fmt::format("{}: key 'montecarlo.theta_lower[{}]': exceeds the upper corner", origin, i));
    }
  }
  if (cfg.scenario.step > cfg.scenario.horizon) {
    throw ConfigError(fmt::format("{}: key 'sim.step': larger than sim.horizon", origin));
  }

  // Cross-key consistency (vector sizes, theta boxes, design constraints).
  try {
    (void)build_scenario(cfg.scenario);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("{}: {}", origin, e.what()));
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot read config file '{}'", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string to_text(const RunConfig& cfg) { return render(cfg, false); }

std::string config_hash(const RunConfig& cfg) {
  const std::string text = render(cfg, true);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

std::vector<std::string> schema_lines() {
  std::vector<std::string> out;
  for (const auto& k : schema()) out.push_back(fmt::format("{:<26} {:<10} {}", k.name, k.type, k.doc));
  out.push_back(fmt::format("{:<26} {:<10} {}", "theta.<i>.<field>", "mixed",
                            "uncertainty component i = 1..m; fields: name, kind (constant|sinusoid|steps), offset, "
                            "amplitude, omega, phase, lower, upper, step_times, step_values"));
  return out;
}

}  // namespace pfac::cli
