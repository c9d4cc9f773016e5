#include "pfac/verify.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <thread>

#include <fmt/format.h>

namespace pfac::verify {

bool InvariantReport::passed() const {
  if (checks.empty()) return false;
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.applicable && c.passed; });
}

const CheckResult* InvariantReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

namespace {

std::size_t first_index_at(const sim::Trajectory& traj, double t) {
  const auto it = std::lower_bound(traj.samples.begin(), traj.samples.end(), t - 1e-12,
                                   [](const sim::Sample& s, double v) { return s.t < v; });
  return static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - traj.samples.begin(),
                                                           static_cast<std::ptrdiff_t>(traj.samples.size()) - 1));
}

bool finite_below(const std::vector<double>& v, double bound) {
  return std::all_of(v.begin(), v.end(), [bound](double d) { return std::isfinite(d) && std::abs(d) < bound; });
}

}  // namespace

InvariantReport check_theorem1(const sim::Trajectory& traj, const Tolerances& tol) {
  InvariantReport r;
  const char* names[] = {"bounded", "tail_convergence", "gains_monotone_settled", "z_square_integral"};
  if (!traj.complete()) {
    for (const char* n : names) {
      CheckResult c;
      c.name = n;
      c.applicable = false;
      c.detail = traj.diverged ? "trajectory diverged: " + traj.failure : "empty trajectory";
      r.checks.push_back(c);
    }
    return r;
  }

  const auto& samples = traj.samples;
  const double T = samples.back().t;
  const std::size_t n = traj.n;
  const std::size_t m = samples.front().k.size();

  // (a) boundedness
  {
    CheckResult c;
    c.name = names[0];
    c.passed = true;
    r.max_abs_x.assign(n, 0.0);
    r.max_abs_k.assign(m, 0.0);
    double worst = 0.0;
    for (const auto& s : samples) {
      const bool ok = finite_below(s.x, tol.bound) && finite_below(s.z, tol.bound) && finite_below(s.k, tol.bound) &&
                      std::isfinite(s.u) && std::abs(s.u) < tol.bound && finite_below(s.psi, tol.bound);
      if (!ok && c.passed) {
        c.passed = false;
        c.at_time = s.t;
      }
      for (std::size_t i = 0; i < n; ++i) r.max_abs_x[i] = std::max(r.max_abs_x[i], std::abs(s.x[i]));
      for (std::size_t i = 0; i < m; ++i) r.max_abs_k[i] = std::max(r.max_abs_k[i], std::abs(s.k[i]));
      r.max_abs_u = std::max(r.max_abs_u, std::abs(s.u));
      for (double v : s.x) worst = std::max(worst, std::abs(v));
      for (double v : s.k) worst = std::max(worst, std::abs(v));
      worst = std::max(worst, std::abs(s.u));
    }
    c.worst_margin = tol.bound - worst;
    c.detail = fmt::format("largest |signal| = {}", worst);
    r.checks.push_back(c);
  }

  const std::size_t tail = first_index_at(traj, (1.0 - tol.tail_fraction) * T);
  const std::size_t prev = first_index_at(traj, (1.0 - 2.0 * tol.tail_fraction) * T);

  // (b) tail convergence of x (and z for the report)
  {
    CheckResult c;
    c.name = names[1];
    for (std::size_t j = tail; j < samples.size(); ++j) {
      for (double v : samples[j].x) {
        if (std::abs(v) > r.tail_x_inf) {
          r.tail_x_inf = std::abs(v);
          c.at_time = samples[j].t;
        }
      }
      for (double v : samples[j].z) r.tail_z_inf = std::max(r.tail_z_inf, std::abs(v));
    }
    c.worst_margin = tol.tol_x - r.tail_x_inf;
    c.passed = std::isfinite(r.tail_x_inf) && r.tail_x_inf <= tol.tol_x;
    c.detail = fmt::format("sup |x| over t >= {} is {} (tol {})", samples[tail].t, r.tail_x_inf, tol.tol_x);
    r.checks.push_back(c);
  }

  // (c) monotone, settled gains
  {
    CheckResult c;
    c.name = names[2];
    c.passed = true;
    double worst_drop = 0.0;
    for (std::size_t j = 1; j < samples.size(); ++j) {
      for (std::size_t i = 0; i < m; ++i) {
        const double drop = samples[j - 1].k[i] - samples[j].k[i];
        if (drop > worst_drop) {
          worst_drop = drop;
          if (drop > tol.monotone_slack) c.at_time = samples[j].t;
        }
      }
    }
    double worst_settle = 0.0;
    r.gain_settle_delta.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      r.gain_settle_delta[i] = samples.back().k[i] - samples[tail].k[i];
      worst_settle = std::max(worst_settle, r.gain_settle_delta[i]);
    }
    c.passed = worst_drop <= tol.monotone_slack && worst_settle <= tol.tol_k;
    c.worst_margin = std::min(tol.monotone_slack - worst_drop, tol.tol_k - worst_settle);
    c.detail = fmt::format("largest decrease {}, largest tail increase {} (tol {})", worst_drop, worst_settle,
                           tol.tol_k);
    r.checks.push_back(c);
  }

  // (d) int z^2 finite, tail increments shrinking, gamma int z^2 <= k(T) - k(0)
  {
    CheckResult c;
    c.name = names[3];
    c.passed = true;
    std::string detail;
    const auto& first = samples.front();
    const auto& last = samples.back();
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      const double total = last.z_sq_integral[i];
      const double inc_last = total - samples[tail].z_sq_integral[i];
      const double inc_prev = samples[tail].z_sq_integral[i] - samples[prev].z_sq_integral[i];
      if (!std::isfinite(total)) {
        c.passed = false;
        detail += fmt::format("int z{}^2 not finite; ", i + 1);
        continue;
      }
      const double shrink_margin = inc_prev + 1e-12 - inc_last;
      margin = std::min(margin, shrink_margin);
      if (shrink_margin < 0.0) {
        c.passed = false;
        detail += fmt::format("int z{}^2 tail increment {} exceeds previous {}; ", i + 1, inc_last, inc_prev);
      }
    }
    if (traj.deadzone == 0.0) {
      for (std::size_t g = 0; g < m && g < traj.gain_stage.size(); ++g) {
        const std::size_t st = traj.gain_stage[g];
        const double lhs = traj.gain_gamma[g] * (last.z_sq_integral[st] - first.z_sq_integral[st]);
        const double rhs = last.k[g] - first.k[g];
        const double gm = rhs * (1.0 + 1e-9) + 1e-12 - lhs;
        margin = std::min(margin, gm);
        if (gm < 0.0) {
          c.passed = false;
          detail += fmt::format("gamma int z^2 = {} exceeds gain growth {} for {}; ", lhs, rhs,
                                g < traj.gain_labels.size() ? traj.gain_labels[g] : std::to_string(g));
        }
      }
    }
    c.worst_margin = margin;
    c.detail = detail.empty() ? "integrals finite and settling" : detail;
    r.checks.push_back(c);
  }
  return r;
}

// ---------------------------------------------------------------------------

DominanceReport dominance_audit(const Backstepper& controller, const PlantSpec& plant, const OracleConstants& oracle,
                                const UncertaintyProfile& theta_box, std::size_t stage, std::size_t samples,
                                const AuditBox& box, std::uint64_t seed, double vartheta_override) {
  if (controller.mode() != PsiMode::Auto) throw std::logic_error("dominance audit needs auto psi synthesis");
  const std::size_t n = controller.order();
  if (stage < 2 || stage > n) throw std::invalid_argument("dominance audit: stage must be in 2..n");
  if (plant.n != n) throw std::invalid_argument("dominance audit: plant order mismatch");

  DominanceReport r;
  r.stage = stage;
  r.samples = samples;
  r.min_slack = std::numeric_limits<double>::infinity();
  const double vartheta = vartheta_override >= 0.0 ? vartheta_override : oracle.vartheta(stage);
  const auto& gamma = controller.params().gamma;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> zdist(-box.z_max, box.z_max);
  std::uniform_real_distribution<double> kdist(box.k_min, box.k_max);
  std::vector<double> z(n);
  std::vector<double> k(n);
  std::vector<double> theta(theta_box.size());

  for (std::size_t s = 0; s < samples; ++s) {
    for (auto& v : z) v = zdist(rng);
    for (auto& v : k) v = kdist(rng);
    for (std::size_t c = 0; c < theta.size(); ++c) {
      const auto& comp = theta_box.components()[c];
      theta[c] = std::uniform_real_distribution<double>(comp.lower, comp.upper)(rng);
    }
    const auto x = controller.reconstruct(z, k);
    const auto tr = controller.trace<double>(stage, std::span<const double>(x), std::span<const double>(k));
    const std::span<const double> xs(x);

    double lhs = std::abs(plant.drift[stage - 1](xs.first(stage), theta));
    for (std::size_t j = 0; j + 1 < stage; ++j) {
      const double phi_j = plant.drift[j](xs.first(j + 1), theta);
      const double g_j = plant.gain[j](xs.first(j + 2), theta);
      lhs += std::abs(tr.d_alpha_dx[j]) * (std::abs(phi_j) + g_j * std::abs(x[j + 1]));
      lhs += gamma[j] * std::abs(tr.d_alpha_dk[j]) * tr.psi[j] * tr.psi[j] * tr.z[j] * tr.z[j];
    }
    double zsum = 0.0;
    for (std::size_t j = 0; j < stage; ++j) zsum += std::abs(tr.z[j]);
    const double rhs = vartheta * tr.eta[stage - 1] * zsum;
    const double slack = rhs - lhs;
    if (lhs > rhs * (1.0 + 1e-12)) ++r.violations;
    if (slack < r.min_slack) {
      r.min_slack = slack;
      r.worst_z = z;
      r.worst_k = k;
      r.worst_theta = theta;
    }
  }
  return r;
}

// ---------------------------------------------------------------------------

BudgetReport lyapunov_budget(const sim::Trajectory& traj, const OracleConstants& oracle, std::span<const double> mu,
                             std::span<const double> gamma, double slack) {
  BudgetReport r;
  const std::size_t n = traj.n;
  if (!traj.complete() || oracle.order() != n || mu.size() != n || gamma.size() != n ||
      traj.samples.front().k.size() != n) {
    r.applicable = false;
    return r;
  }
  r.epsilon = oracle.epsilon();
  auto affine = [&](const std::vector<double>& k) {
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      v += -0.5 * oracle.b[i] * mu[i] / gamma[i] * k[i] * k[i] + 2.0 * r.epsilon * k[i] / gamma[i];
    }
    return v;
  };
  auto lyap = [](const std::vector<double>& z) {
    double v = 0.0;
    for (double e : z) v += 0.5 * e * e;
    return v;
  };
  const auto& s0 = traj.samples.front();
  r.c0 = lyap(s0.z) - affine(s0.k);
  r.max_violation = -std::numeric_limits<double>::infinity();
  for (const auto& s : traj.samples) {
    const double viol = lyap(s.z) - (affine(s.k) + r.c0);
    if (viol > r.max_violation) {
      r.max_violation = viol;
      r.at_time = s.t;
    }
  }
  r.samples = traj.samples.size();
  r.passed = r.max_violation <= slack;
  return r;
}

// ---------------------------------------------------------------------------

MonteCarloDraw monte_carlo_draw(const MonteCarloSpec& spec, std::size_t index) {
  if (spec.x0_lower.size() != spec.x0_upper.size() || spec.theta_lower.size() != spec.theta_upper.size()) {
    throw std::invalid_argument("monte carlo: box bounds size mismatch");
  }
  std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                    static_cast<std::uint32_t>(index)};
  std::mt19937_64 rng(seq);
  MonteCarloDraw d;
  d.index = index;
  d.seed = rng();
  for (std::size_t i = 0; i < spec.x0_lower.size(); ++i) {
    d.x0.push_back(std::uniform_real_distribution<double>(spec.x0_lower[i], spec.x0_upper[i])(rng));
  }
  std::vector<ProfileComponent> comps;
  for (std::size_t i = 0; i < spec.theta_lower.size(); ++i) {
    const double lo = spec.theta_lower[i];
    const double hi = spec.theta_upper[i];
    const double center = std::uniform_real_distribution<double>(lo, hi)(rng);
    const double room = std::min(center - lo, hi - center);
    const double amp = std::uniform_real_distribution<double>(0.0, std::max(room, 0.0))(rng);
    const double omega = std::uniform_real_distribution<double>(0.1, 2.0)(rng);
    const double phase = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
    comps.push_back(ProfileComponent::sinusoid(fmt::format("theta{}", i + 1), center, amp, omega, phase, lo, hi));
  }
  d.theta = UncertaintyProfile(std::move(comps));
  return d;
}

MonteCarloReport monte_carlo(const MonteCarloSpec& spec,
                             const std::function<sim::Trajectory(const MonteCarloDraw&)>& simulate,
                             const Tolerances& tol) {
  if (spec.runs == 0) throw std::invalid_argument("monte carlo: need at least one run");
  MonteCarloReport report;
  report.runs = spec.runs;
  report.seed = spec.seed;
  report.results.resize(spec.runs);

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < spec.runs; i = next++) {
      MonteCarloRun run;
      run.draw = monte_carlo_draw(spec, i);
      try {
        const sim::Trajectory traj = simulate(run.draw);
        run.completed = traj.complete();
        const auto inv = check_theorem1(traj, tol);
        run.passed = inv.passed();
        run.tail_x_inf = inv.tail_x_inf;
        if (!traj.samples.empty()) run.final_k = traj.samples.back().k;
        if (traj.diverged) run.failure = traj.failure;
      } catch (const std::exception& e) {
        run.failure = e.what();
      }
      report.results[i] = std::move(run);
    }
  };

  unsigned workers = spec.workers ? spec.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, spec.runs));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (const auto& r : report.results) report.passed += r.passed ? 1 : 0;
  return report;
}

// ---------------------------------------------------------------------------

namespace {
nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
}
}  // namespace

nlohmann::json to_json(const InvariantReport& r) {
  nlohmann::json j;
  j["passed"] = r.passed();
  for (const auto& c : r.checks) {
    j["checks"].push_back({{"name", c.name},
                           {"applicable", c.applicable},
                           {"passed", c.passed},
                           {"worst_margin", number(c.worst_margin)},
                           {"at_time", c.at_time},
                           {"detail", c.detail}});
  }
  j["tail_x_inf"] = r.tail_x_inf;
  j["tail_z_inf"] = r.tail_z_inf;
  j["gain_settle_delta"] = r.gain_settle_delta;
  j["max_abs"] = {{"x", r.max_abs_x}, {"k", r.max_abs_k}, {"u", r.max_abs_u}};
  return j;
}

nlohmann::json to_json(const DominanceReport& r) {
  return {{"stage", r.stage},       {"samples", r.samples},         {"violations", r.violations},
          {"min_slack", number(r.min_slack)}, {"worst_z", r.worst_z}, {"worst_k", r.worst_k},
          {"worst_theta", r.worst_theta}};
}

nlohmann::json to_json(const BudgetReport& r) {
  return {{"applicable", r.applicable},
          {"passed", r.passed},
          {"epsilon", r.epsilon},
          {"c0", r.c0},
          {"max_violation", number(r.max_violation)},
          {"at_time", r.at_time},
          {"samples", r.samples}};
}

nlohmann::json to_json(const MonteCarloReport& r) {
  nlohmann::json j;
  j["runs"] = r.runs;
  j["passed"] = r.passed;
  j["seed"] = r.seed;
  j["pass_rate"] = r.pass_rate();
  j["results"] = nlohmann::json::array();
  for (const auto& run : r.results) {
    j["results"].push_back({{"index", run.draw.index},
                            {"x0", run.draw.x0},
                            {"completed", run.completed},
                            {"passed", run.passed},
                            {"tail_x_inf", run.tail_x_inf},
                            {"final_k", run.final_k},
                            {"failure", run.failure}});
  }
  return j;
}

}  // namespace pfac::verify
