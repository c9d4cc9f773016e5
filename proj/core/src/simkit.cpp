#include "pfac/simkit.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>

namespace pfac::sim {
namespace {

void require_finite(std::span<const double> v, double t, std::span<const double> state, const char* where) {
  for (double d : v) {
    if (!std::isfinite(d)) {
      throw DivergenceError(fmt::format("non-finite {} at t = {}", where, t),
                            t, std::vector<double>(state.begin(), state.end()));
    }
  }
}

}  // namespace

void Rk4::step(const OdeRhs& rhs, std::span<double> y, double t, double h) {
  const std::size_t n = y.size();
  rhs(t, y, k1_);
  require_finite(k1_, t, y, "stage 1 derivative");
  for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + 0.5 * h * k1_[i];
  rhs(t + 0.5 * h, tmp_, k2_);
  require_finite(k2_, t, y, "stage 2 derivative");
  for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + 0.5 * h * k2_[i];
  rhs(t + 0.5 * h, tmp_, k3_);
  require_finite(k3_, t, y, "stage 3 derivative");
  for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + h * k3_[i];
  rhs(t + h, tmp_, k4_);
  require_finite(k4_, t, y, "stage 4 derivative");
  for (std::size_t i = 0; i < n; ++i) y[i] += h / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
}

std::vector<double> rk4_step(const OdeRhs& rhs, std::span<const double> y, double t, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("rk4_step: step must be positive");
  std::vector<double> out(y.begin(), y.end());
  Rk4 stepper(y.size());
  stepper.step(rhs, out, t, h);
  return out;
}

void IntegratorSettings::validate() const {
  if (!(horizon > 0.0)) throw std::invalid_argument("integrator: horizon must be positive");
  if (!(step > 0.0)) throw std::invalid_argument("integrator: step must be positive");
  if (decimation == 0) throw std::invalid_argument("integrator: decimation must be at least 1");
  if (!(divergence_threshold > 0.0)) throw std::invalid_argument("integrator: bad divergence threshold");
}

std::size_t IntegratorSettings::steps() const { return static_cast<std::size_t>(std::llround(horizon / step)); }

Trajectory integrate(const ClosedLoopModel& model, std::span<const double> x0, std::span<const double> k0,
                     const IntegratorSettings& settings) {
  settings.validate();
  const std::size_t n = model.n;
  const std::size_t m = model.gains;
  if (x0.size() != n || k0.size() != m) throw std::invalid_argument("integrate: initial state size mismatch");

  Trajectory traj;
  traj.scenario = model.scenario;
  traj.step = settings.step;
  traj.horizon = settings.horizon;
  traj.decimation = settings.decimation;
  traj.n = n;
  traj.gain_labels = model.gain_labels;
  traj.psi_labels = model.psi_labels;
  traj.eta_labels = model.eta_labels;
  traj.gain_stage = model.gain_stage;
  traj.gain_gamma = model.gain_gamma;
  traj.deadzone = model.deadzone;

  // y = [x (n) | k (m) | int z^2 (n)]
  const std::size_t dim = 2 * n + m;
  std::vector<double> y(dim, 0.0);
  std::copy(x0.begin(), x0.end(), y.begin());
  std::copy(k0.begin(), k0.end(), y.begin() + static_cast<std::ptrdiff_t>(n));

  const OdeRhs rhs = [&](double t, std::span<const double> s, std::span<double> dy) {
    const auto x = s.first(n);
    const auto k = s.subspan(n, m);
    const ControlOutput c = model.controller(t, x, k);
    model.plant(t, x, c.u, dy.first(n));
    for (std::size_t j = 0; j < m; ++j) dy[n + j] = c.gain_rates[j];
    for (std::size_t i = 0; i < n; ++i) dy[n + m + i] = c.z[i] * c.z[i];
  };

  auto record = [&](double t) {
    const std::span<const double> s(y);
    const ControlOutput c = model.controller(t, s.first(n), s.subspan(n, m));
    Sample smp;
    smp.t = t;
    smp.x.assign(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n));
    smp.k.assign(y.begin() + static_cast<std::ptrdiff_t>(n), y.begin() + static_cast<std::ptrdiff_t>(n + m));
    smp.z_sq_integral.assign(y.begin() + static_cast<std::ptrdiff_t>(n + m), y.end());
    smp.z = c.z;
    smp.u = c.u;
    smp.psi = c.psi;
    smp.eta = c.eta;
    traj.samples.push_back(std::move(smp));
  };

  const std::size_t steps = settings.steps();
  traj.samples.reserve(steps / settings.decimation + 1);
  Rk4 stepper(dim);
  try {
    record(0.0);
    for (std::size_t j = 0; j < steps; ++j) {
      const double t = static_cast<double>(j) * settings.step;
      stepper.step(rhs, y, t, settings.step);
      for (double v : y) {
        if (!(std::abs(v) <= settings.divergence_threshold)) {
          throw DivergenceError(fmt::format("state magnitude exceeded {} at t = {}", settings.divergence_threshold,
                                            t + settings.step),
                                t + settings.step, y);
        }
      }
      if ((j + 1) % settings.decimation == 0) record(static_cast<double>(j + 1) * settings.step);
    }
  } catch (const DivergenceError& e) {
    traj.diverged = true;
    traj.failure = e.what();
    traj.failure_time = e.time();
  }
  return traj;
}

std::vector<std::string> csv_header(const Trajectory& traj, const std::vector<CsvColumn>& extra) {
  std::vector<std::string> h{"t"};
  for (std::size_t i = 0; i < traj.n; ++i) h.push_back(fmt::format("x{}", i + 1));
  for (std::size_t i = 0; i < traj.n; ++i) h.push_back(fmt::format("z{}", i + 1));
  for (const auto& g : traj.gain_labels) h.push_back(g);
  h.emplace_back("u");
  for (const auto& p : traj.psi_labels) h.push_back(p);
  for (const auto& e : traj.eta_labels) h.push_back(e);
  for (const auto& c : extra) h.push_back(c.name);
  return h;
}

void write_csv(const Trajectory& traj, std::ostream& out, const std::vector<CsvColumn>& extra) {
  const auto header = csv_header(traj, extra);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  fmt::memory_buffer buf;
  auto put = [&](double v) { fmt::format_to(std::back_inserter(buf), ",{}", v); };
  for (const auto& s : traj.samples) {
    buf.clear();
    fmt::format_to(std::back_inserter(buf), "{}", s.t);
    for (double v : s.x) put(v);
    for (double v : s.z) put(v);
    for (double v : s.k) put(v);
    put(s.u);
    for (std::size_t i = 0; i < traj.psi_labels.size(); ++i) put(i < s.psi.size() ? s.psi[i] : NAN);
    // eta labels cover stages 2..n; the snapshot stores eta_1 = 0 in front.
    const std::size_t eta_offset = s.eta.size() > traj.eta_labels.size() ? s.eta.size() - traj.eta_labels.size() : 0;
    for (std::size_t i = 0; i < traj.eta_labels.size(); ++i) {
      put(i + eta_offset < s.eta.size() ? s.eta[i + eta_offset] : NAN);
    }
    for (const auto& c : extra) put(c.value(s));
    buf.push_back('\n');
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
}

double tail_sup_norm_x(const Trajectory& traj, double t_from) {
  double m = 0.0;
  for (const auto& s : traj.samples) {
    if (s.t + 1e-12 < t_from) continue;
    for (double v : s.x) m = std::max(m, std::abs(v));
  }
  return m;
}

nlohmann::json summary_json(const Trajectory& traj) {
  nlohmann::json j;
  j["scenario"] = traj.scenario;
  j["seed"] = traj.seed;
  j["step"] = traj.step;
  j["horizon"] = traj.horizon;
  j["decimation"] = traj.decimation;
  j["samples"] = traj.samples.size();
  j["diverged"] = traj.diverged;
  if (traj.diverged) {
    j["failure"] = traj.failure;
    j["failure_time"] = traj.failure_time;
  }
  if (traj.samples.empty()) return j;

  const auto& last = traj.samples.back();
  double x_inf = 0.0;
  double z_inf = 0.0;
  for (double v : last.x) x_inf = std::max(x_inf, std::abs(v));
  for (double v : last.z) z_inf = std::max(z_inf, std::abs(v));
  j["terminal"] = {{"t", last.t}, {"x_inf", x_inf}, {"z_inf", z_inf}, {"x", last.x}, {"k", last.k}, {"u", last.u}};
  j["tail_x_inf"] = tail_sup_norm_x(traj, 0.9 * last.t);

  std::vector<double> max_x(traj.n, 0.0);
  std::vector<double> max_k(traj.gain_labels.size(), 0.0);
  double max_u = 0.0;
  double max_psi = 0.0;
  for (const auto& s : traj.samples) {
    for (std::size_t i = 0; i < s.x.size(); ++i) max_x[i] = std::max(max_x[i], std::abs(s.x[i]));
    for (std::size_t i = 0; i < s.k.size(); ++i) max_k[i] = std::max(max_k[i], std::abs(s.k[i]));
    max_u = std::max(max_u, std::abs(s.u));
    for (double p : s.psi) max_psi = std::max(max_psi, std::abs(p));
  }
  j["max_abs"] = {{"x", max_x}, {"k", max_k}, {"u", max_u}, {"psi", max_psi}};
  return j;
}

}  // namespace pfac::sim
