#include "pfac/plant.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace pfac {

void PlantSpec::validate() const {
  if (n == 0) throw ConfigError("plant '" + name + "': dimension must be positive");
  if (drift.size() != n || gain.size() != n) {
    throw ConfigError(fmt::format("plant '{}': expected {} drift and gain functions, got {} and {}", name, n,
                                  drift.size(), gain.size()));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!drift[i] || !gain[i]) throw ConfigError(fmt::format("plant '{}': stage {} is undefined", name, i + 1));
  }
}

void PlantSpec::rhs(std::span<const double> x, double u, std::span<const double> theta, std::span<double> dx) const {
  // x_{n+1} := u; gain[i] reads the prefix x[0..i+1].
  std::vector<double> ext(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n));
  ext.push_back(u);
  const std::span<const double> all(ext);
  for (std::size_t i = 0; i < n; ++i) {
    const double phi = drift[i](all.first(i + 1), theta);
    const double g = gain[i](all.first(i + 2), theta);
    dx[i] = phi + g * all[i + 1];
  }
}

// ---------------------------------------------------------------------------

double ProfileComponent::eval(double t) const {
  switch (kind) {
    case Kind::Constant:
      return offset;
    case Kind::Sinusoid:
      return offset + amplitude * std::sin(omega * t + phase);
    case Kind::Steps: {
      double v = offset;
      for (std::size_t j = 0; j < step_times.size(); ++j) {
        if (t >= step_times[j]) v = step_values[j];
      }
      return v;
    }
  }
  return offset;
}

ProfileComponent ProfileComponent::constant(std::string name, double value, double lower, double upper) {
  ProfileComponent c;
  c.name = std::move(name);
  c.kind = Kind::Constant;
  c.offset = value;
  c.lower = lower;
  c.upper = upper;
  return c;
}

ProfileComponent ProfileComponent::sinusoid(std::string name, double offset, double amplitude, double omega,
                                            double phase, double lower, double upper) {
  ProfileComponent c;
  c.name = std::move(name);
  c.kind = Kind::Sinusoid;
  c.offset = offset;
  c.amplitude = amplitude;
  c.omega = omega;
  c.phase = phase;
  c.lower = lower;
  c.upper = upper;
  return c;
}

UncertaintyProfile::UncertaintyProfile(std::vector<ProfileComponent> components)
    : components_(std::move(components)) {
  for (const auto& c : components_) {
    if (!(c.lower <= c.upper)) throw ConfigError(fmt::format("theta component '{}': empty box", c.name));
    double lo = c.offset;
    double hi = c.offset;
    switch (c.kind) {
      case ProfileComponent::Kind::Constant:
        break;
      case ProfileComponent::Kind::Sinusoid:
        lo = c.offset - std::abs(c.amplitude);
        hi = c.offset + std::abs(c.amplitude);
        break;
      case ProfileComponent::Kind::Steps:
        if (c.step_times.size() != c.step_values.size()) {
          throw ConfigError(fmt::format("theta component '{}': step times/values size mismatch", c.name));
        }
        for (double v : c.step_values) {
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        break;
    }
    // Small relative slack so a box equal to the analytic range is accepted.
    const double slack = 1e-12 * std::max(1.0, std::max(std::abs(c.lower), std::abs(c.upper)));
    if (lo < c.lower - slack || hi > c.upper + slack) {
      throw ConfigError(fmt::format("theta component '{}': range [{}, {}] escapes declared box [{}, {}]", c.name, lo,
                                    hi, c.lower, c.upper));
    }
  }
}

void UncertaintyProfile::eval_into(double t, std::span<double> out) const {
  if (t < 0.0) throw ConfigError(fmt::format("theta evaluated at negative time {}", t));
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const auto& c = components_[i];
    const double v = c.eval(t);
    const double slack = 1e-12 * std::max(1.0, std::max(std::abs(c.lower), std::abs(c.upper)));
    if (!(v >= c.lower - slack && v <= c.upper + slack)) {
      throw ConfigError(fmt::format("theta component '{}' = {} at t = {} is outside [{}, {}]", c.name, v, t, c.lower,
                                    c.upper));
    }
    out[i] = v;
  }
}

std::vector<double> UncertaintyProfile::eval(double t) const {
  std::vector<double> out(components_.size());
  eval_into(t, out);
  return out;
}

// ---------------------------------------------------------------------------

void OracleConstants::validate() const {
  const std::size_t n = b.size();
  if (n == 0 || B.size() != n || c.size() != n) throw ConfigError("oracle constants: inconsistent sizes");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(b[i] > 0.0) || !(b[i] <= B[i])) {
      throw ConfigError(fmt::format("oracle constants: need 0 < b_{0} <= B_{0}, got b={1}, B={2}", i + 1, b[i], B[i]));
    }
    if (!(c[i] >= 0.0)) throw ConfigError(fmt::format("oracle constants: c_{} must be nonnegative", i + 1));
  }
}

double OracleConstants::vartheta(std::size_t stage) const {
  double v = 1.0;
  for (std::size_t j = 0; j < stage; ++j) v = std::max({v, c.at(j), B.at(j)});
  return v;
}

double OracleConstants::beta(std::size_t stage) const {
  if (stage == 1) return c.at(0);
  const double th = vartheta(stage);
  return static_cast<double>(stage) * th * th + 1.0;
}

double OracleConstants::sigma(std::size_t stage) const { return B.at(stage - 1) * B.at(stage - 1); }

double OracleConstants::epsilon() const {
  const std::size_t n = order();
  double e = static_cast<double>(n);
  for (std::size_t i = 1; i <= n; ++i) e = std::max(e, beta(i));
  for (std::size_t i = 1; i + 1 <= n; ++i) e = std::max(e, static_cast<double>(n - i) + sigma(i));
  return e;
}

// ---------------------------------------------------------------------------

Decomposition decompose(const TowerFunction& f, std::span<const double> xbar_next, std::span<const double> theta,
                        double eps_d) {
  if (xbar_next.empty()) throw ConfigError("decompose: empty state prefix");
  if (!(eps_d > 0.0)) throw ConfigError("decompose: eps_d must be positive");
  std::vector<double> at_zero(xbar_next.begin(), xbar_next.end());
  const double last = at_zero.back();
  at_zero.back() = 0.0;

  Decomposition d;
  d.varphi = f(std::span<const double>(at_zero), theta);
  if (!std::isfinite(d.varphi)) throw ad::EvaluationError("decompose", "non-finite stage value");

  if (std::abs(last) > eps_d) {
    const double full = f(xbar_next, theta);
    if (!std::isfinite(full)) throw ad::EvaluationError("decompose", "non-finite stage value");
    d.g = (full - d.varphi) / last;
  } else {
    const auto grad = ad::gradient(
        [&](std::span<const ad::Dual<double>> v) { return f(v, theta); }, std::span<const double>(at_zero));
    d.g = grad.partials.back();
  }
  if (!std::isfinite(d.g)) throw ad::EvaluationError("decompose", "non-finite slope");
  return d;
}

namespace {

template <class S>
S decomposed_gain_at(const TowerFunction& f, std::span<const S> x, std::span<const double> theta, double eps_d) {
  std::vector<S> zeroed(x.begin(), x.end());
  const S last = zeroed.back();
  zeroed.back() = S(0.0);
  if (std::abs(ad::value_of(last)) > eps_d) {
    return (f(x, theta) - f(std::span<const S>(zeroed), theta)) / last;
  }
  if constexpr (ad::depth_v<S> < ad::kMaxDepth) {
    using D = ad::Dual<S>;
    std::vector<D> lifted;
    lifted.reserve(zeroed.size());
    for (std::size_t i = 0; i + 1 < zeroed.size(); ++i) lifted.emplace_back(zeroed[i]);
    lifted.push_back(D::variable(S(0.0), 0, 1));
    return f(std::span<const D>(lifted), theta).partial(0);
  } else {
    throw ad::EvaluationError("decompose", "derivative tower exhausted");
  }
}

}  // namespace

TowerFunction decomposed_gain(TowerFunction f, double eps_d) {
  return TowerFunction::from([f = std::move(f), eps_d]<class S>(std::span<const S> x, std::span<const double> theta) {
    return decomposed_gain_at<S>(f, x, theta, eps_d);
  });
}

// ---------------------------------------------------------------------------

ProbeReport assumption_probe(const PlantSpec& plant, const BoundSpec& bounds, const OracleConstants& oracle,
                             const ProbeSampler& sampler, std::size_t count, std::uint64_t seed) {
  plant.validate();
  const std::size_t n = plant.n;
  if (bounds.rho.size() != n || bounds.gain_bound.size() < n - 1 || oracle.order() != n) {
    throw ConfigError("assumption_probe: bound/oracle sizes do not match the plant order");
  }
  if (count == 0) throw ConfigError("assumption_probe: need at least one sample");

  ProbeReport report;
  report.samples = count;
  std::mt19937_64 rng(seed);
  for (std::size_t s = 0; s < count; ++s) {
    ProbeSample p = sampler(rng);
    std::vector<double> ext = p.x;
    ext.push_back(p.u);
    const std::span<const double> all(ext);

    double abs_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      abs_sum += std::abs(all[i]);
      const double phi = plant.drift[i](all.first(i + 1), p.theta);
      const double drift_rhs = oracle.c[i] * bounds.rho[i](all.first(i + 1)) * abs_sum;
      if (std::abs(phi) > drift_rhs * (1.0 + 1e-12) + 1e-300) {
        report.violations.push_back({s, i + 1, "drift", std::abs(phi), drift_rhs, p});
      }
      const double g = plant.gain[i](all.first(i + 2), p.theta);
      if (!(g >= oracle.b[i])) report.violations.push_back({s, i + 1, "gain-lower", oracle.b[i], g, p});
      if (i + 1 < n) {
        const double upper = oracle.B[i] * bounds.gain_bound[i](all.first(i + 2));
        if (g > upper * (1.0 + 1e-12)) report.violations.push_back({s, i + 1, "gain-upper", g, upper, p});
      }
    }
  }
  return report;
}

}  // namespace pfac
