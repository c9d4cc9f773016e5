#include "pfac/backstep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <fmt/format.h>

namespace pfac {

void DesignParams::validate(std::size_t n) const {
  if (mu.size() != n || gamma.size() != n || k0.size() != n) {
    throw ConfigError(fmt::format("design: mu, gamma and k0 need {} entries each (got {}, {}, {})", n, mu.size(),
                                  gamma.size(), k0.size()));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(mu[i] > 0.0)) throw ConfigError(fmt::format("design: mu_{} must be positive", i + 1));
    if (!(gamma[i] > 0.0)) throw ConfigError(fmt::format("design: gamma_{} must be positive", i + 1));
    if (!(k0[i] > 0.0)) throw ConfigError(fmt::format("design: k0_{} must be positive", i + 1));
  }
  if (!(deadzone >= 0.0)) throw ConfigError("design: dead zone must be nonnegative");
  if (!(smoothing > 0.0)) throw ConfigError("design: smoothing must be positive");
  if (psi_power != 1 && psi_power != 2) throw ConfigError("design: psi_power must be 1 or 2");
}

Backstepper::Backstepper(BoundSpec bounds, DesignParams params, std::vector<PsiFormula> paper_psi)
    : bounds_(std::move(bounds)), params_(std::move(params)), paper_psi_(std::move(paper_psi)) {
  n_ = bounds_.rho.size();
  if (n_ == 0) throw ConfigError("backstepper: bound spec is empty");
  if (bounds_.gain_bound.size() + 1 < n_) throw ConfigError("backstepper: need gain bounds Phi_1..Phi_{n-1}");
  params_.validate(n_);
  if (params_.mode == PsiMode::Auto) {
    if (n_ > kMaxAutoOrder) {
      throw ConfigError(fmt::format("auto psi synthesis supports n <= {} (derivative tower depth), got n = {}",
                                    kMaxAutoOrder, n_));
    }
  } else {
    if (paper_psi_.size() != n_) {
      throw ConfigError(fmt::format("paper mode needs {} psi formulas, got {}", n_, paper_psi_.size()));
    }
    for (std::size_t i = 1; i < n_; ++i) {
      if (!paper_psi_[i]) throw ConfigError(fmt::format("paper mode: psi_{} formula missing", i + 1));
    }
  }
}

template <class S>
StageTrace<S> Backstepper::trace(std::size_t upto, std::span<const S> x, std::span<const S> k) const {
  using ad::pow;
  StageTrace<S> tr;
  if (upto == 0 || upto > n_) throw std::out_of_range(fmt::format("stage {} out of range 1..{}", upto, n_));
  if (x.size() < upto || k.size() < upto) throw std::invalid_argument("trace: state or gain prefix too short");

  if (upto == 1) {
    const S psi = psi1(bounds_, x[0]);
    tr.z = {x[0]};
    tr.psi = {psi};
    tr.eta = {S(0.0)};
    tr.alpha = -S(params_.mu[0]) * k[0] * pow(psi, params_.psi_power) * x[0];
    return tr;
  }

  if constexpr (ad::depth_v<S> < ad::kMaxDepth) {
    using D = ad::Dual<S>;
    const std::size_t m = upto - 1;
    std::vector<D> xs;
    std::vector<D> ks;
    xs.reserve(m);
    ks.reserve(m);
    for (std::size_t j = 0; j < m; ++j) xs.push_back(D::variable(x[j], j, 2 * m));
    for (std::size_t j = 0; j < m; ++j) ks.push_back(D::variable(k[j], m + j, 2 * m));
    const StageTrace<D> inner = trace<D>(m, std::span<const D>(xs), std::span<const D>(ks));

    tr.z.reserve(upto);
    tr.psi.reserve(upto);
    tr.eta.reserve(upto);
    for (std::size_t j = 0; j < m; ++j) {
      tr.z.push_back(inner.z[j].value());
      tr.psi.push_back(inner.psi[j].value());
      tr.eta.push_back(inner.eta[j].value());
    }
    tr.d_alpha_dx.reserve(m);
    tr.d_alpha_dk.reserve(m);
    for (std::size_t j = 0; j < m; ++j) {
      tr.d_alpha_dx.push_back(inner.alpha.partial(j));
      tr.d_alpha_dk.push_back(inner.alpha.partial(m + j));
    }

    const S z_i = x[m] - inner.alpha.value();
    tr.z.push_back(z_i);

    const auto c = eta_coefficients<S>(upto, x, std::span<const S>(tr.z), k, std::span<const S>(tr.psi),
                                       std::span<const S>(tr.d_alpha_dx), std::span<const S>(tr.d_alpha_dk), bounds_,
                                       params_);
    const S eta = eta_from_coefficients(c);
    const S psi = eta + bounds_.gain_bound[m - 1](x.first(upto)) + S(1.0);
    tr.eta.push_back(eta);
    tr.psi.push_back(psi);
    tr.alpha = -S(params_.mu[m]) * k[m] * pow(psi, params_.psi_power) * z_i;
    return tr;
  } else {
    throw ad::EvaluationError("backstep", "derivative tower depth exhausted");
  }
}

template StageTrace<ad::Tower<0>> Backstepper::trace(std::size_t, std::span<const ad::Tower<0>>,
                                                     std::span<const ad::Tower<0>>) const;
template StageTrace<ad::Tower<1>> Backstepper::trace(std::size_t, std::span<const ad::Tower<1>>,
                                                     std::span<const ad::Tower<1>>) const;
template StageTrace<ad::Tower<2>> Backstepper::trace(std::size_t, std::span<const ad::Tower<2>>,
                                                     std::span<const ad::Tower<2>>) const;
template StageTrace<ad::Tower<3>> Backstepper::trace(std::size_t, std::span<const ad::Tower<3>>,
                                                     std::span<const ad::Tower<3>>) const;
template StageTrace<ad::Tower<4>> Backstepper::trace(std::size_t, std::span<const ad::Tower<4>>,
                                                     std::span<const ad::Tower<4>>) const;

StageTrace<double> Backstepper::trace_paper(std::size_t upto, std::span<const double> x,
                                            std::span<const double> k) const {
  if (upto == 0 || upto > n_) throw std::out_of_range(fmt::format("stage {} out of range 1..{}", upto, n_));
  if (x.size() < upto || k.size() < upto) throw std::invalid_argument("trace: state or gain prefix too short");
  StageTrace<double> tr;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  double alpha_prev = 0.0;
  for (std::size_t i = 0; i < upto; ++i) {
    const double z = i == 0 ? x[0] : x[i] - alpha_prev;
    tr.z.push_back(z);
    double psi = 0.0;
    if (paper_psi_[i]) {
      const PsiContext ctx{i + 1, x.first(i + 1), std::span<const double>(tr.z), k.first(i), bounds_, params_};
      psi = paper_psi_[i](ctx);
    } else {
      psi = psi1(bounds_, x[0]);
    }
    tr.psi.push_back(psi);
    tr.eta.push_back(nan);
    alpha_prev = -params_.mu[i] * k[i] * ad::pow(psi, params_.psi_power) * z;
  }
  tr.alpha = alpha_prev;
  return tr;
}

StageTrace<double> Backstepper::trace_any(std::size_t upto, std::span<const double> x,
                                          std::span<const double> k) const {
  return params_.mode == PsiMode::Auto ? trace<double>(upto, x, k) : trace_paper(upto, x, k);
}

std::vector<double> Backstepper::transform(std::span<const double> x, std::span<const double> k) const {
  return trace_any(n_, x, k).z;
}

std::vector<double> Backstepper::reconstruct(std::span<const double> z, std::span<const double> k) const {
  if (z.size() < n_ || k.size() < n_) throw std::invalid_argument("reconstruct: prefix too short");
  std::vector<double> x(n_, 0.0);
  x[0] = z[0];
  for (std::size_t i = 1; i < n_; ++i) {
    x[i] = z[i] + alpha(i, std::span<const double>(x).first(i), k.first(i));
  }
  return x;
}

double Backstepper::alpha(std::size_t stage, std::span<const double> x, std::span<const double> k) const {
  return trace_any(stage, x, k).alpha;
}

AlphaJet Backstepper::alpha_jet(std::size_t stage, std::span<const double> x, std::span<const double> k) const {
  if (params_.mode != PsiMode::Auto) throw std::logic_error("alpha_jet requires auto psi synthesis");
  if (stage == 0 || stage > n_) throw std::out_of_range("alpha_jet: stage out of range");
  using D = ad::Dual<double>;
  std::vector<D> xs;
  std::vector<D> ks;
  for (std::size_t j = 0; j < stage; ++j) xs.push_back(D::variable(x[j], j, 2 * stage));
  for (std::size_t j = 0; j < stage; ++j) ks.push_back(D::variable(k[j], stage + j, 2 * stage));
  const auto tr = trace<D>(stage, std::span<const D>(xs), std::span<const D>(ks));
  AlphaJet jet;
  jet.value = tr.alpha.value();
  for (std::size_t j = 0; j < stage; ++j) jet.d_dx.push_back(tr.alpha.partial(j));
  for (std::size_t j = 0; j < stage; ++j) jet.d_dk.push_back(tr.alpha.partial(stage + j));
  return jet;
}

double Backstepper::gain_rate(std::size_t stage, double z, double psi) const {
  if (params_.deadzone > 0.0 && std::abs(z) < params_.deadzone) return 0.0;
  return params_.gamma.at(stage - 1) * psi * psi * z * z;
}

ControlSnapshot Backstepper::evaluate(std::span<const double> x, std::span<const double> k) const {
  StageTrace<double> tr = trace_any(n_, x, k);
  ControlSnapshot s;
  s.z = std::move(tr.z);
  s.psi = std::move(tr.psi);
  s.eta = std::move(tr.eta);
  s.alpha.resize(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    s.alpha[i] = -params_.mu[i] * k[i] * ad::pow(s.psi[i], params_.psi_power) * s.z[i];
    s.gain_rate.push_back(gain_rate(i + 1, s.z[i], s.psi[i]));
  }
  s.u = params_.flip_sign ? -s.alpha.back() : s.alpha.back();
  return s;
}

double Backstepper::psi(std::size_t stage, std::span<const double> z, std::span<const double> k) const {
  if (stage == 0 || stage > n_) throw std::out_of_range("psi: stage out of range");
  std::vector<double> kk(k.begin(), k.end());
  kk.resize(n_, 1.0);  // k_stage.. do not enter psi_stage
  std::vector<double> zz(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(stage));
  zz.resize(n_, 0.0);
  const auto x = reconstruct(zz, kk);
  return trace_any(stage, x, kk).psi.back();
}

double Backstepper::eta(std::size_t stage, std::span<const double> z, std::span<const double> k) const {
  if (stage < 2) throw std::invalid_argument("eta is defined for stages i >= 2");
  if (params_.mode != PsiMode::Auto) throw std::logic_error("eta is only synthesized in auto mode");
  if (stage > n_) throw std::out_of_range("eta: stage out of range");
  std::vector<double> kk(k.begin(), k.end());
  kk.resize(n_, 1.0);
  std::vector<double> zz(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(stage));
  zz.resize(n_, 0.0);
  const auto x = reconstruct(zz, kk);
  return trace<double>(stage, x, kk).eta.back();
}

PsiFloorReport Backstepper::audit_psi_floor(std::size_t samples, double z_max, double k_min, double k_max,
                                            std::uint64_t seed) const {
  PsiFloorReport r;
  r.samples = samples;
  r.min_psi = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> zdist(-z_max, z_max);
  std::uniform_real_distribution<double> kdist(k_min, k_max);
  std::vector<double> z(n_);
  std::vector<double> k(n_);
  for (std::size_t s = 0; s < samples; ++s) {
    for (auto& v : z) v = zdist(rng);
    for (auto& v : k) v = kdist(rng);
    const auto x = reconstruct(z, k);
    const auto tr = trace_any(n_, x, k);
    bool bad = false;
    for (double p : tr.psi) {
      r.min_psi = std::min(r.min_psi, p);
      if (!(p >= 1.0)) bad = true;
    }
    if (bad) ++r.violations;
  }
  return r;
}

}  // namespace pfac
