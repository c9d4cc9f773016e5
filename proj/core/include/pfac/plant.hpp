#pragma once

// Pseudo-affine pure-feedback plants, their bound data and uncertainty
// profiles.
//
//   x_i' = phi_i(x_1..x_i, theta) + g_i(x_1..x_{i+1}, theta) x_{i+1},  i < n
//   x_n' = phi_n(x, theta)        + g_n(x, theta, u) u
//
// with x_{n+1} := u. Every stage function is a TowerFunction so the
// controller can differentiate through it at any nesting level.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "pfac/autodiff.hpp"

namespace pfac {

/// Invalid user-supplied configuration (bad box, bad sizes, bad constants).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A scalar function of a state prefix and a parameter vector, evaluable at
/// every level of the derivative tower (double up to ad::Tower<kMaxDepth>).
class TowerFunction {
 public:
  template <class S>
  using Signature = std::function<S(std::span<const S>, std::span<const double>)>;

  TowerFunction() = default;

  /// Wraps a generic callable `f(std::span<const S> x, std::span<const double> theta) -> S`.
  template <class F>
  static TowerFunction from(F f) {
    TowerFunction t;
    t.fns_ = {Signature<ad::Tower<0>>(f), Signature<ad::Tower<1>>(f), Signature<ad::Tower<2>>(f),
              Signature<ad::Tower<3>>(f), Signature<ad::Tower<4>>(f)};
    t.valid_ = true;
    return t;
  }

  static TowerFunction constant(double c) {
    return from([c]<class S>(std::span<const S>, std::span<const double>) { return S(c); });
  }

  explicit operator bool() const noexcept { return valid_; }

  template <class S>
  S operator()(std::span<const S> x, std::span<const double> theta = {}) const {
    return std::get<ad::depth_v<S>>(fns_)(x, theta);
  }

  template <class S>
  S operator()(const std::vector<S>& x, std::span<const double> theta = {}) const {
    return (*this)(std::span<const S>(x), theta);
  }

 private:
  std::tuple<Signature<ad::Tower<0>>, Signature<ad::Tower<1>>, Signature<ad::Tower<2>>,
             Signature<ad::Tower<3>>, Signature<ad::Tower<4>>>
      fns_;
  bool valid_ = false;
};

/// Plant in pseudo-affine form. Stage index i is 0-based here:
/// drift[i] reads x[0..i], gain[i] reads x[0..i+1] where x[n] is u.
struct PlantSpec {
  std::string name;
  std::size_t n = 0;
  std::size_t theta_dim = 0;
  std::vector<TowerFunction> drift;
  std::vector<TowerFunction> gain;

  /// x' for state x and input u; `dx` has size n.
  void rhs(std::span<const double> x, double u, std::span<const double> theta, std::span<double> dx) const;

  /// Throws ConfigError on inconsistent sizes.
  void validate() const;
};

/// Known bound functions of the two structural assumptions:
/// rho[i](x[0..i]) >= 0 and gain_bound[i](x[0..i+1]) > 0.
struct BoundSpec {
  std::vector<TowerFunction> rho;
  std::vector<TowerFunction> gain_bound;

  std::size_t order() const noexcept { return rho.size(); }
};

/// One component of theta(t).
struct ProfileComponent {
  enum class Kind { Constant, Sinusoid, Steps };

  std::string name;
  Kind kind = Kind::Constant;
  double offset = 0.0;     ///< Constant value, or sinusoid mean.
  double amplitude = 0.0;  ///< offset + amplitude * sin(omega t + phase)
  double omega = 0.0;
  double phase = 0.0;
  std::vector<double> step_times;   ///< Steps: value switches to step_values[j] at t >= step_times[j].
  std::vector<double> step_values;
  double lower = 0.0;  ///< Declared box.
  double upper = 0.0;

  double eval(double t) const;

  static ProfileComponent constant(std::string name, double value, double lower, double upper);
  static ProfileComponent sinusoid(std::string name, double offset, double amplitude, double omega, double phase,
                                   double lower, double upper);
};

/// theta: [0, inf) -> R^m, piecewise continuous and box-bounded.
class UncertaintyProfile {
 public:
  UncertaintyProfile() = default;
  /// Throws ConfigError naming the component whose range escapes its box.
  explicit UncertaintyProfile(std::vector<ProfileComponent> components);

  std::size_t size() const noexcept { return components_.size(); }
  const std::vector<ProfileComponent>& components() const noexcept { return components_; }

  /// theta(t). Throws ConfigError on t < 0 or an out-of-box value.
  std::vector<double> eval(double t) const;
  void eval_into(double t, std::span<double> out) const;

 private:
  std::vector<ProfileComponent> components_;
};

/// theta_eval: free-function spelling used by the CLI and tests.
inline std::vector<double> theta_eval(const UncertaintyProfile& profile, double t) { return profile.eval(t); }

/// True constants of the two assumptions for a concrete scenario. These
/// exist for verification only; the controller interfaces never take them.
struct OracleConstants {
  std::vector<double> b;  ///< lower gain bounds, 0 < b_i
  std::vector<double> B;  ///< upper gain-bound multipliers, b_i <= B_i
  std::vector<double> c;  ///< drift multipliers

  std::size_t order() const noexcept { return b.size(); }
  void validate() const;

  /// max(1, c_1..c_i, B_1..B_i); `stage` is 1-based.
  double vartheta(std::size_t stage) const;
  /// beta_1 = c_1, beta_i = i vartheta_i^2 + 1.
  double beta(std::size_t stage) const;
  /// sigma_i = B_i^2.
  double sigma(std::size_t stage) const;
  /// max(beta_1..beta_n, n, n-1+sigma_1, ..., 1+sigma_{n-1}).
  double epsilon() const;
};

/// Secant split of a general pure-feedback stage f(x_1..x_{i+1}, theta):
/// f = varphi + g x_{i+1} with varphi = f(x_1..x_i, 0, theta).
struct Decomposition {
  double varphi = 0.0;
  double g = 0.0;
};

/// Below |x_{i+1}| <= eps_d the slope is dF/dx_{i+1} at 0 via AD.
Decomposition decompose(const TowerFunction& f, std::span<const double> xbar_next, std::span<const double> theta,
                        double eps_d = 1e-8);

/// A TowerFunction giving the decomposition gain g at any tower level,
/// usable as PlantSpec::gain for a general pure-feedback stage.
TowerFunction decomposed_gain(TowerFunction f, double eps_d = 1e-8);

/// One sampled point of the assumption probe.
struct ProbeSample {
  std::vector<double> x;  ///< size n
  std::vector<double> theta;
  double u = 0.0;
};

struct ProbeViolation {
  std::size_t sample = 0;
  std::size_t stage = 0;  ///< 1-based
  std::string inequality;  ///< "drift", "gain-lower" or "gain-upper"
  double lhs = 0.0;
  double rhs = 0.0;
  ProbeSample point;
};

struct ProbeReport {
  std::size_t samples = 0;
  std::vector<ProbeViolation> violations;
  bool ok() const noexcept { return violations.empty(); }
};

using ProbeSampler = std::function<ProbeSample(std::mt19937_64&)>;

/// Checks |phi_i| <= c_i rho_i sum|x_j|, b_i <= g_i <= B_i Phi_i (i < n)
/// and g_n >= b_n at `count` sampled points.
ProbeReport assumption_probe(const PlantSpec& plant, const BoundSpec& bounds, const OracleConstants& oracle,
                             const ProbeSampler& sampler, std::size_t count, std::uint64_t seed);

}  // namespace pfac
