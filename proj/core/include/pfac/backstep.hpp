#pragma once

// Adaptive high-gain backstepping for pseudo-affine pure-feedback plants.
//
//   z_1 = x_1,  z_i = x_i - alpha_{i-1}(x_1..x_{i-1}, k_1..k_{i-1})
//   alpha_i = -mu_i k_i psi_i^p z_i          (p = 2 in the general design)
//   k_i'    =  gamma_i psi_i^2 z_i^2         (0 inside the optional dead zone)
//
// psi_1 = rho_1 + 1. For i >= 2, psi_i = eta_i + Phi_{i-1} + 1 where eta_i is
// built from the AD partials of alpha_{i-1} (Auto mode), or psi_i is a
// closed-form formula supplied by the user (Paper mode).
//
// Stage indices in this interface are 1-based, matching the control law.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "pfac/autodiff.hpp"
#include "pfac/plant.hpp"

namespace pfac {

enum class PsiMode { Paper, Auto };

struct DesignParams {
  std::vector<double> mu;
  std::vector<double> gamma;
  std::vector<double> k0;
  double deadzone = 0.0;    ///< delta >= 0; 0 is the unmodified update law.
  double smoothing = 1e-6;  ///< eps_s of smooth_abs.
  PsiMode mode = PsiMode::Auto;
  int psi_power = 2;        ///< p in alpha_i = -mu_i k_i psi_i^p z_i; 1 or 2.
  bool flip_sign = false;   ///< Mutation hook: u is negated. Only for negative-control runs.

  std::size_t order() const noexcept { return mu.size(); }
  /// Throws ConfigError on a size mismatch or a violated positivity constraint.
  void validate(std::size_t n) const;
};

/// Arguments of a closed-form psi_i. Spans hold the prefixes x_1..x_i,
/// z_1..z_i and k_1..k_{i-1}.
struct PsiContext {
  std::size_t stage = 0;
  std::span<const double> x;
  std::span<const double> z;
  std::span<const double> k;
  const BoundSpec& bounds;
  const DesignParams& params;
};

using PsiFormula = std::function<double(const PsiContext&)>;

/// Stage-by-stage controller output at one (x, k).
struct ControlSnapshot {
  std::vector<double> z;
  std::vector<double> psi;
  std::vector<double> eta;    ///< eta_1 is 0; all NaN in Paper mode.
  std::vector<double> alpha;  ///< alpha_1..alpha_n; alpha_n is the unflipped control.
  std::vector<double> gain_rate;
  double u = 0.0;
};

/// alpha_i with its partials w.r.t. x_1..x_i and k_1..k_i.
struct AlphaJet {
  double value = 0.0;
  std::vector<double> d_dx;
  std::vector<double> d_dk;
};

/// Values the tower recursion produces for stages 1..upto.
template <class S>
struct StageTrace {
  std::vector<S> z;
  std::vector<S> psi;
  std::vector<S> eta;
  std::vector<S> d_alpha_dx;  ///< partials of alpha_{upto-1}, empty when upto == 1
  std::vector<S> d_alpha_dk;
  S alpha{};
};

/// psi_1 = rho_1(x_1) + 1, the smallest admissible first-stage choice.
template <class S>
S psi1(const BoundSpec& bounds, const S& x1) {
  const S x[1] = {x1};
  return bounds.rho.at(0)(std::span<const S>(x, 1)) + S(1.0);
}

/// Nonnegative coefficients c_1..c_i with
///   rho_i sum|x_j| + sum_{j<i} [ |da/dx_j| (rho_j sum_{l<=j}|x_l| + Phi_j |x_{j+1}|)
///                                + gamma_j |da/dk_j| psi_j^2 z_j^2 ]  <=  sum_q c_q |z_q|
/// where a = alpha_{i-1}. Every |x_q| is replaced by |z_q| + mu_{q-1} k_{q-1} psi_{q-1}^p |z_{q-1}|
/// and every |.| of a derivative (and the z_j of z_j^2) by smooth_abs.
/// `stage` is i >= 2; x, z have at least i entries, k and psi at least i-1.
template <class S>
std::vector<S> eta_coefficients(std::size_t stage, std::span<const S> x, std::span<const S> z, std::span<const S> k,
                                std::span<const S> psi, std::span<const S> d_alpha_dx, std::span<const S> d_alpha_dk,
                                const BoundSpec& bounds, const DesignParams& params) {
  using ad::pow;
  using ad::smooth_abs;
  if (stage < 2) throw std::invalid_argument("eta is defined for stages i >= 2");
  const std::size_t i = stage;
  const double eps = params.smoothing;

  // majorant[q] = coefficient of |z_{q-1}| in the bound of |x_q| (0-based q >= 1)
  std::vector<S> majorant(i, S(0.0));
  for (std::size_t q = 1; q < i; ++q) {
    majorant[q] = S(params.mu[q - 1]) * k[q - 1] * pow(psi[q - 1], params.psi_power);
  }

  std::vector<S> c(i, S(0.0));
  auto add_abs_x = [&](std::size_t q, const S& weight) {
    c[q] += weight;
    if (q >= 1) c[q - 1] += weight * majorant[q];
  };

  const S rho_i = bounds.rho.at(i - 1)(x.first(i));
  for (std::size_t q = 0; q < i; ++q) add_abs_x(q, rho_i);

  for (std::size_t j = 0; j + 1 < i; ++j) {
    const S a = smooth_abs(d_alpha_dx[j], eps);
    const S rho_j = bounds.rho.at(j)(x.first(j + 1));
    const S a_rho = a * rho_j;
    for (std::size_t l = 0; l <= j; ++l) add_abs_x(l, a_rho);
    const S phi_j = bounds.gain_bound.at(j)(x.first(j + 2));
    add_abs_x(j + 1, a * phi_j);
    c[j] += S(params.gamma[j]) * smooth_abs(d_alpha_dk[j], eps) * psi[j] * psi[j] * smooth_abs(z[j], eps);
  }
  return c;
}

/// eta_i = sum_q c_q, valid because sum c_q |z_q| <= (sum c_q) sum |z_q|.
template <class S>
S eta_from_coefficients(const std::vector<S>& c) {
  S total(0.0);
  for (const auto& v : c) total += v;
  return total;
}

/// Psi floor audit result: psi_i >= 1 must hold everywhere.
struct PsiFloorReport {
  std::size_t samples = 0;
  std::size_t violations = 0;
  double min_psi = 0.0;
};

class Backstepper {
 public:
  /// Auto mode needs no formulas. Paper mode takes one formula per stage;
  /// an empty formula for stage 1 means psi_1 = rho_1 + 1.
  Backstepper(BoundSpec bounds, DesignParams params, std::vector<PsiFormula> paper_psi = {});

  std::size_t order() const noexcept { return n_; }
  const DesignParams& params() const noexcept { return params_; }
  const BoundSpec& bounds() const noexcept { return bounds_; }
  PsiMode mode() const noexcept { return params_.mode; }

  /// z from (x, k).
  std::vector<double> transform(std::span<const double> x, std::span<const double> k) const;
  /// x from (z, k) by forward recursion x_i = z_i + alpha_{i-1}.
  std::vector<double> reconstruct(std::span<const double> z, std::span<const double> k) const;

  /// alpha_stage(x_1..x_stage, k_1..k_stage); alpha_n is u (before any sign flip).
  double alpha(std::size_t stage, std::span<const double> x, std::span<const double> k) const;
  /// alpha with its first partials (Auto mode).
  AlphaJet alpha_jet(std::size_t stage, std::span<const double> x, std::span<const double> k) const;

  /// Everything the closed loop needs at (x, k).
  ControlSnapshot evaluate(std::span<const double> x, std::span<const double> k) const;

  /// psi_stage and eta_stage as functions of (z_1..z_stage, k_1..k_{stage-1}).
  double psi(std::size_t stage, std::span<const double> z, std::span<const double> k) const;
  double eta(std::size_t stage, std::span<const double> z, std::span<const double> k) const;

  /// k_i' = gamma_i psi_i^2 z_i^2, zero when |z_i| < delta.
  double gain_rate(std::size_t stage, double z, double psi) const;

  /// Auto-mode tower recursion up to `upto`, generic over the scalar level.
  template <class S>
  StageTrace<S> trace(std::size_t upto, std::span<const S> x, std::span<const S> k) const;

  /// Samples (z, k) uniformly in |z_i| <= z_max, k_i in [k_min, k_max] and
  /// counts points where some psi_i < 1.
  PsiFloorReport audit_psi_floor(std::size_t samples, double z_max, double k_min, double k_max,
                                 std::uint64_t seed) const;

 private:
  StageTrace<double> trace_paper(std::size_t upto, std::span<const double> x, std::span<const double> k) const;
  StageTrace<double> trace_any(std::size_t upto, std::span<const double> x, std::span<const double> k) const;

  BoundSpec bounds_;
  DesignParams params_;
  std::vector<PsiFormula> paper_psi_;
  std::size_t n_ = 0;
};

/// Largest plant order accepted in Auto mode.
inline constexpr std::size_t kMaxAutoOrder = 4;

}  // namespace pfac
