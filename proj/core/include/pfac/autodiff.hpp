#pragma once

/**
 * @file autodiff.hpp
 * @brief Nestable forward-mode dual numbers.
 *
 * A `Dual<T>` carries a value and a dense vector of first partials with
 * respect to the active variables of one differentiation pass. Nesting
 * (`Dual<Dual<double>>`) gives higher derivatives: every level seeds its
 * own variable set, so derivatives of derivatives come out of the
 * ordinary arithmetic rules.
 *
 * An empty partial vector means "constant": all partials are zero. Binary
 * operations on operands with different partial lengths treat the missing
 * entries as zero, so constants never need to be padded.
 *
 * @code
 * auto [value, grad] = pfac::ad::gradient(
 *     [](auto x) { return sin(x[0]) * x[1]; }, std::vector{0.7, 1.3});
 * double d2 = pfac::ad::second_derivative([](auto x) { return x * x * x; }, 2.0);  // 12
 * @endcode
 */

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace pfac::ad {

/// Raised when a primitive is evaluated outside its domain.
class EvaluationError : public std::domain_error {
 public:
  EvaluationError(std::string primitive, const std::string& what)
      : std::domain_error(primitive + ": " + what), primitive_(std::move(primitive)) {}

  const std::string& primitive() const noexcept { return primitive_; }

 private:
  std::string primitive_;
};

template <class T>
class Dual;

template <class T>
struct nesting_depth : std::integral_constant<int, 0> {};

template <class T>
struct nesting_depth<Dual<T>> : std::integral_constant<int, 1 + nesting_depth<T>::value> {};

/// Number of dual levels wrapped around the underlying double.
template <class T>
inline constexpr int depth_v = nesting_depth<T>::value;

/// Deepest tower level the library instantiates.
inline constexpr int kMaxDepth = 4;

template <class T>
class Dual {
 public:
  using value_type = T;

  Dual() = default;
  Dual(const T& value) : value_(value) {}  // NOLINT(google-explicit-constructor)
  Dual(T&& value) : value_(std::move(value)) {}  // NOLINT(google-explicit-constructor)

  template <class U>
    requires std::is_arithmetic_v<U> && (!std::is_same_v<T, double>)
  Dual(U constant) : value_(T(static_cast<double>(constant))) {}  // NOLINT(google-explicit-constructor)

  Dual(T value, std::vector<T> partials) : value_(std::move(value)), partials_(std::move(partials)) {}

  /// Independent variable number `index` out of `count`.
  static Dual variable(T value, std::size_t index, std::size_t count) {
    std::vector<T> partials(count, T(0.0));
    partials.at(index) = T(1.0);
    return Dual(std::move(value), std::move(partials));
  }

  const T& value() const noexcept { return value_; }
  const std::vector<T>& partials() const noexcept { return partials_; }
  std::size_t size() const noexcept { return partials_.size(); }

  T partial(std::size_t i) const { return i < partials_.size() ? partials_[i] : T(0.0); }

  Dual& operator+=(const Dual& rhs) { return *this = *this + rhs; }
  Dual& operator-=(const Dual& rhs) { return *this = *this - rhs; }
  Dual& operator*=(const Dual& rhs) { return *this = *this * rhs; }
  Dual& operator/=(const Dual& rhs) { return *this = *this / rhs; }

  friend Dual operator-(const Dual& a) {
    Dual r(-a.value_);
    r.partials_.reserve(a.partials_.size());
    for (const auto& p : a.partials_) r.partials_.push_back(-p);
    return r;
  }

  friend Dual operator+(const Dual& a, const Dual& b) {
    Dual r(a.value_ + b.value_);
    r.partials_ = combine(a.partials_, b.partials_, [](const T& x, const T& y) { return x + y; });
    return r;
  }

  friend Dual operator-(const Dual& a, const Dual& b) {
    Dual r(a.value_ - b.value_);
    r.partials_ = combine(a.partials_, b.partials_, [](const T& x, const T& y) { return x - y; });
    return r;
  }

  friend Dual operator*(const Dual& a, const Dual& b) {
    Dual r(a.value_ * b.value_);
    const std::size_t n = std::max(a.partials_.size(), b.partials_.size());
    r.partials_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const bool ha = i < a.partials_.size();
      const bool hb = i < b.partials_.size();
      if (ha && hb) {
        r.partials_.push_back(a.partials_[i] * b.value_ + a.value_ * b.partials_[i]);
      } else if (ha) {
        r.partials_.push_back(a.partials_[i] * b.value_);
      } else {
        r.partials_.push_back(a.value_ * b.partials_[i]);
      }
    }
    return r;
  }

  friend Dual operator/(const Dual& a, const Dual& b) {
    if (scalar_value(b.value_) == 0.0) throw EvaluationError("division", "divisor is zero");
    const T inv = T(1.0) / b.value_;
    const T q = a.value_ * inv;
    Dual r(q);
    const std::size_t n = std::max(a.partials_.size(), b.partials_.size());
    r.partials_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      T num = i < a.partials_.size() ? a.partials_[i] : T(0.0);
      if (i < b.partials_.size()) num = num - q * b.partials_[i];
      r.partials_.push_back(num * inv);
    }
    return r;
  }

  friend bool operator<(const Dual& a, const Dual& b) { return a.value_ < b.value_; }
  friend bool operator>(const Dual& a, const Dual& b) { return b < a; }
  friend bool operator<=(const Dual& a, const Dual& b) { return !(b < a); }
  friend bool operator>=(const Dual& a, const Dual& b) { return !(a < b); }

  /// Chain rule: f(value) with f'(value) = slope.
  Dual apply(T fvalue, const T& slope) const {
    Dual r(std::move(fvalue));
    r.partials_.reserve(partials_.size());
    for (const auto& p : partials_) r.partials_.push_back(p * slope);
    return r;
  }

 private:
  static double scalar_value(double v) { return v; }
  template <class U>
  static double scalar_value(const Dual<U>& v) {
    return scalar_value(v.value());
  }

  template <class Op>
  static std::vector<T> combine(const std::vector<T>& a, const std::vector<T>& b, Op op) {
    const std::size_t n = std::max(a.size(), b.size());
    std::vector<T> out;
    out.reserve(n);
    const T zero(0.0);
    for (std::size_t i = 0; i < n; ++i) {
      out.push_back(op(i < a.size() ? a[i] : zero, i < b.size() ? b[i] : zero));
    }
    return out;
  }

  T value_{};
  std::vector<T> partials_;
};

/// Underlying double of any tower level.
inline double value_of(double x) { return x; }
template <class T>
double value_of(const Dual<T>& x) {
  return value_of(x.value());
}

/// Tower level `d` above double: Tower<0> = double, Tower<1> = Dual<double>, ...
template <int d>
struct TowerLevel {
  using type = Dual<typename TowerLevel<d - 1>::type>;
};
template <>
struct TowerLevel<0> {
  using type = double;
};
template <int d>
using Tower = typename TowerLevel<d>::type;

// -- primitives on plain doubles (domain-checked so both paths fail alike) --

inline double sqrt(double x) {
  if (x < 0.0) throw EvaluationError("sqrt", "negative argument " + std::to_string(x));
  return std::sqrt(x);
}
inline double sin(double x) { return std::sin(x); }
inline double cos(double x) { return std::cos(x); }
inline double exp(double x) { return std::exp(x); }

inline double pow(double x, int k) {
  if (k < 0 && x == 0.0) throw EvaluationError("pow", "zero raised to a negative power");
  double r = 1.0;
  const int m = k < 0 ? -k : k;
  for (int i = 0; i < m; ++i) r *= x;
  return k < 0 ? 1.0 / r : r;
}

// -- primitives on duals --

template <class T>
Dual<T> sin(const Dual<T>& x) {
  using ad::cos;
  using ad::sin;
  return x.apply(sin(x.value()), cos(x.value()));
}

template <class T>
Dual<T> cos(const Dual<T>& x) {
  using ad::cos;
  using ad::sin;
  return x.apply(cos(x.value()), -sin(x.value()));
}

template <class T>
Dual<T> exp(const Dual<T>& x) {
  using ad::exp;
  T e = exp(x.value());
  T slope = e;
  return x.apply(std::move(e), slope);
}

template <class T>
Dual<T> sqrt(const Dual<T>& x) {
  using ad::sqrt;
  const double v = value_of(x);
  if (v < 0.0) throw EvaluationError("sqrt", "negative argument " + std::to_string(v));
  T s = sqrt(x.value());
  if (v == 0.0) {
    for (const auto& p : x.partials()) {
      if (value_of(p) != 0.0) throw EvaluationError("sqrt", "not differentiable at zero");
    }
    return Dual<T>(std::move(s), std::vector<T>(x.size(), T(0.0)));
  }
  T slope = T(0.5) / s;
  return x.apply(std::move(s), slope);
}

template <class T>
Dual<T> pow(const Dual<T>& x, int k) {
  using ad::pow;
  if (k == 0) return Dual<T>(T(1.0));
  if (k < 0 && value_of(x) == 0.0) throw EvaluationError("pow", "zero raised to a negative power");
  T slope = T(static_cast<double>(k)) * pow(x.value(), k - 1);
  return x.apply(pow(x.value(), k), slope);
}

/// sqrt(a^2 + eps^2): a C^1 (in fact smooth) majorant of |a| with
/// |a| <= smooth_abs(a) <= |a| + eps.
template <class S>
S smooth_abs(const S& a, double eps) {
  using ad::sqrt;
  return sqrt(a * a + S(eps * eps));
}

// -- drivers --

/// Value and gradient of `f` at `point`. `f` receives a span of Dual<double>.
struct GradientResult {
  double value = 0.0;
  std::vector<double> partials;
};

template <class F>
GradientResult gradient(F&& f, std::span<const double> point) {
  using D = Dual<double>;
  std::vector<D> vars;
  vars.reserve(point.size());
  for (std::size_t i = 0; i < point.size(); ++i) vars.push_back(D::variable(point[i], i, point.size()));
  const D out = f(std::span<const D>(vars));
  GradientResult r;
  r.value = out.value();
  r.partials.resize(point.size(), 0.0);
  for (std::size_t i = 0; i < point.size(); ++i) r.partials[i] = out.partial(i);
  return r;
}

template <class F>
GradientResult gradient(F&& f, const std::vector<double>& point) {
  return gradient(std::forward<F>(f), std::span<const double>(point));
}

/// d^2 f / dx^2 at x using one extra nesting level.
template <class F>
double second_derivative(F&& f, double x) {
  using D1 = Dual<double>;
  using D2 = Dual<D1>;
  const D2 var = D2::variable(D1::variable(x, 0, 1), 0, 1);
  const D2 out = f(var);
  return out.partial(0).partial(0);
}

}  // namespace pfac::ad
