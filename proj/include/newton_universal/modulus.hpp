#pragma once

// Moduli of continuity omega(r) for the Jacobian: the sup of ||F'(u) - F'(v)||
// over pairs in a ball with ||u - v|| <= r.

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <stdexcept>
#include <type_traits>
#include <variant>
#include <vector>

namespace nu {

class ModulusDomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

// omega(r) = L * r^alpha
struct PowerLaw {
  double L = 1.0;
  double alpha = 1.0;
};

// Piecewise-linear omega through knots (radii[k], values[k]), starting at (0, 0).
class Empirical {
public:
  Empirical(std::vector<double> radii, std::vector<double> values) {
    if (radii.size() != values.size() || radii.empty())
      throw std::invalid_argument("Empirical modulus: need equally many radii and values");
    if (radii.front() > 0.0) {
      radii.insert(radii.begin(), 0.0);
      values.insert(values.begin(), 0.0);
    }
    if (radii.front() != 0.0 || values.front() != 0.0)
      throw std::invalid_argument("Empirical modulus: omega(0) must be 0");
    if (radii.size() < 2) throw std::invalid_argument("Empirical modulus: need a positive knot");
    for (std::size_t k = 1; k < radii.size(); ++k) {
      if (!(radii[k] > radii[k - 1])) throw std::invalid_argument("Empirical modulus: radii must increase");
      if (!(values[k] > values[k - 1]))
        throw std::invalid_argument("Empirical modulus: values must be strictly increasing");
      if (!std::isfinite(values[k])) throw std::invalid_argument("Empirical modulus: non-finite value");
    }
    radii_ = std::move(radii);
    values_ = std::move(values);
  }

  // Cumulative max over raw per-radius maxima, then a 1e-15*k tie-break so
  // the result is strictly increasing.
  static Empirical from_samples(std::vector<double> radii, std::vector<double> raw_max) {
    double running = 0.0;
    for (std::size_t k = 0; k < raw_max.size(); ++k) {
      running = std::max(running, raw_max[k]);
      raw_max[k] = running + 1e-15 * static_cast<double>(k + 1);
    }
    return Empirical(std::move(radii), std::move(raw_max));
  }

  const std::vector<double>& radii() const { return radii_; }
  const std::vector<double>& values() const { return values_; }
  double domain_max() const { return radii_.back(); }

  double operator()(double r) const {
    if (r < 0.0 || r > radii_.back() * (1.0 + 1e-14))
      throw ModulusDomainError("Empirical modulus evaluated outside [0, last knot]");
    if (r >= radii_.back()) return values_.back();
    const auto it = std::upper_bound(radii_.begin(), radii_.end(), r);
    const auto k = static_cast<std::size_t>(std::distance(radii_.begin(), it));
    const double r0 = radii_[k - 1], r1 = radii_[k];
    const double w = (r - r0) / (r1 - r0);
    return values_[k - 1] + w * (values_[k] - values_[k - 1]);
  }

private:
  std::vector<double> radii_;
  std::vector<double> values_;
};

using ModulusModel = std::variant<PowerLaw, Empirical>;

inline PowerLaw make_power_law(double L, double alpha) {
  if (!(L > 0.0) || !(alpha > 0.0) || alpha > 1.0)
    throw std::invalid_argument("PowerLaw modulus needs L > 0 and alpha in (0, 1]");
  return PowerLaw{L, alpha};
}

inline double modulus_eval(const ModulusModel& m, double r) {
  if (r < 0.0) throw ModulusDomainError("modulus evaluated at negative radius");
  return std::visit(
      [r](const auto& w) -> double {
        using T = std::decay_t<decltype(w)>;
        if constexpr (std::is_same_v<T, PowerLaw>) {
          return r == 0.0 ? 0.0 : w.L * std::pow(r, w.alpha);
        } else {
          return w(r);
        }
      },
      m);
}

// Largest radius at which the model may be evaluated (infinity for PowerLaw).
inline double modulus_domain_max(const ModulusModel& m) {
  if (const auto* e = std::get_if<Empirical>(&m)) return e->domain_max();
  return std::numeric_limits<double>::infinity();
}

}  // namespace nu
