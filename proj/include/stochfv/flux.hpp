#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

#include "stochfv/errors.hpp"

namespace stochfv {

enum class FluxKind { Burgers, Cubic, LinearAdvection };

// Scalar flux law f(u) together with its derivative and the interior
// critical points of f (where f' vanishes). Kept as a small value type with
// switch dispatch so the solver inner loop stays branch-predictable.
class FluxModel {
 public:
  static FluxModel burgers() { return FluxModel(FluxKind::Burgers, 0.0); }
  static FluxModel cubic() { return FluxModel(FluxKind::Cubic, 0.0); }
  static FluxModel linear_advection(double speed) {
    return FluxModel(FluxKind::LinearAdvection, speed);
  }

  double f(double u) const {
    switch (kind_) {
      case FluxKind::Burgers:
        return 0.5 * u * u;
      case FluxKind::Cubic:
        return u * u * u / 3.0;
      case FluxKind::LinearAdvection:
      default:
        return speed_ * u;
    }
  }

  double f_prime(double u) const {
    switch (kind_) {
      case FluxKind::Burgers:
        return u;
      case FluxKind::Cubic:
        return u * u;
      case FluxKind::LinearAdvection:
      default:
        return speed_;
    }
  }

  // Points where f' = 0, candidates for interior flux extrema.
  const double* critical_points() const { return crit_.data(); }
  int n_critical_points() const { return n_crit_; }

  FluxKind kind() const { return kind_; }
  double speed() const { return speed_; }

  std::string_view name() const {
    switch (kind_) {
      case FluxKind::Burgers:
        return "burgers";
      case FluxKind::Cubic:
        return "cubic";
      case FluxKind::LinearAdvection:
      default:
        return "linear-advection";
    }
  }

 private:
  FluxModel(FluxKind kind, double speed) : kind_(kind), speed_(speed) {
    if (kind == FluxKind::Burgers || kind == FluxKind::Cubic) {
      crit_[0] = 0.0;
      n_crit_ = 1;
    }
  }

  FluxKind kind_;
  double speed_;
  std::array<double, 1> crit_{};
  int n_crit_ = 0;
};

}  // namespace stochfv
