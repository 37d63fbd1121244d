#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "coordtune/neuralnet/activation.hpp"

namespace coordtune::nn {

enum class OptimizerKind {
  GradientDescent,
  Momentum,
  Nesterov,
  Adagrad,
  Adadelta,
  Adam,
  RMSProp,
  Ftrl,
  ProximalGradientDescent,
  ProximalAdagrad,
};

inline constexpr std::array<OptimizerKind, 10> all_optimizers = {
    OptimizerKind::GradientDescent, OptimizerKind::Momentum, OptimizerKind::Nesterov,
    OptimizerKind::Adagrad,         OptimizerKind::Adadelta, OptimizerKind::Adam,
    OptimizerKind::RMSProp,         OptimizerKind::Ftrl,     OptimizerKind::ProximalGradientDescent,
    OptimizerKind::ProximalAdagrad};

constexpr std::string_view to_string(OptimizerKind kind) noexcept {
  switch (kind) {
    case OptimizerKind::GradientDescent: return "GradientDescent";
    case OptimizerKind::Momentum: return "Momentum";
    case OptimizerKind::Nesterov: return "Nesterov";
    case OptimizerKind::Adagrad: return "Adagrad";
    case OptimizerKind::Adadelta: return "Adadelta";
    case OptimizerKind::Adam: return "Adam";
    case OptimizerKind::RMSProp: return "RMSProp";
    case OptimizerKind::Ftrl: return "Ftrl";
    case OptimizerKind::ProximalGradientDescent: return "ProximalGradientDescent";
    case OptimizerKind::ProximalAdagrad: return "ProximalAdagrad";
  }
  return "?";
}

inline OptimizerKind parse_optimizer(std::string_view name) {
  for (auto k : all_optimizers) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown optimizer '" + std::string(name) + "'");
}

/// Hyperparameters of one update rule. Fields a rule does not use are ignored.
struct OptimizerSpec {
  OptimizerKind kind = OptimizerKind::Adam;
  double learning_rate = 0.001;
  /// Momentum / Nesterov velocity decay.
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Squared-gradient averaging: RMSProp decay, Adadelta rho.
  double decay = 0.9;
  double l1 = 0.0;
  double l2 = 0.0;
  /// Starting per-coordinate accumulator of Ftrl.
  double initial_accumulator = 0.1;

  /// Defaults for `kind` at learning rate `lr` (Adadelta rho = 0.95).
  static OptimizerSpec defaults(OptimizerKind kind, double lr) {
    OptimizerSpec s;
    s.kind = kind;
    s.learning_rate = lr;
    if (kind == OptimizerKind::Adadelta) s.decay = 0.95;
    return s;
  }

  void validate() const {
    auto in_unit = [](double v) { return v >= 0.0 && v < 1.0; };
    if (!(learning_rate > 0.0)) throw std::invalid_argument("optimizer learning_rate must be > 0");
    if (!in_unit(momentum) || !in_unit(beta1) || !in_unit(beta2) || !in_unit(decay)) {
      throw std::invalid_argument("optimizer decay factors must lie in [0, 1)");
    }
    if (!(epsilon > 0.0)) throw std::invalid_argument("optimizer epsilon must be > 0");
    if (l1 < 0.0 || l2 < 0.0) throw std::invalid_argument("optimizer l1/l2 must be >= 0");
    if (!(initial_accumulator > 0.0)) throw std::invalid_argument("optimizer initial_accumulator must be > 0");
  }
};

/// Per-coordinate accumulators plus the step counter. Slot meaning by kind:
///   Momentum/Nesterov: [velocity]
///   Adagrad/ProximalAdagrad: [sum of squared gradients]
///   Adadelta: [E g^2, E dx^2]
///   Adam: [m, v]
///   RMSProp: [E g^2]
///   Ftrl: [n, z]
template <typename Scalar>
struct OptimizerState {
  long step = 0;
  std::vector<Vector<Scalar>> slots;
};

namespace detail {

template <typename Scalar>
std::size_t slot_count(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::GradientDescent:
    case OptimizerKind::ProximalGradientDescent: return 0;
    case OptimizerKind::Momentum:
    case OptimizerKind::Nesterov:
    case OptimizerKind::Adagrad:
    case OptimizerKind::ProximalAdagrad:
    case OptimizerKind::RMSProp: return 1;
    case OptimizerKind::Adadelta:
    case OptimizerKind::Adam:
    case OptimizerKind::Ftrl: return 2;
  }
  return 0;
}

/// Soft-threshold then shrink: the proximal map of lr*(l1|x| + l2/2 x^2).
template <typename Derived, typename Rate>
auto proximal(const Eigen::ArrayBase<Derived>& x, const Rate& lr, double l1, double l2) {
  using Scalar = typename Derived::Scalar;
  return x.sign() * (x.abs() - lr * Scalar(l1)).max(Scalar(0)) / (Scalar(1) + lr * Scalar(l2));
}

}  // namespace detail

/// Allocates the slots for `spec` around `params`. Ftrl's linear term is
/// seeded so that the initial weights are its own fixed point.
template <typename Scalar>
OptimizerState<Scalar> make_optimizer_state(const OptimizerSpec& spec, const Vector<Scalar>& params) {
  spec.validate();
  OptimizerState<Scalar> state;
  const auto n = params.size();
  state.slots.assign(detail::slot_count<Scalar>(spec.kind), Vector<Scalar>::Zero(n));
  if (spec.kind == OptimizerKind::Ftrl) {
    const Scalar n0 = Scalar(spec.initial_accumulator);
    state.slots[0].setConstant(n0);
    const Scalar quad = std::sqrt(n0) / Scalar(spec.learning_rate) + Scalar(spec.l2);
    state.slots[1] = (-(params.array() * quad) - params.array().sign() * Scalar(spec.l1)).matrix();
  }
  return state;
}

/// Applies one update of `spec.kind` to `params` in place and increments the
/// step counter.
template <typename Scalar>
void optimizer_step(const OptimizerSpec& spec, OptimizerState<Scalar>& state, Vector<Scalar>& params,
                    const Vector<Scalar>& grad) {
  if (grad.size() != params.size()) throw std::invalid_argument("optimizer: gradient/parameter size mismatch");
  if (!grad.allFinite()) throw std::invalid_argument("optimizer: non-finite gradient");
  if (state.slots.size() != detail::slot_count<Scalar>(spec.kind)) {
    throw std::invalid_argument("optimizer: state does not match " + std::string(to_string(spec.kind)));
  }
  const Scalar lr = Scalar(spec.learning_rate);
  const Scalar eps = Scalar(spec.epsilon);
  auto theta = params.array();
  const auto g = grad.array();
  ++state.step;

  switch (spec.kind) {
    case OptimizerKind::GradientDescent:
      theta -= lr * g;
      break;
    case OptimizerKind::Momentum: {
      auto v = state.slots[0].array();
      v = Scalar(spec.momentum) * v + lr * g;
      theta -= v;
      break;
    }
    case OptimizerKind::Nesterov: {
      // Look-ahead form evaluated at the current parameters:
      // v <- gamma v + lr g;  theta <- theta - (gamma v + lr g).
      auto v = state.slots[0].array();
      v = Scalar(spec.momentum) * v + lr * g;
      theta -= Scalar(spec.momentum) * v + lr * g;
      break;
    }
    case OptimizerKind::Adagrad: {
      auto acc = state.slots[0].array();
      acc += g.square();
      theta -= lr * g / (acc + eps).sqrt();
      break;
    }
    case OptimizerKind::Adadelta: {
      auto eg = state.slots[0].array();
      auto ex = state.slots[1].array();
      const Scalar rho = Scalar(spec.decay);
      eg = rho * eg + (Scalar(1) - rho) * g.square();
      const Vector<Scalar> delta = ((ex + eps).sqrt() / (eg + eps).sqrt() * g).matrix();
      ex = rho * ex + (Scalar(1) - rho) * delta.array().square();
      theta -= lr * delta.array();
      break;
    }
    case OptimizerKind::Adam: {
      auto m = state.slots[0].array();
      auto v = state.slots[1].array();
      const Scalar b1 = Scalar(spec.beta1);
      const Scalar b2 = Scalar(spec.beta2);
      m = b1 * m + (Scalar(1) - b1) * g;
      v = b2 * v + (Scalar(1) - b2) * g.square();
      const auto t = static_cast<Scalar>(state.step);
      const Scalar c1 = Scalar(1) - std::pow(b1, t);
      const Scalar c2 = Scalar(1) - std::pow(b2, t);
      theta -= lr * (m / c1) / ((v / c2).sqrt() + eps);
      break;
    }
    case OptimizerKind::RMSProp: {
      auto e = state.slots[0].array();
      const Scalar d = Scalar(spec.decay);
      e = d * e + (Scalar(1) - d) * g.square();
      theta -= lr * g / (e + eps).sqrt();
      break;
    }
    case OptimizerKind::Ftrl: {
      // FTRL-Proximal with learning-rate power -1/2 and beta = 0.
      auto n = state.slots[0].array();
      auto z = state.slots[1].array();
      const Vector<Scalar> n_new = (n + g.square()).matrix();
      const auto sigma = (n_new.array().sqrt() - n.sqrt()) / lr;
      z += g - sigma * theta;
      n = n_new.array();
      const Scalar l1 = Scalar(spec.l1);
      const auto denom = n.sqrt() / lr + Scalar(spec.l2);
      theta = (z.abs() <= l1).select(Scalar(0), -(z - z.sign() * l1) / denom);
      break;
    }
    case OptimizerKind::ProximalGradientDescent: {
      const Vector<Scalar> stepped = (theta - lr * g).matrix();
      theta = detail::proximal(stepped.array(), lr, spec.l1, spec.l2);
      break;
    }
    case OptimizerKind::ProximalAdagrad: {
      auto acc = state.slots[0].array();
      acc += g.square();
      const Vector<Scalar> rate = (lr / (acc + eps).sqrt()).matrix();
      const Vector<Scalar> stepped = (theta - rate.array() * g).matrix();
      theta = detail::proximal(stepped.array(), rate.array(), spec.l1, spec.l2);
      break;
    }
  }
}

}  // namespace coordtune::nn
