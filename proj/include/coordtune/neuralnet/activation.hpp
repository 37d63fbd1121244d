#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace coordtune::nn {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

enum class ActivationKind { Tanh, Relu, Elu, Selu, Relu6, Crelu, Softmax, Softsign, Softplus };

inline constexpr std::array<ActivationKind, 9> all_activations = {
    ActivationKind::Tanh,  ActivationKind::Relu,    ActivationKind::Elu,      ActivationKind::Selu,    ActivationKind::Relu6,
    ActivationKind::Crelu, ActivationKind::Softmax, ActivationKind::Softsign, ActivationKind::Softplus};

inline constexpr double elu_alpha = 1.0;
inline constexpr double selu_alpha = 1.6732;
inline constexpr double selu_lambda = 1.0507;

constexpr std::string_view to_string(ActivationKind kind) noexcept {
  switch (kind) {
    case ActivationKind::Tanh: return "Tanh";
    case ActivationKind::Relu: return "Relu";
    case ActivationKind::Elu: return "Elu";
    case ActivationKind::Selu: return "Selu";
    case ActivationKind::Relu6: return "Relu6";
    case ActivationKind::Crelu: return "Crelu";
    case ActivationKind::Softmax: return "Softmax";
    case ActivationKind::Softsign: return "Softsign";
    case ActivationKind::Softplus: return "Softplus";
  }
  return "?";
}

inline ActivationKind parse_activation(std::string_view name) {
  for (auto k : all_activations) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

/// Width of the activation output for `width` inputs; Crelu concatenates the
/// positive and negative parts.
constexpr Eigen::Index output_width(ActivationKind kind, Eigen::Index width) noexcept {
  return kind == ActivationKind::Crelu ? 2 * width : width;
}

namespace detail {

template <typename Scalar>
Scalar softplus(Scalar x) {
  using std::abs, std::exp, std::log1p, std::max;
  return max(x, Scalar(0)) + log1p(exp(-abs(x)));
}

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  using std::exp;
  if (x >= 0) return Scalar(1) / (Scalar(1) + exp(-x));
  const Scalar e = exp(x);
  return e / (Scalar(1) + e);
}

}  // namespace detail

/// Row-wise softmax with the max subtracted for stability.
template <typename Derived>
Matrix<typename Derived::Scalar> softmax_rows(const Eigen::MatrixBase<Derived>& z) {
  using Scalar = typename Derived::Scalar;
  Matrix<Scalar> out = (z.colwise() - z.rowwise().maxCoeff()).array().exp().matrix();
  out.array().colwise() /= out.rowwise().sum().array();
  return out;
}

/// Applies `kind` to each row of `z` (rows are samples).
template <typename Derived>
Matrix<typename Derived::Scalar> activate(ActivationKind kind, const Eigen::MatrixBase<Derived>& z) {
  using Scalar = typename Derived::Scalar;
  const auto x = z.array();
  switch (kind) {
    case ActivationKind::Tanh: return x.tanh().matrix();
    case ActivationKind::Relu: return x.max(Scalar(0)).matrix();
    case ActivationKind::Elu:
      return (x > 0).select(x, Scalar(elu_alpha) * (x.exp() - Scalar(1))).matrix();
    case ActivationKind::Selu:
      return (Scalar(selu_lambda) * (x > 0).select(x, Scalar(selu_alpha) * (x.exp() - Scalar(1)))).matrix();
    case ActivationKind::Relu6: return x.max(Scalar(0)).min(Scalar(6)).matrix();
    case ActivationKind::Crelu: {
      Matrix<Scalar> out(z.rows(), 2 * z.cols());
      out << x.max(Scalar(0)).matrix(), (-x).max(Scalar(0)).matrix();
      return out;
    }
    case ActivationKind::Softmax: return softmax_rows(z);
    case ActivationKind::Softsign: return (x / (Scalar(1) + x.abs())).matrix();
    case ActivationKind::Softplus: return x.unaryExpr([](Scalar v) { return detail::softplus(v); }).matrix();
  }
  throw std::invalid_argument("unhandled activation kind");
}

/// Single-vector convenience form.
template <typename Scalar>
Vector<Scalar> activate(ActivationKind kind, const Vector<Scalar>& x) {
  return activate(kind, x.transpose()).transpose();
}

/// Back-propagates `grad_out` (d loss / d activation output) through the
/// activation, given its input `z` and output `a`.
///
/// Kink conventions: the derivative at a breakpoint is taken from the left
/// branch, i.e. Relu'(0) = 0, Relu6'(0) = 0, Relu6'(6) = 1, Crelu uses
/// [z > 0] and -[z < 0], Elu'(0) = alpha and Selu'(0) = lambda * alpha.
template <typename DZ, typename DA, typename DG>
Matrix<typename DZ::Scalar> activation_backward(ActivationKind kind, const Eigen::MatrixBase<DZ>& z,
                                                const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DG>& grad_out) {
  using Scalar = typename DZ::Scalar;
  const auto x = z.array();
  const auto g = grad_out.array();
  switch (kind) {
    case ActivationKind::Tanh: return (g * (Scalar(1) - a.array().square())).matrix();
    case ActivationKind::Relu: return (x > 0).select(g, Scalar(0)).matrix();
    case ActivationKind::Elu: return (x > 0).select(g, g * Scalar(elu_alpha) * x.exp()).matrix();
    case ActivationKind::Selu:
      return (Scalar(selu_lambda) * (x > 0).select(g, g * Scalar(selu_alpha) * x.exp())).matrix();
    case ActivationKind::Relu6: return ((x > 0) && (x <= 6)).select(g, Scalar(0)).matrix();
    case ActivationKind::Crelu: {
      const Eigen::Index n = z.cols();
      const auto gp = grad_out.leftCols(n).array();
      const auto gn = grad_out.rightCols(n).array();
      return ((x > 0).select(gp, Scalar(0)) - (x < 0).select(gn, Scalar(0))).matrix();
    }
    case ActivationKind::Softmax: {
      const auto s = a.array();
      const auto dot = (g * s).rowwise().sum();
      return (s * (g.colwise() - dot)).matrix();
    }
    case ActivationKind::Softsign: return (g / (Scalar(1) + x.abs()).square()).matrix();
    case ActivationKind::Softplus:
      return (g * x.unaryExpr([](Scalar v) { return detail::sigmoid(v); })).matrix();
  }
  throw std::invalid_argument("unhandled activation kind");
}

}  // namespace coordtune::nn
