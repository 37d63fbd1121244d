#pragma once

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "coordtune/neuralnet/activation.hpp"

namespace coordtune::nn {

enum class LossKind { SoftmaxCE, SoftmaxCEv2, SigmoidCE, WeightedCE, SparseSoftmaxCE, MSE };

inline constexpr std::array<LossKind, 6> all_losses = {LossKind::SoftmaxCE,  LossKind::SoftmaxCEv2,
                                                      LossKind::SigmoidCE,  LossKind::WeightedCE,
                                                      LossKind::SparseSoftmaxCE, LossKind::MSE};

constexpr std::string_view to_string(LossKind kind) noexcept {
  switch (kind) {
    case LossKind::SoftmaxCE: return "SoftmaxCE";
    case LossKind::SoftmaxCEv2: return "SoftmaxCEv2";
    case LossKind::SigmoidCE: return "SigmoidCE";
    case LossKind::WeightedCE: return "WeightedCE";
    case LossKind::SparseSoftmaxCE: return "SparseSoftmaxCE";
    case LossKind::MSE: return "MSE";
  }
  return "?";
}

inline LossKind parse_loss(std::string_view name) {
  for (auto k : all_losses) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown loss function '" + std::string(name) + "'");
}

struct LossSpec {
  LossKind kind = LossKind::SoftmaxCE;
  /// Multiplier on the positive-target term of WeightedCE.
  double pos_weight = 1.0;

  void validate() const {
    if (!(pos_weight > 0.0)) throw std::invalid_argument("loss pos_weight must be > 0");
  }
};

class LossError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <typename Scalar>
struct LossValue {
  /// Mean over the batch rows.
  Scalar value = 0;
  /// d value / d logits, same shape as the logits (already divided by K).
  Matrix<Scalar> grad;
};

/// Batch loss for logits (K x M) against target rows (K x M). Targets are
/// probability vectors; SparseSoftmaxCE additionally requires exact one-hot
/// rows. Per-sample losses:
///   SoftmaxCE, SoftmaxCEv2, SparseSoftmaxCE: -sum t log softmax(z)
///   SigmoidCE:  sum max(z,0) - z t + log(1 + exp(-|z|))
///   WeightedCE: sum (1-t) z + (1 + (q-1) t) (log(1 + exp(-|z|)) + max(-z,0))
///   MSE:        mean (softmax(z) - t)^2
template <typename DL, typename DT>
LossValue<typename DL::Scalar> evaluate_loss(const LossSpec& spec, const Eigen::MatrixBase<DL>& logits,
                                             const Eigen::MatrixBase<DT>& targets) {
  using Scalar = typename DL::Scalar;
  spec.validate();
  if (logits.rows() != targets.rows() || logits.cols() != targets.cols()) {
    throw LossError("loss: logits are " + std::to_string(logits.rows()) + "x" + std::to_string(logits.cols()) +
                    " but targets are " + std::to_string(targets.rows()) + "x" + std::to_string(targets.cols()));
  }
  if (logits.rows() == 0 || logits.cols() == 0) throw LossError("loss: empty batch");
  if (!logits.allFinite()) throw LossError("loss: non-finite logits");
  if (!targets.allFinite()) throw LossError("loss: non-finite targets");

  const auto k = static_cast<Scalar>(logits.rows());
  const auto z = logits.array();
  const auto t = targets.array();
  LossValue<Scalar> out;

  switch (spec.kind) {
    case LossKind::SparseSoftmaxCE:
      for (Eigen::Index r = 0; r < targets.rows(); ++r) {
        const auto row = targets.row(r).array();
        if (((row != Scalar(0)) && (row != Scalar(1))).any() || row.sum() != Scalar(1)) {
          throw LossError("loss: sparse softmax cross entropy needs one-hot targets (row " + std::to_string(r) + ")");
        }
      }
      [[fallthrough]];
    case LossKind::SoftmaxCE:
    case LossKind::SoftmaxCEv2: {
      const Vector<Scalar> row_max = logits.rowwise().maxCoeff();
      const Matrix<Scalar> shifted = logits.colwise() - row_max;
      const Vector<Scalar> lse = shifted.array().exp().rowwise().sum().log().matrix();
      const Matrix<Scalar> log_p = shifted.colwise() - lse;
      out.value = -(t * log_p.array()).sum() / k;
      // d/dz = softmax(z) * sum(t) - t, which reduces to p - t for normalized targets.
      const Matrix<Scalar> p = log_p.array().exp().matrix();
      out.grad = ((p.array().colwise() * t.rowwise().sum()) - t).matrix() / k;
      break;
    }
    case LossKind::SigmoidCE: {
      const auto per = z.max(Scalar(0)) - z * t + (-z.abs()).exp().log1p();
      out.value = per.sum() / k;
      out.grad = (z.unaryExpr([](Scalar v) { return detail::sigmoid(v); }) - t).matrix() / k;
      break;
    }
    case LossKind::WeightedCE: {
      const Scalar q = static_cast<Scalar>(spec.pos_weight);
      const auto weight = Scalar(1) + (q - Scalar(1)) * t;
      const auto softplus_neg = (-z.abs()).exp().log1p() + (-z).max(Scalar(0));
      out.value = ((Scalar(1) - t) * z + weight * softplus_neg).sum() / k;
      const auto sig_neg = (-z).unaryExpr([](Scalar v) { return detail::sigmoid(v); });
      out.grad = ((Scalar(1) - t) - weight * sig_neg).matrix() / k;
      break;
    }
    case LossKind::MSE: {
      const Matrix<Scalar> p = softmax_rows(logits);
      const auto m = static_cast<Scalar>(logits.cols());
      const auto diff = p.array() - t;
      out.value = diff.square().sum() / (m * k);
      const auto gp = Scalar(2) * diff / m;
      const auto dot = (gp * p.array()).rowwise().sum();
      out.grad = (p.array() * (gp.colwise() - dot)).matrix() / k;
      break;
    }
  }
  return out;
}

/// Rows of the identity selected by `labels`.
template <typename Scalar>
Matrix<Scalar> one_hot(std::span<const int> labels, Eigen::Index classes) {
  Matrix<Scalar> out = Matrix<Scalar>::Zero(static_cast<Eigen::Index>(labels.size()), classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= classes) {
      throw LossError("label " + std::to_string(labels[i]) + " outside [0, " + std::to_string(classes) + ")");
    }
    out(static_cast<Eigen::Index>(i), labels[i]) = Scalar(1);
  }
  return out;
}

/// Class-index form used by training: builds one-hot targets.
template <typename DL>
LossValue<typename DL::Scalar> evaluate_loss(const LossSpec& spec, const Eigen::MatrixBase<DL>& logits,
                                             std::span<const int> labels) {
  using Scalar = typename DL::Scalar;
  if (static_cast<Eigen::Index>(labels.size()) != logits.rows()) {
    throw LossError("loss: " + std::to_string(labels.size()) + " labels for " + std::to_string(logits.rows()) +
                    " logit rows");
  }
  return evaluate_loss(spec, logits, one_hot<Scalar>(labels, logits.cols()));
}

}  // namespace coordtune::nn
