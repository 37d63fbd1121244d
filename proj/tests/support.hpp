#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "coordtune/neuralnet.hpp"

namespace coordtune::test {

/// Central-difference gradient of the mean batch loss with respect to every
/// parameter, compared to backward(). Returns ||analytic - numeric|| /
/// max(||analytic||, ||numeric||).
inline double gradient_relative_error(nn::NetworkState<double> state, const Eigen::MatrixXd& inputs,
                                      const std::vector<int>& labels, const nn::LossSpec& loss, double h = 1e-6) {
  const auto analytic = nn::backward(state, inputs, labels, loss).grad;
  Eigen::VectorXd numeric(analytic.size());
  for (Eigen::Index i = 0; i < state.params.size(); ++i) {
    const double keep = state.params(i);
    state.params(i) = keep + h;
    const double up = nn::evaluate_loss(loss, nn::forward(state, inputs), labels).value;
    state.params(i) = keep - h;
    const double down = nn::evaluate_loss(loss, nn::forward(state, inputs), labels).value;
    state.params(i) = keep;
    numeric(i) = (up - down) / (2 * h);
  }
  const double scale = std::max({analytic.norm(), numeric.norm(), 1e-12});
  return (analytic - numeric).norm() / scale;
}

/// Distance from every hidden pre-activation to the nearest activation kink.
inline double kink_margin(const nn::NetworkState<double>& state, const Eigen::MatrixXd& inputs) {
  const auto trace = nn::forward_trace(state, inputs);
  double margin = INFINITY;
  for (std::size_t l = 0; l + 1 < trace.pre.size(); ++l) {
    margin = std::min(margin, trace.pre[l].array().abs().minCoeff());
    margin = std::min(margin, (trace.pre[l].array() - 6.0).abs().minCoeff());
  }
  return margin;
}

}  // namespace coordtune::test
