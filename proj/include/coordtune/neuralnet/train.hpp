#pragma once

#include <cmath>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "coordtune/neuralnet/network.hpp"

namespace coordtune::nn {

template <typename Scalar>
struct Batch {
  Matrix<Scalar> inputs;
  std::vector<int> labels;
};

/// Yields a fresh batch of the requested size on every call.
template <typename Scalar>
using BatchSource = std::function<Batch<Scalar>(Eigen::Index batch_size)>;

struct TrainHyper {
  OptimizerSpec optimizer;
  LossSpec loss;
  long iterations = 250;
  Eigen::Index batch_size = 128;
};

template <typename Scalar>
struct TrainResult {
  NetworkState<Scalar> state;
  std::vector<Scalar> loss_trace;
  bool failed = false;
  std::string error;
};

/// Runs exactly `hyper.iterations` optimizer steps, one fresh batch each.
/// A non-finite loss or gradient stops training and marks the result failed.
template <typename Scalar = double>
TrainResult<Scalar> train(const NetworkSpec& spec, std::uint64_t init_seed, const BatchSource<Scalar>& data,
                          const TrainHyper& hyper) {
  if (hyper.iterations < 0) throw std::invalid_argument("train: iterations must be >= 0");
  if (hyper.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  hyper.loss.validate();
  TrainResult<Scalar> result;
  result.state = initialize_network<Scalar>(spec, init_seed);
  result.state.optimizer = make_optimizer_state(hyper.optimizer, result.state.params);
  result.loss_trace.reserve(static_cast<std::size_t>(hyper.iterations));
  for (long it = 0; it < hyper.iterations; ++it) {
    const Batch<Scalar> batch = data(hyper.batch_size);
    try {
      const auto g = backward(result.state, batch.inputs, batch.labels, hyper.loss);
      if (!std::isfinite(static_cast<double>(g.loss))) throw NonFiniteError("non-finite loss");
      result.loss_trace.push_back(g.loss);
      optimizer_step(hyper.optimizer, result.state.optimizer, result.state.params, g.grad);
      if (!result.state.params.allFinite()) throw NonFiniteError("non-finite parameters after update");
    } catch (const std::exception& e) {
      result.failed = true;
      result.error = "iteration " + std::to_string(it) + ": " + e.what();
      break;
    }
  }
  return result;
}

template <typename Scalar>
void write_loss_trace_csv(std::ostream& out, const std::vector<Scalar>& trace) {
  out << "iteration,loss\n";
  out.precision(17);
  for (std::size_t i = 0; i < trace.size(); ++i) out << i << ',' << static_cast<double>(trace[i]) << '\n';
}

}  // namespace coordtune::nn
