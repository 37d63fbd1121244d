#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "coordtune/neuralnet/activation.hpp"
#include "coordtune/neuralnet/loss.hpp"
#include "coordtune/neuralnet/optimizer.hpp"
#include "coordtune/random.hpp"

namespace coordtune::nn {

/// Fully connected detector: input_dim -> [hidden_width, activation] x
/// hidden_layers -> output_dim logits.
struct NetworkSpec {
  Eigen::Index input_dim = 2;
  Eigen::Index output_dim = 16;
  Eigen::Index hidden_layers = 2;
  Eigen::Index hidden_width = 32;
  ActivationKind activation = ActivationKind::Selu;

  void validate() const {
    if (input_dim < 1) throw std::invalid_argument("network input_dim must be >= 1");
    if (output_dim < 2) throw std::invalid_argument("network output_dim must be >= 2");
    if (hidden_layers < 0) throw std::invalid_argument("network hidden_layers must be >= 0");
    if (hidden_width < 1) throw std::invalid_argument("network hidden_width must be >= 1");
  }

  Eigen::Index layer_count() const noexcept { return hidden_layers + 1; }

  /// Closed-form trainable parameter count.
  Eigen::Index parameter_count() const noexcept {
    if (hidden_layers == 0) return (input_dim + 1) * output_dim;
    const Eigen::Index fan = output_width(activation, hidden_width);
    return (input_dim + 1) * hidden_width + (hidden_layers - 1) * (fan + 1) * hidden_width + (fan + 1) * output_dim;
  }

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

/// Position of one affine layer inside the flat parameter vector. Weights are
/// stored row-major as (fan_in x fan_out), followed by fan_out biases.
struct LayerShape {
  Eigen::Index fan_in = 0;
  Eigen::Index fan_out = 0;
  Eigen::Index weight_offset = 0;
  Eigen::Index bias_offset = 0;
  bool hidden = false;
};

inline std::vector<LayerShape> layer_shapes(const NetworkSpec& spec) {
  spec.validate();
  std::vector<LayerShape> shapes;
  Eigen::Index in = spec.input_dim;
  Eigen::Index offset = 0;
  for (Eigen::Index l = 0; l < spec.layer_count(); ++l) {
    const bool hidden = l < spec.hidden_layers;
    const Eigen::Index out = hidden ? spec.hidden_width : spec.output_dim;
    shapes.push_back({in, out, offset, offset + in * out, hidden});
    offset += in * out + out;
    in = hidden ? output_width(spec.activation, out) : out;
  }
  return shapes;
}

template <typename Scalar>
using WeightMap = Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename Scalar>
using ConstWeightMap = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

/// Trainable parameters, optimizer accumulators and the step counter.
template <typename Scalar>
struct NetworkState {
  NetworkSpec spec;
  std::vector<LayerShape> shapes;
  Vector<Scalar> params;
  OptimizerState<Scalar> optimizer;

  NetworkState() = default;
  explicit NetworkState(const NetworkSpec& s)
      : spec(s), shapes(layer_shapes(s)), params(Vector<Scalar>::Zero(s.parameter_count())) {}

  ConstWeightMap<Scalar> weights(std::size_t l) const {
    const auto& s = shapes.at(l);
    return ConstWeightMap<Scalar>(params.data() + s.weight_offset, s.fan_in, s.fan_out);
  }
  WeightMap<Scalar> weights(std::size_t l) {
    const auto& s = shapes.at(l);
    return WeightMap<Scalar>(params.data() + s.weight_offset, s.fan_in, s.fan_out);
  }
  auto bias(std::size_t l) const { return params.segment(shapes.at(l).bias_offset, shapes.at(l).fan_out); }
  auto bias(std::size_t l) { return params.segment(shapes.at(l).bias_offset, shapes.at(l).fan_out); }
};

/// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
template <typename Scalar = double>
NetworkState<Scalar> initialize_network(const NetworkSpec& spec, std::uint64_t seed) {
  NetworkState<Scalar> state(spec);
  Rng rng(seed);
  for (std::size_t l = 0; l < state.shapes.size(); ++l) {
    const auto& s = state.shapes[l];
    const double limit = std::sqrt(6.0 / static_cast<double>(s.fan_in + s.fan_out));
    auto w = state.weights(l);
    for (Eigen::Index i = 0; i < s.fan_in; ++i) {
      for (Eigen::Index j = 0; j < s.fan_out; ++j) w(i, j) = Scalar((2.0 * uniform01(rng) - 1.0) * limit);
    }
  }
  return state;
}

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Pre-activations and activations of every layer; activations[0] is the input.
template <typename Scalar>
struct ForwardTrace {
  std::vector<Matrix<Scalar>> pre;
  std::vector<Matrix<Scalar>> post;
  const Matrix<Scalar>& logits() const { return pre.back(); }
};

template <typename Scalar, typename Derived>
ForwardTrace<Scalar> forward_trace(const NetworkState<Scalar>& state, const Eigen::MatrixBase<Derived>& inputs) {
  if (inputs.cols() != state.spec.input_dim) {
    throw std::invalid_argument("forward: input has " + std::to_string(inputs.cols()) + " columns, network expects " +
                                std::to_string(state.spec.input_dim));
  }
  ForwardTrace<Scalar> trace;
  trace.post.emplace_back(inputs);
  for (std::size_t l = 0; l < state.shapes.size(); ++l) {
    Matrix<Scalar> z = trace.post.back() * state.weights(l);
    z.rowwise() += state.bias(l).transpose();
    if (!z.allFinite()) throw NonFiniteError("non-finite pre-activation in layer " + std::to_string(l));
    if (state.shapes[l].hidden) {
      Matrix<Scalar> a = activate(state.spec.activation, z);
      if (!a.allFinite()) throw NonFiniteError("non-finite activation in layer " + std::to_string(l));
      trace.pre.push_back(std::move(z));
      trace.post.push_back(std::move(a));
    } else {
      trace.pre.push_back(std::move(z));
    }
  }
  return trace;
}

/// Logits (K x output_dim) for a batch of inputs (K x input_dim).
template <typename Scalar, typename Derived>
Matrix<Scalar> forward(const NetworkState<Scalar>& state, const Eigen::MatrixBase<Derived>& inputs) {
  return forward_trace(state, inputs).logits();
}

template <typename Scalar>
struct Gradient {
  Scalar loss = 0;
  /// Same flat layout as NetworkState::params.
  Vector<Scalar> grad;
};

/// Mean batch loss and its exact gradient with respect to every parameter.
template <typename Scalar, typename Derived>
Gradient<Scalar> backward(const NetworkState<Scalar>& state, const Eigen::MatrixBase<Derived>& inputs,
                          std::span<const int> labels, const LossSpec& loss) {
  const auto trace = forward_trace(state, inputs);
  const auto value = evaluate_loss(loss, trace.logits(), labels);
  Gradient<Scalar> out;
  out.loss = value.value;
  out.grad = Vector<Scalar>::Zero(state.params.size());

  Matrix<Scalar> dz = value.grad;
  for (std::size_t l = state.shapes.size(); l-- > 0;) {
    const auto& s = state.shapes[l];
    const Matrix<Scalar>& a_prev = trace.post[l];
    WeightMap<Scalar>(out.grad.data() + s.weight_offset, s.fan_in, s.fan_out) = a_prev.transpose() * dz;
    out.grad.segment(s.bias_offset, s.fan_out) = dz.colwise().sum().transpose();
    if (l == 0) break;
    const Matrix<Scalar> da = dz * state.weights(l).transpose();
    dz = activation_backward(state.spec.activation, trace.pre[l - 1], trace.post[l], da);
    if (!dz.allFinite()) throw NonFiniteError("non-finite gradient in layer " + std::to_string(l - 1));
  }
  if (!out.grad.allFinite()) throw NonFiniteError("non-finite gradient in layer " + std::to_string(0));
  return out;
}

// Checkpoint: {"schema", "spec": {...}, "layers": [{"fan_in","fan_out"}...],
// "parameters": [...], "optimizer": {"step", "slots": [[...], ...]}}.

inline nlohmann::ordered_json spec_to_json(const NetworkSpec& spec) {
  return {{"input_dim", spec.input_dim},
          {"output_dim", spec.output_dim},
          {"hidden_layers", spec.hidden_layers},
          {"hidden_width", spec.hidden_width},
          {"activation", std::string(to_string(spec.activation))}};
}

inline NetworkSpec spec_from_json(const nlohmann::ordered_json& doc) {
  NetworkSpec spec;
  spec.input_dim = doc.at("input_dim").get<Eigen::Index>();
  spec.output_dim = doc.at("output_dim").get<Eigen::Index>();
  spec.hidden_layers = doc.at("hidden_layers").get<Eigen::Index>();
  spec.hidden_width = doc.at("hidden_width").get<Eigen::Index>();
  spec.activation = parse_activation(doc.at("activation").get<std::string>());
  spec.validate();
  return spec;
}

template <typename Scalar>
nlohmann::ordered_json checkpoint_to_json(const NetworkState<Scalar>& state) {
  auto to_array = [](const Vector<Scalar>& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  nlohmann::ordered_json layers = nlohmann::ordered_json::array();
  for (const auto& s : state.shapes) layers.push_back({{"fan_in", s.fan_in}, {"fan_out", s.fan_out}});
  nlohmann::ordered_json slots = nlohmann::ordered_json::array();
  for (const auto& slot : state.optimizer.slots) slots.push_back(to_array(slot));
  return {{"schema", "coordtune.checkpoint/1"},
          {"spec", spec_to_json(state.spec)},
          {"layers", std::move(layers)},
          {"parameters", to_array(state.params)},
          {"optimizer", {{"step", state.optimizer.step}, {"slots", std::move(slots)}}}};
}

template <typename Scalar = double>
NetworkState<Scalar> checkpoint_from_json(const nlohmann::ordered_json& doc) {
  if (doc.value("schema", "") != "coordtune.checkpoint/1") throw std::invalid_argument("not a checkpoint document");
  NetworkState<Scalar> state(spec_from_json(doc.at("spec")));
  auto from_array = [&](const nlohmann::ordered_json& a) {
    const auto values = a.get<std::vector<double>>();
    if (static_cast<Eigen::Index>(values.size()) != state.params.size()) {
      throw std::invalid_argument("checkpoint array has " + std::to_string(values.size()) + " entries, expected " +
                                  std::to_string(state.params.size()));
    }
    return Eigen::Map<const Vector<double>>(values.data(), static_cast<Eigen::Index>(values.size()))
        .template cast<Scalar>()
        .eval();
  };
  state.params = from_array(doc.at("parameters"));
  state.optimizer.step = doc.at("optimizer").at("step").get<long>();
  for (const auto& slot : doc.at("optimizer").at("slots")) state.optimizer.slots.push_back(from_array(slot));
  return state;
}

}  // namespace coordtune::nn
