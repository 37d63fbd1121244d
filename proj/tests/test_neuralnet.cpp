#include <doctest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "coordtune/neuralnet.hpp"
#include "coordtune/modem.hpp"
#include "coordtune/random.hpp"
#include "support.hpp"

using namespace coordtune;
using namespace coordtune::nn;

namespace {

Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * (2.0 * uniform01(rng) - 1.0);
  return m;
}

std::vector<int> random_labels(Rng& rng, std::size_t n, int classes) {
  std::vector<int> v(n);
  for (auto& x : v) x = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(classes)));
  return v;
}

double scalar_act(ActivationKind k, double x) {
  Eigen::MatrixXd z(1, 1);
  z(0, 0) = x;
  return activate(k, z)(0, 0);
}

double scalar_grad(ActivationKind k, double x) {
  Eigen::MatrixXd z(1, 1), g(1, 1);
  z(0, 0) = x;
  g(0, 0) = 1.0;
  return activation_backward(k, z, activate(k, z), g)(0, 0);
}

// Single-step update of a scalar parameter theta = 1 with gradient 0.5.
double one_step(OptimizerKind kind, double lr, double l1 = 0.0, double l2 = 0.0) {
  auto spec = OptimizerSpec::defaults(kind, lr);
  spec.l1 = l1;
  spec.l2 = l2;
  Vector<double> theta(1), g(1);
  theta << 1.0;
  g << 0.5;
  auto state = make_optimizer_state(spec, theta);
  optimizer_step(spec, state, theta, g);
  CHECK(state.step == 1);
  return theta(0);
}

}  // namespace

TEST_CASE("activation values") {
  CHECK(scalar_act(ActivationKind::Relu, -1.0) == 0.0);
  CHECK(scalar_act(ActivationKind::Relu6, 7.0) == 6.0);
  CHECK(scalar_act(ActivationKind::Selu, 0.0) == 0.0);
  CHECK(scalar_grad(ActivationKind::Selu, 1e-9) == doctest::Approx(1.0507).epsilon(1e-12));
  CHECK(scalar_act(ActivationKind::Softsign, 1.0) == 0.5);
  CHECK(scalar_act(ActivationKind::Softsign, -1.0) == -0.5);
  CHECK(scalar_act(ActivationKind::Elu, -1.0) == doctest::Approx(std::exp(-1.0) - 1.0));
  CHECK(scalar_act(ActivationKind::Softplus, 0.0) == doctest::Approx(std::log(2.0)));
  CHECK(scalar_act(ActivationKind::Softplus, 800.0) == 800.0);
  CHECK(scalar_act(ActivationKind::Tanh, 0.5) == doctest::Approx(std::tanh(0.5)));

  const Eigen::RowVectorXd s = activate(ActivationKind::Softmax, Eigen::MatrixXd::Zero(1, 4));
  for (int i = 0; i < 4; ++i) CHECK(s(i) == doctest::Approx(0.25).epsilon(1e-15));

  Eigen::MatrixXd z(1, 3);
  z << -2.0, 0.0, 3.0;
  const Eigen::MatrixXd c = activate(ActivationKind::Crelu, z);
  REQUIRE(c.cols() == 6);
  CHECK(c(0, 0) == 0.0);
  CHECK(c(0, 2) == 3.0);
  CHECK(c(0, 3) == 2.0);
  CHECK(c(0, 5) == 0.0);
  CHECK(output_width(ActivationKind::Crelu, 7) == 14);
  CHECK(output_width(ActivationKind::Tanh, 7) == 7);
}

TEST_CASE("softmax rows are probability vectors") {
  Rng rng(3);
  const Eigen::MatrixXd z = random_matrix(rng, 50, 16, 30.0);
  const Eigen::MatrixXd p = softmax_rows(z);
  CHECK((p.array() >= 0).all());
  for (Eigen::Index r = 0; r < p.rows(); ++r) CHECK(std::abs(p.row(r).sum() - 1.0) <= 1e-12);
}

TEST_CASE("activation derivatives match finite differences away from kinks") {
  Rng rng(17);
  for (auto kind : all_activations) {
    if (kind == ActivationKind::Softmax || kind == ActivationKind::Crelu) continue;  // vector-valued, covered below
    for (int i = 0; i < 100; ++i) {
      double x = 16.0 * uniform01(rng) - 8.0;
      if (std::abs(x) < 1e-3 || std::abs(x - 6.0) < 1e-3) x += 0.01;
      const double h = 1e-6;
      const double fd = (scalar_act(kind, x + h) - scalar_act(kind, x - h)) / (2 * h);
      const double an = scalar_grad(kind, x);
      CHECK(std::abs(fd - an) <= 1e-6 * std::max(1.0, std::abs(an)));
    }
  }
}

TEST_CASE("kink conventions take the left branch") {
  CHECK(scalar_grad(ActivationKind::Relu, 0.0) == 0.0);
  CHECK(scalar_grad(ActivationKind::Relu6, 0.0) == 0.0);
  CHECK(scalar_grad(ActivationKind::Relu6, 6.0) == 1.0);
  CHECK(scalar_grad(ActivationKind::Elu, 0.0) == 1.0);
  CHECK(scalar_grad(ActivationKind::Selu, 0.0) == doctest::Approx(1.0507 * 1.6732));
}

TEST_CASE("vector activations back-propagate like their Jacobians") {
  Rng rng(5);
  for (auto kind : {ActivationKind::Softmax, ActivationKind::Crelu}) {
    const Eigen::MatrixXd z = random_matrix(rng, 1, 5, 2.0);
    const Eigen::MatrixXd a = activate(kind, z);
    const Eigen::MatrixXd w = random_matrix(rng, 1, a.cols());
    const Eigen::MatrixXd an = activation_backward(kind, z, a, w);
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      Eigen::MatrixXd up = z, dn = z;
      up(0, j) += 1e-6;
      dn(0, j) -= 1e-6;
      const double fd = ((activate(kind, up) - activate(kind, dn)).cwiseProduct(w)).sum() / 2e-6;
      CHECK(an(0, j) == doctest::Approx(fd).epsilon(1e-7));
    }
  }
}

TEST_CASE("loss values") {
  const Eigen::MatrixXd z0 = Eigen::MatrixXd::Zero(1, 4);
  const std::vector<int> first{0};
  CHECK(evaluate_loss({LossKind::SoftmaxCE}, z0, first).value == doctest::Approx(std::log(4.0)).epsilon(1e-15));
  CHECK(evaluate_loss({LossKind::SparseSoftmaxCE}, z0, first).value == doctest::Approx(std::log(4.0)));

  Eigen::MatrixXd z1 = Eigen::MatrixXd::Zero(1, 1), t1 = Eigen::MatrixXd::Ones(1, 1);
  CHECK(evaluate_loss({LossKind::SigmoidCE}, z1, t1).value == doctest::Approx(std::log(2.0)));

  Rng rng(8);
  for (int i = 0; i < 10; ++i) {
    const Eigen::MatrixXd z = random_matrix(rng, 3, 5, 4.0);
    const auto labels = random_labels(rng, 3, 5);
    const auto a = evaluate_loss({LossKind::WeightedCE, 1.0}, z, labels);
    const auto b = evaluate_loss({LossKind::SigmoidCE}, z, labels);
    CHECK(a.value == doctest::Approx(b.value).epsilon(1e-14));
    CHECK((a.grad - b.grad).norm() <= 1e-14);
    const auto c = evaluate_loss({LossKind::SoftmaxCE}, z, labels);
    const auto d = evaluate_loss({LossKind::SoftmaxCEv2}, z, labels);
    CHECK(c.value == d.value);
    CHECK(c.grad == d.grad);
  }
}

TEST_CASE("stable softmax cross entropy equals the naive form") {
  Rng rng(9);
  for (int i = 0; i < 20; ++i) {
    const Eigen::MatrixXd z = random_matrix(rng, 1, 8, 3.0);
    const int label = static_cast<int>(uniform_index(rng, 8));
    const double naive = -std::log(std::exp(z(0, label)) / z.array().exp().sum());
    CHECK(evaluate_loss({LossKind::SoftmaxCE}, z, std::vector<int>{label}).value ==
          doctest::Approx(naive).epsilon(1e-10));
  }
}

TEST_CASE("loss gradients match finite differences") {
  Rng rng(10);
  for (auto kind : all_losses) {
    const Eigen::MatrixXd z = random_matrix(rng, 4, 6, 3.0);
    const auto labels = random_labels(rng, 4, 6);
    const LossSpec spec{kind, 2.5};
    const auto v = evaluate_loss(spec, z, labels);
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      Eigen::MatrixXd up = z, dn = z;
      up.data()[i] += 1e-6;
      dn.data()[i] -= 1e-6;
      const double fd = (evaluate_loss(spec, up, labels).value - evaluate_loss(spec, dn, labels).value) / 2e-6;
      CHECK(std::abs(v.grad.data()[i] - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("loss errors") {
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(2, 3);
  CHECK_THROWS_AS(evaluate_loss({LossKind::SoftmaxCE}, z, std::vector<int>{0}), LossError);
  CHECK_THROWS_AS(evaluate_loss({LossKind::SoftmaxCE}, z, std::vector<int>{0, 3}), LossError);
  z(0, 0) = NAN;
  CHECK_THROWS(evaluate_loss({LossKind::SoftmaxCE}, z, std::vector<int>{0, 1}));
  const Eigen::MatrixXd soft = Eigen::MatrixXd::Constant(1, 3, 1.0 / 3.0);
  CHECK_THROWS_AS(evaluate_loss({LossKind::SparseSoftmaxCE}, Eigen::MatrixXd::Zero(1, 3), soft), LossError);
  CHECK_THROWS(LossSpec{LossKind::WeightedCE, 0.0}.validate());
  CHECK_THROWS(parse_loss("Hinge"));
}

TEST_CASE("parameter counts match shape walking") {
  Rng rng(12);
  for (int i = 0; i < 20; ++i) {
    NetworkSpec spec;
    spec.input_dim = 1 + static_cast<Eigen::Index>(uniform_index(rng, 4));
    spec.output_dim = 2 + static_cast<Eigen::Index>(uniform_index(rng, 15));
    spec.hidden_layers = static_cast<Eigen::Index>(uniform_index(rng, 5));
    spec.hidden_width = 1 + static_cast<Eigen::Index>(uniform_index(rng, 40));
    spec.activation = all_activations[uniform_index(rng, all_activations.size())];
    Eigen::Index walked = 0;
    for (const auto& s : layer_shapes(spec)) walked += s.fan_in * s.fan_out + s.fan_out;
    CHECK(spec.parameter_count() == walked);
  }
  NetworkSpec crelu{2, 4, 2, 8, ActivationKind::Crelu};
  CHECK(crelu.parameter_count() == (2 + 1) * 8 + (16 + 1) * 8 + (16 + 1) * 4);
}

TEST_CASE("forward pass") {
  NetworkSpec spec{2, 5, 3, 7, ActivationKind::Tanh};
  NetworkState<double> zero(spec);
  Rng rng(1);
  const Eigen::MatrixXd x = random_matrix(rng, 6, 2, 3.0);
  CHECK(forward(zero, x).isZero(0.0));

  NetworkSpec linear{2, 4, 0, 1, ActivationKind::Selu};
  auto lin = initialize_network<double>(linear, 99);
  lin.bias(0).setLinSpaced(4, -1.0, 1.0);
  const Eigen::MatrixXd expected = (x * lin.weights(0)).rowwise() + lin.bias(0).transpose();
  CHECK((forward(lin, x) - expected).norm() <= 1e-14);

  CHECK_THROWS(forward(lin, Eigen::MatrixXd::Zero(3, 3)));
}

TEST_CASE("forward pass equals an independent loop implementation") {
  for (auto act : {ActivationKind::Selu, ActivationKind::Crelu, ActivationKind::Softmax, ActivationKind::Softsign}) {
    const NetworkSpec spec{2, 16, 1, 16, act};
    const auto state = initialize_network<double>(spec, 4242);
    Rng rng(77);
    const Eigen::MatrixXd x = random_matrix(rng, 10, 2, 2.0);

    // Flat layout: W1 (2x16 row-major), b1, W2 (fan x16 row-major), b2.
    const double* p = state.params.data();
    const int fan = act == ActivationKind::Crelu ? 32 : 16;
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      std::vector<double> h(16);
      for (int j = 0; j < 16; ++j) {
        double s = p[2 * 16 + j];
        for (int i = 0; i < 2; ++i) s += x(r, i) * p[i * 16 + j];
        h[static_cast<std::size_t>(j)] = s;
      }
      std::vector<double> a;
      if (act == ActivationKind::Selu) {
        for (double v : h) a.push_back(1.0507 * (v > 0 ? v : 1.6732 * (std::exp(v) - 1)));
      } else if (act == ActivationKind::Crelu) {
        for (double v : h) a.push_back(v > 0 ? v : 0.0);
        for (double v : h) a.push_back(v < 0 ? -v : 0.0);
      } else if (act == ActivationKind::Softmax) {
        double mx = *std::max_element(h.begin(), h.end()), sum = 0;
        for (double v : h) sum += std::exp(v - mx);
        for (double v : h) a.push_back(std::exp(v - mx) / sum);
      } else {
        for (double v : h) a.push_back(v / (1 + std::abs(v)));
      }
      const double* w2 = p + 2 * 16 + 16;
      const double* b2 = w2 + fan * 16;
      const Eigen::MatrixXd logits = forward(state, x.row(r));
      for (int k = 0; k < 16; ++k) {
        double s = b2[k];
        for (int j = 0; j < fan; ++j) s += a[static_cast<std::size_t>(j)] * w2[j * 16 + k];
        CHECK(std::abs(logits(0, k) - s) <= 1e-12);
      }
    }
  }
}

TEST_CASE("backward matches finite differences for every activation and loss") {
  Rng rng(2024);
  for (auto act : all_activations) {
    for (auto loss : all_losses) {
      const NetworkSpec spec{2, 4, 1, 8, act};
      auto state = initialize_network<double>(spec, rng());
      state.params += 0.1 * Eigen::VectorXd::NullaryExpr(state.params.size(), [&] { return uniform01(rng) - 0.5; });
      const Eigen::MatrixXd x = random_matrix(rng, 5, 2, 1.5);
      const auto labels = random_labels(rng, 5, 4);
      CHECK_MESSAGE(test::gradient_relative_error(state, x, labels, {loss, 2.0}) <= 1e-5,
                    to_string(act), " / ", to_string(loss));
    }
  }
}

TEST_CASE("closed forms of the gradient") {
  Rng rng(6);
  const NetworkSpec spec{2, 4, 2, 6, ActivationKind::Tanh};
  const auto state = initialize_network<double>(spec, 5);
  const Eigen::MatrixXd x = random_matrix(rng, 8, 2);
  const auto labels = random_labels(rng, 8, 4);
  const auto g = backward(state, x, labels, {LossKind::SoftmaxCE});

  const Eigen::MatrixXd p = softmax_rows(forward(state, x));
  const Eigen::MatrixXd t = one_hot<double>(labels, 4);
  const Eigen::VectorXd expected = (p - t).colwise().mean().transpose();
  const auto& last = state.shapes.back();
  CHECK((g.grad.segment(last.bias_offset, 4) - expected).norm() <= 1e-14);

  // Duplicating the batch leaves the mean gradient unchanged.
  Eigen::MatrixXd xx(16, 2);
  xx << x, x;
  std::vector<int> ll = labels;
  ll.insert(ll.end(), labels.begin(), labels.end());
  const auto g2 = backward(state, xx, ll, {LossKind::SoftmaxCE});
  CHECK((g.grad - g2.grad).norm() <= 1e-14);
  CHECK(g.loss == doctest::Approx(g2.loss).epsilon(1e-15));
}

TEST_CASE("non-finite intermediates name the layer") {
  NetworkSpec spec{2, 3, 2, 4, ActivationKind::Relu};
  auto state = initialize_network<double>(spec, 1);
  state.weights(1)(0, 0) = INFINITY;
  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(2, 2);
  try {
    forward(state, x);
    FAIL("expected NonFiniteError");
  } catch (const NonFiniteError& e) {
    CHECK(std::string(e.what()).find("layer 1") != std::string::npos);
  }
}

TEST_CASE("optimizer single steps match the oracle") {
  // Values from tests/oracles/optimizer_oracles.py.
  constexpr double lr = 0.1;
  CHECK(std::abs(one_step(OptimizerKind::GradientDescent, lr) - 0.95) <= 1e-12);
  CHECK(std::abs(one_step(OptimizerKind::Momentum, lr) - 0.95) <= 1e-12);
  CHECK(std::abs(one_step(OptimizerKind::Nesterov, lr) - 0.905) <= 1e-12);
  CHECK(std::abs(one_step(OptimizerKind::Adagrad, lr) - 0.90000000199999994) <= 1e-12);
  CHECK(std::abs(one_step(OptimizerKind::Adadelta, lr) - 0.99995527865833853729) <= 1e-12);
  CHECK(std::abs(one_step(OptimizerKind::Adam, lr) - 0.90000000199999996) <= 1e-12);
  CHECK(std::abs(one_step(OptimizerKind::RMSProp, lr) - 0.68377229722869629651) <= 1e-12);
  CHECK(std::abs(one_step(OptimizerKind::Ftrl, lr) - 0.91548457452714834225) <= 1e-12);
  CHECK(std::abs(one_step(OptimizerKind::Ftrl, lr, 0.01, 0.02) - 0.91576932617659036042) <= 1e-12);
  CHECK(std::abs(one_step(OptimizerKind::ProximalGradientDescent, lr) - 0.95) <= 1e-12);
  CHECK(std::abs(one_step(OptimizerKind::ProximalGradientDescent, lr, 0.01, 0.02) - 0.94710578842315369261) <= 1e-12);
  CHECK(std::abs(one_step(OptimizerKind::ProximalAdagrad, lr) - 0.90000000199999994) <= 1e-12);
  CHECK(std::abs(one_step(OptimizerKind::ProximalAdagrad, lr, 0.01, 0.02) - 0.89442231286011326861) <= 1e-12);
}

TEST_CASE("Adam's first step is about one learning rate against the gradient sign") {
  for (double g0 : {3.0, -0.02, 1e-4}) {
    auto spec = OptimizerSpec::defaults(OptimizerKind::Adam, 0.01);
    Vector<double> th(1), g(1);
    th << 0.3;
    g << g0;
    auto st = make_optimizer_state(spec, th);
    optimizer_step(spec, st, th, g);
    const double delta = th(0) - 0.3;
    CHECK(std::abs(delta + 0.01 * g0 / (std::abs(g0) + 1e-8)) <= 1e-9);
  }
}

TEST_CASE("degenerate regularization matches the base rules") {
  Rng rng(31);
  for (auto [prox, base] : {std::pair{OptimizerKind::ProximalGradientDescent, OptimizerKind::GradientDescent},
                            std::pair{OptimizerKind::ProximalAdagrad, OptimizerKind::Adagrad}}) {
    auto sp = OptimizerSpec::defaults(prox, 0.05);
    auto sb = OptimizerSpec::defaults(base, 0.05);
    Vector<double> a = random_matrix(rng, 6, 1), b = a;
    auto st_a = make_optimizer_state(sp, a);
    auto st_b = make_optimizer_state(sb, b);
    for (int i = 0; i < 10; ++i) {
      const Vector<double> g = random_matrix(rng, 6, 1);
      optimizer_step(sp, st_a, a, g);
      optimizer_step(sb, st_b, b, g);
    }
    CHECK((a - b).norm() <= 1e-13);
  }
}

TEST_CASE("zero gradient leaves parameters in place unless l1 shrinks them") {
  Rng rng(32);
  const Vector<double> start = random_matrix(rng, 5, 1);
  const Vector<double> zero = Vector<double>::Zero(5);
  for (auto kind : all_optimizers) {
    auto spec = OptimizerSpec::defaults(kind, 0.1);
    Vector<double> p = start;
    auto st = make_optimizer_state(spec, p);
    optimizer_step(spec, st, p, zero);
    CHECK_MESSAGE((p - start).norm() <= 1e-14, to_string(kind));
  }
  auto spec = OptimizerSpec::defaults(OptimizerKind::ProximalGradientDescent, 0.1);
  spec.l1 = 0.5;
  Vector<double> p = start;
  auto st = make_optimizer_state(spec, p);
  optimizer_step(spec, st, p, zero);
  CHECK(p.cwiseAbs().sum() < start.cwiseAbs().sum());
}

TEST_CASE("optimizer validation") {
  auto s = OptimizerSpec::defaults(OptimizerKind::Adam, 0.0);
  CHECK_THROWS(s.validate());
  s = OptimizerSpec::defaults(OptimizerKind::Momentum, 0.1);
  s.momentum = 1.0;
  CHECK_THROWS(s.validate());
  CHECK_THROWS(parse_optimizer("Lion"));
  CHECK(parse_optimizer("RMSProp") == OptimizerKind::RMSProp);
  Vector<double> p = Vector<double>::Zero(2), g = Vector<double>::Zero(3);
  auto st = make_optimizer_state(OptimizerSpec{}, p);
  CHECK_THROWS(optimizer_step(OptimizerSpec{}, st, p, g));
}

TEST_CASE("training") {
  // Two Gaussian blobs, one per class.
  auto blobs = [](std::uint64_t seed) {
    auto rng = std::make_shared<Rng>(seed);
    return BatchSource<double>([rng](Eigen::Index k) {
      Batch<double> b{Eigen::MatrixXd(k, 2), std::vector<int>(static_cast<std::size_t>(k))};
      std::normal_distribution<double> n(0.0, 0.5);
      for (Eigen::Index r = 0; r < k; ++r) {
        const int c = static_cast<int>(uniform_index(*rng, 2));
        b.labels[static_cast<std::size_t>(r)] = c;
        b.inputs(r, 0) = (c ? 1.5 : -1.5) + n(*rng);
        b.inputs(r, 1) = (c ? 1.0 : -1.0) + n(*rng);
      }
      return b;
    });
  };
  const NetworkSpec spec{2, 2, 1, 8, ActivationKind::Tanh};
  TrainHyper hyper{OptimizerSpec::defaults(OptimizerKind::GradientDescent, 0.1), {LossKind::SoftmaxCE}, 500, 32};

  const auto r = train<double>(spec, 7, blobs(1), hyper);
  REQUIRE_FALSE(r.failed);
  CHECK(r.loss_trace.size() == 500);
  CHECK(r.state.optimizer.step == 500);
  const auto test = blobs(2)(2000);
  const auto pred = argmax_rows(forward(r.state, test.inputs));
  int correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == test.labels[i];
  CHECK(correct / 2000.0 >= 0.95);

  const auto again = train<double>(spec, 7, blobs(1), hyper);
  CHECK(again.loss_trace == r.loss_trace);

  hyper.iterations = 0;
  const auto untouched = train<double>(spec, 7, blobs(1), hyper);
  CHECK(untouched.state.params == initialize_network<double>(spec, 7).params);
  CHECK(untouched.loss_trace.empty());

  hyper.iterations = 5;
  hyper.optimizer = OptimizerSpec::defaults(OptimizerKind::GradientDescent, 1e300);
  const NetworkSpec relu{2, 2, 2, 8, ActivationKind::Relu};  // tanh saturates instead of diverging
  const auto blown = train<double>(relu, 7, blobs(1), hyper);
  CHECK(blown.failed);
  CHECK_FALSE(blown.error.empty());
}

TEST_CASE("checkpoint and loss-trace export") {
  const NetworkSpec spec{2, 16, 2, 10, ActivationKind::Crelu};
  auto state = initialize_network<double>(spec, 3);
  state.optimizer = make_optimizer_state(OptimizerSpec{}, state.params);
  state.optimizer.slots[1].setConstant(0.25);
  state.optimizer.step = 9;
  const auto doc = checkpoint_to_json(state);
  const auto back = checkpoint_from_json(nlohmann::ordered_json::parse(doc.dump()));
  CHECK(back.spec == spec);
  CHECK(back.params == state.params);
  CHECK(back.optimizer.step == 9);
  REQUIRE(back.optimizer.slots.size() == 2);
  CHECK(back.optimizer.slots[1] == state.optimizer.slots[1]);

  auto broken = doc;
  broken["parameters"].erase(0);
  CHECK_THROWS(checkpoint_from_json(broken));

  std::ostringstream csv;
  write_loss_trace_csv(csv, std::vector<double>{1.5, 0.25});
  CHECK(csv.str() == "iteration,loss\n0,1.5\n1,0.25\n");
}
