#include "coordtune/objective.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>

#include "coordtune/modem.hpp"

namespace coordtune {

namespace {

// Coordinates absent from a reduced grid fall back to the starting point.
const AxisValue& coordinate(const HyperparamPoint& point, std::string_view id) {
  static const HyperparamPoint fallback = initial_point();
  if (const auto* v = point.find(id)) return *v;
  return fallback.at(id);
}

double number_of(const HyperparamPoint& point, std::string_view id) {
  const auto* d = std::get_if<Decimal>(&coordinate(point, id));
  if (!d) throw GridError("axis '" + std::string(id) + "' must be numeric");
  return d->to_double();
}

std::int64_t integer_of(const HyperparamPoint& point, std::string_view id) {
  const auto* d = std::get_if<Decimal>(&coordinate(point, id));
  if (!d || !d->is_integer()) throw GridError("axis '" + std::string(id) + "' must be an integer");
  return d->to_integer();
}

const std::string& tag_of(const HyperparamPoint& point, std::string_view id) {
  const auto* c = std::get_if<Category>(&coordinate(point, id));
  if (!c) throw GridError("axis '" + std::string(id) + "' must be categorical");
  return c->tag;
}

Eigen::MatrixXd to_features(const std::vector<Complex>& received) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(received.size()), 2);
  for (std::size_t i = 0; i < received.size(); ++i) {
    x(static_cast<Eigen::Index>(i), 0) = received[i].real();
    x(static_cast<Eigen::Index>(i), 1) = received[i].imag();
  }
  return x;
}

struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& x, bool enabled) {
    Standardizer s{Eigen::RowVectorXd::Zero(x.cols()), Eigen::RowVectorXd::Ones(x.cols())};
    if (!enabled) return s;
    s.mean = x.colwise().mean();
    const Eigen::RowVectorXd var = (x.rowwise() - s.mean).array().square().colwise().mean();
    for (Eigen::Index c = 0; c < x.cols(); ++c) s.scale(c) = var(c) > 0.0 ? 1.0 / std::sqrt(var(c)) : 1.0;
    return s;
  }
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const {
    return ((x.rowwise() - mean).array().rowwise() * scale.array()).matrix();
  }
};

}  // namespace

void SystemConfig::validate() const {
  (void)qam_constellation(modulation_order);
  coordtune::validate(channel);
  if (test_symbols < 1024) throw std::invalid_argument("system test_symbols must be >= 1024");
  if (!(pos_weight > 0.0)) throw std::invalid_argument("system pos_weight must be > 0");
}

SystemConfig fso_system() {
  SystemConfig s;
  s.name = "fso";
  s.channel = FsoParams{};
  return s;
}

SystemConfig fiber_system() {
  SystemConfig s;
  s.name = "fiber";
  s.channel = FiberParams{};
  return s;
}

SystemConfig awgn_system(double es_n0_db, int modulation_order) {
  SystemConfig s;
  s.name = "awgn";
  s.modulation_order = modulation_order;
  s.channel = AwgnParams::from_es_n0_db(es_n0_db);
  return s;
}

Json system_to_json(const SystemConfig& sys) {
  Json j;
  j["name"] = sys.name;
  j["modulation_order"] = sys.modulation_order;
  j["channel"] = channel_to_json(sys.channel);
  j["test_symbols"] = sys.test_symbols;
  j["normalize_inputs"] = sys.normalize_inputs;
  j["base_seed"] = sys.base_seed;
  j["pos_weight"] = sys.pos_weight;
  if (sys.loss_trace_dir) j["loss_trace_dir"] = *sys.loss_trace_dir;
  return j;
}

SystemConfig system_from_json(const Json& doc) {
  if (!doc.is_object()) throw std::invalid_argument("system config must be a JSON object");
  static const std::set<std::string> known = {"name",       "modulation_order", "channel",       "test_symbols",
                                              "normalize_inputs", "base_seed", "pos_weight", "loss_trace_dir"};
  for (const auto& [key, value] : doc.items()) {
    if (!known.count(key)) throw std::invalid_argument("system: unknown field '" + key + "'");
  }
  SystemConfig s;
  if (doc.contains("channel")) s.channel = channel_from_json(doc.at("channel"));
  s.name = doc.value("name", channel_type(s.channel));
  auto field = [&](const char* key, auto& out) {
    if (!doc.contains(key)) return;
    try {
      out = doc.at(key).get<std::decay_t<decltype(out)>>();
    } catch (const nlohmann::json::exception&) {
      throw std::invalid_argument(std::string("system field '") + key + "' has the wrong type");
    }
  };
  field("modulation_order", s.modulation_order);
  field("test_symbols", s.test_symbols);
  field("normalize_inputs", s.normalize_inputs);
  field("base_seed", s.base_seed);
  field("pos_weight", s.pos_weight);
  if (doc.contains("loss_trace_dir")) s.loss_trace_dir = doc.at("loss_trace_dir").get<std::string>();
  s.validate();
  return s;
}

TrialPlan make_plan(const HyperparamPoint& point, const SystemConfig& sys, std::uint64_t seed) {
  // Any problem with a coordinate is reported against its axis.
  auto at = [](std::string_view id, auto&& get) {
    try {
      return get();
    } catch (const std::exception& e) {
      throw GridError("point field '" + std::string(id) + "': " + e.what());
    }
  };
  TrialPlan plan;
  plan.network.input_dim = 2;
  plan.network.output_dim = sys.modulation_order;
  plan.network.hidden_layers = at(axis::num_layers, [&] {
    const auto v = integer_of(point, axis::num_layers);
    if (v < 0) throw std::invalid_argument("must be >= 0");
    return v;
  });
  plan.network.hidden_width = at(axis::num_neurons, [&] {
    const auto v = integer_of(point, axis::num_neurons);
    if (v < 1) throw std::invalid_argument("must be >= 1");
    return v;
  });
  plan.network.activation = at(axis::activation, [&] { return nn::parse_activation(tag_of(point, axis::activation)); });

  const double lr = at(axis::learning_rate, [&] {
    const double v = number_of(point, axis::learning_rate);
    if (!(v > 0.0)) throw std::invalid_argument("must be > 0");
    return v;
  });
  plan.hyper.optimizer = nn::OptimizerSpec::defaults(
      at(axis::optimizer, [&] { return nn::parse_optimizer(tag_of(point, axis::optimizer)); }), lr);
  plan.hyper.loss = {at(axis::loss_function, [&] { return nn::parse_loss(tag_of(point, axis::loss_function)); }),
                     sys.pos_weight};
  plan.hyper.iterations = at(axis::iterations, [&] {
    const auto v = integer_of(point, axis::iterations);
    if (v < 0) throw std::invalid_argument("must be >= 0");
    return v;
  });
  plan.hyper.batch_size = at(axis::batch_size, [&] {
    const auto v = integer_of(point, axis::batch_size);
    if (v < 1) throw std::invalid_argument("must be >= 1");
    return v;
  });
  const auto ratio = at(axis::sample_to_batch_ratio, [&] {
    const auto v = integer_of(point, axis::sample_to_batch_ratio);
    if (v < 1) throw std::invalid_argument("must be >= 1");
    return v;
  });
  plan.n_train = static_cast<std::size_t>(ratio * plan.hyper.batch_size);

  plan.trial_seed = seed;
  plan.weights_seed = derive_seed(seed, "weights");
  plan.train_symbols_seed = derive_seed(seed, "train/symbols");
  plan.train_channel_seed = derive_seed(seed, "train/channel");
  plan.batch_seed = derive_seed(seed, "train/batches");
  plan.test_symbols_seed = derive_seed(seed, "test/symbols");
  plan.test_channel_seed = derive_seed(seed, "test/channel");
  return plan;
}

TrialOutcome evaluate_seeded(const HyperparamPoint& point, const SystemConfig& sys, std::uint64_t seed) {
  sys.validate();
  const TrialPlan plan = make_plan(point, sys, seed);
  const Constellation constellation = qam_constellation(sys.modulation_order);

  Rng train_sym_rng(plan.train_symbols_seed);
  Rng train_ch_rng(plan.train_channel_seed);
  const SymbolBatch train = generate_symbols(train_sym_rng, constellation, plan.n_train);
  const Eigen::MatrixXd train_raw = to_features(apply_channel(sys.channel, train.mapped, train_ch_rng));
  const Standardizer norm = Standardizer::fit(train_raw, sys.normalize_inputs);
  const Eigen::MatrixXd pool = norm.apply(train_raw);

  Rng batch_rng(plan.batch_seed);
  const nn::BatchSource<double> source = [&](Eigen::Index k) {
    nn::Batch<double> b{Eigen::MatrixXd(k, 2), std::vector<int>(static_cast<std::size_t>(k))};
    for (Eigen::Index r = 0; r < k; ++r) {
      const auto i = static_cast<Eigen::Index>(uniform_index(batch_rng, plan.n_train));
      b.inputs.row(r) = pool.row(i);
      b.labels[static_cast<std::size_t>(r)] = train.indices[static_cast<std::size_t>(i)];
    }
    return b;
  };

  const auto trained = nn::train<double>(plan.network, plan.weights_seed, source, plan.hyper);

  TrialOutcome out;
  Json& diag = out.diagnostics;
  diag["n_train"] = plan.n_train;
  diag["iterations"] = plan.hyper.iterations;
  diag["parameters"] = plan.network.parameter_count();
  diag["seeds"] = {{"trial", plan.trial_seed},
                   {"weights", plan.weights_seed},
                   {"train_symbols", plan.train_symbols_seed},
                   {"train_channel", plan.train_channel_seed},
                   {"batches", plan.batch_seed},
                   {"test_symbols", plan.test_symbols_seed},
                   {"test_channel", plan.test_channel_seed}};
  if (!trained.loss_trace.empty()) diag["final_loss"] = trained.loss_trace.back();
  if (sys.loss_trace_dir) {
    std::filesystem::create_directories(*sys.loss_trace_dir);
    const auto path = std::filesystem::path(*sys.loss_trace_dir) / (std::to_string(seed) + ".csv");
    std::ofstream f(path);
    nn::write_loss_trace_csv(f, trained.loss_trace);
    diag["loss_trace"] = path.string();
  }
  if (trained.failed) {
    out.failed = true;
    out.score = 1.0;
    out.error = trained.error;
    return out;
  }

  Rng test_sym_rng(plan.test_symbols_seed);
  Rng test_ch_rng(plan.test_channel_seed);
  const SymbolBatch test = generate_symbols(test_sym_rng, constellation, sys.test_symbols);
  const std::vector<Complex> received = apply_channel(sys.channel, test.mapped, test_ch_rng);
  try {
    const Eigen::MatrixXd logits = nn::forward(trained.state, norm.apply(to_features(received)));
    out.score = ser(argmax_rows(logits), test.indices);
  } catch (const nn::NonFiniteError& e) {
    out.failed = true;
    out.score = 1.0;
    out.error = std::string("test forward pass: ") + e.what();
    return out;
  }
  diag["ser"] = out.score;
  // Nearest-neighbour detection is only optimal without fading.
  if (!std::holds_alternative<FsoParams>(sys.channel)) {
    diag["ml_ser"] = ser(ml_baseline_detect(received, constellation), test.indices);
  }
  return out;
}

TrialResult evaluate(const HyperparamPoint& point, const SystemConfig& sys) {
  TrialResult r;
  r.point = point;
  r.key = point_key(point);
  r.seed = trial_seed(sys.base_seed, r.key);
  const auto start = std::chrono::steady_clock::now();
  try {
    auto o = evaluate_seeded(point, sys, r.seed);
    r.score = o.score;
    r.failed = o.failed;
    r.error = std::move(o.error);
    r.diagnostics = std::move(o.diagnostics);
  } catch (const GridError&) {
    throw;
  } catch (const std::exception& e) {
    r.score = 1.0;
    r.failed = true;
    r.error = e.what();
  }
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

Objective make_objective(const SystemConfig& sys) {
  sys.validate();
  return [sys](const HyperparamPoint& point, std::uint64_t seed) { return evaluate_seeded(point, sys, seed); };
}

TrendReport qualitative_table7_trends(const SystemConfig& sys_fso, const SystemConfig& sys_fiber, int seeds) {
  if (seeds < 1) throw std::invalid_argument("trend report needs at least one seed");
  const HyperparamPoint init = initial_point();
  auto with = [&](std::string_view id, const std::string& tag) {
    auto entries = init.entries();
    for (auto& [k, v] : entries) {
      if (k == id) v = Category{tag};
    }
    return HyperparamPoint(std::move(entries));
  };
  const HyperparamPoint softmax = with(axis::activation, "Softmax");
  const HyperparamPoint adadelta = with(axis::optimizer, "Adadelta");
  const HyperparamPoint ftrl = with(axis::optimizer, "Ftrl");

  TrendReport t;
  t.seeds = seeds;
  for (int s = 0; s < seeds; ++s) {
    const std::string tag = "trend/" + std::to_string(s);
    auto run = [&](const HyperparamPoint& p, const SystemConfig& sys) {
      return evaluate_seeded(p, sys, derive_seed(sys.base_seed, point_key(p).text, tag)).score;
    };
    t.fso_ser += run(init, sys_fso);
    t.fiber_ser += run(init, sys_fiber);
    t.fiber_softmax_ser += run(softmax, sys_fiber);
    t.fiber_adadelta_ser += run(adadelta, sys_fiber);
    t.fiber_ftrl_ser += run(ftrl, sys_fiber);
  }
  t.fiber_adam_ser = t.fiber_ser;  // the starting point already uses Adam
  for (double* v : {&t.fso_ser, &t.fiber_ser, &t.fiber_softmax_ser, &t.fiber_adam_ser, &t.fiber_adadelta_ser,
                    &t.fiber_ftrl_ser}) {
    *v /= seeds;
  }
  return t;
}

}  // namespace coordtune
