#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coordtune/channel.hpp"
#include "coordtune/grid.hpp"
#include "coordtune/neuralnet.hpp"
#include "coordtune/tuner.hpp"

namespace coordtune {

/// Everything about the communication system that a trial does not tune.
struct SystemConfig {
  std::string name = "fso";
  int modulation_order = 16;
  ChannelModel channel = FsoParams{};
  std::size_t test_symbols = 1u << 14;
  bool normalize_inputs = true;
  std::uint64_t base_seed = 0;
  /// WeightedCE positive-class multiplier.
  double pos_weight = 2.0;
  /// When set, each trial writes its loss trace as CSV into this directory.
  std::optional<std::string> loss_trace_dir;

  void validate() const;
};

/// Gamma-Gamma link at alpha = 4.2, beta = 1.4 and Es/N0 = 0 dB.
SystemConfig fso_system();
/// 20 x 100 km link at 2 dBm launch power with the default NLIN coefficients.
SystemConfig fiber_system();
/// Additive white Gaussian noise at the given Es/N0.
SystemConfig awgn_system(double es_n0_db, int modulation_order = 16);

Json system_to_json(const SystemConfig& sys);
/// Missing fields keep their defaults; unknown fields are rejected.
SystemConfig system_from_json(const Json& doc);

/// Quantities derived from a point and the trial seed.
struct TrialPlan {
  nn::NetworkSpec network;
  nn::TrainHyper hyper;
  std::size_t n_train = 0;
  std::uint64_t trial_seed = 0;
  std::uint64_t weights_seed = 0;
  std::uint64_t train_symbols_seed = 0;
  std::uint64_t train_channel_seed = 0;
  std::uint64_t batch_seed = 0;
  std::uint64_t test_symbols_seed = 0;
  std::uint64_t test_channel_seed = 0;
};

TrialPlan make_plan(const HyperparamPoint& point, const SystemConfig& sys, std::uint64_t seed);

/// Trains a detector for `point` and returns its SER on a fresh test stream.
/// Deterministic in (point, sys, seed). Divergence yields failed = true and
/// score 1.
TrialOutcome evaluate_seeded(const HyperparamPoint& point, const SystemConfig& sys, std::uint64_t seed);

/// evaluate_seeded with the seed derived from sys.base_seed and the point key.
TrialResult evaluate(const HyperparamPoint& point, const SystemConfig& sys);

/// Adapter for the search routines.
Objective make_objective(const SystemConfig& sys);

/// Directional comparisons at the starting point, each a mean over `seeds`.
struct TrendReport {
  double fso_ser = 0.0;
  double fiber_ser = 0.0;
  double fiber_softmax_ser = 0.0;
  double fiber_adam_ser = 0.0;
  double fiber_adadelta_ser = 0.0;
  double fiber_ftrl_ser = 0.0;
  int seeds = 0;

  double softmax_degradation() const { return fiber_softmax_ser / fiber_ser; }
  double adadelta_ratio() const { return fiber_adadelta_ser / fiber_adam_ser; }
  double ftrl_ratio() const { return fiber_ftrl_ser / fiber_adam_ser; }
};

TrendReport qualitative_table7_trends(const SystemConfig& sys_fso, const SystemConfig& sys_fiber, int seeds = 3);

}  // namespace coordtune
