#pragma once

#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "coordtune/grid.hpp"

namespace coordtune {

/// What an objective reports for one (point, seed) evaluation. Lower scores
/// are better. `failed` trials are rescored with SearchConfig::failure_score.
struct TrialOutcome {
  double score = 0.0;
  bool failed = false;
  std::string error;
  Json diagnostics = Json::object();
};

/// Must be deterministic in (point, seed). Exceptions are caught and recorded
/// as failed trials.
using Objective = std::function<TrialOutcome(const HyperparamPoint&, std::uint64_t seed)>;

enum class SearchMethod { marginal, alternating, joint, random };

std::string_view to_string(SearchMethod method) noexcept;
SearchMethod parse_search_method(std::string_view text);

struct SearchConfig {
  int max_steps = 5;
  std::uint64_t base_seed = 0;
  bool cache_enabled = true;
  /// Independent re-evaluations averaged per trial (seed-derived).
  int replicates = 1;
  /// Score assigned to failed trials (worst possible SER).
  double failure_score = 1.0;
  /// Largest Cartesian product joint_search will enumerate.
  std::uint64_t joint_cap = 1'000'000;
  /// Concurrent objective evaluations within one sweep.
  int workers = 1;

  void validate() const;
};

Json to_json(const SearchConfig& config);
/// Missing fields keep their defaults; unknown fields are rejected.
SearchConfig search_config_from_json(const Json& doc, SearchConfig defaults = {});

struct TrialResult {
  HyperparamPoint point;
  PointKey key;
  double score = 0.0;
  std::uint64_t seed = 0;
  double wall_time = 0.0;
  int step_index = 0;
  std::optional<std::string> axis_swept;
  bool cached = false;
  bool failed = false;
  std::string error;
  Json diagnostics = Json::object();
};

/// One axis sweep: every candidate on `axis` around `base`.
struct SweepRecord {
  int step = 0;
  std::string axis;
  HyperparamPoint base;
  double base_score = 0.0;
  /// One score per axis value, in axis order.
  std::vector<double> scores;
  HyperparamPoint chosen;
  double chosen_score = 0.0;
};

struct StepBest {
  int step = 0;
  HyperparamPoint point;
  double score = 0.0;
};

struct TuneReport {
  SearchMethod method = SearchMethod::marginal;
  HyperparamGrid grid{std::vector<ParamAxis>{}};
  std::optional<HyperparamPoint> init;
  SearchConfig config;
  std::vector<TrialResult> trials;
  std::vector<SweepRecord> sweeps;
  std::vector<StepBest> best_per_step;
  std::uint64_t distinct_evaluations = 0;
  std::uint64_t total_requests = 0;
  std::uint64_t objective_calls = 0;
  std::optional<int> converged_at_step;

  const StepBest& best() const;
};

/// Thrown by joint_search when the grid product exceeds the cap.
class BudgetExceeded : public std::runtime_error {
 public:
  BudgetExceeded(std::optional<std::uint64_t> product, std::uint64_t cap);
  /// nullopt when the product overflows 64 bits.
  std::optional<std::uint64_t> product() const noexcept { return product_; }
  std::uint64_t cap() const noexcept { return cap_; }

 private:
  std::optional<std::uint64_t> product_;
  std::uint64_t cap_;
};

/// Thrown when every trial of a step failed.
class AllTrialsFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Insert-once map from point key to outcome; safe for concurrent use.
class EvaluationCache {
 public:
  std::optional<TrialOutcome> find(const PointKey& key) const;
  /// Stores `outcome` unless the key is present; returns the stored value.
  TrialOutcome insert_once(const PointKey& key, TrialOutcome outcome);
  std::size_t size() const;

 private:
  struct Hash {
    std::size_t operator()(const PointKey& k) const noexcept { return std::hash<std::string>{}(k.text); }
  };
  mutable std::mutex mutex_;
  std::unordered_map<PointKey, TrialOutcome, Hash> map_;
};

/// Seed used for every evaluation of `key` under `base_seed`.
std::uint64_t trial_seed(std::uint64_t base_seed, const PointKey& key);

/// Method 1: each step sweeps every axis from the same base point; the best
/// point seen in the step becomes the next base.
TuneReport marginal_search(const HyperparamGrid& grid, const HyperparamPoint& init, const Objective& objective,
                           const SearchConfig& config);

/// Method 2: coordinate descent; each axis sweep moves the current point
/// before the next axis is swept.
TuneReport alternating_search(const HyperparamGrid& grid, const HyperparamPoint& init, const Objective& objective,
                              const SearchConfig& config);

/// Full Cartesian product in lexicographic order. Throws BudgetExceeded.
TuneReport joint_search(const HyperparamGrid& grid, const Objective& objective, const SearchConfig& config);

/// `n_trials` points drawn uniformly with replacement from the grid.
TuneReport random_search(const HyperparamGrid& grid, const Objective& objective, const SearchConfig& config,
                         int n_trials);

}  // namespace coordtune
