#include "coordtune/tuner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <set>

#include "coordtune/random.hpp"

namespace coordtune {

std::string_view to_string(SearchMethod method) noexcept {
  switch (method) {
    case SearchMethod::marginal: return "marginal";
    case SearchMethod::alternating: return "alternating";
    case SearchMethod::joint: return "joint";
    case SearchMethod::random: return "random";
  }
  return "marginal";
}

SearchMethod parse_search_method(std::string_view text) {
  for (auto m : {SearchMethod::marginal, SearchMethod::alternating, SearchMethod::joint, SearchMethod::random}) {
    if (to_string(m) == text) return m;
  }
  throw std::invalid_argument("unknown search method '" + std::string(text) +
                              "' (expected marginal, alternating, joint or random)");
}

void SearchConfig::validate() const {
  if (max_steps < 1) throw std::invalid_argument("search.max_steps must be >= 1");
  if (replicates < 1) throw std::invalid_argument("search.replicates must be >= 1");
  if (workers < 1) throw std::invalid_argument("search.workers must be >= 1");
  if (!std::isfinite(failure_score)) throw std::invalid_argument("search.failure_score must be finite");
}

Json to_json(const SearchConfig& c) {
  return {{"max_steps", c.max_steps},     {"base_seed", c.base_seed},         {"cache_enabled", c.cache_enabled},
          {"replicates", c.replicates},   {"failure_score", c.failure_score}, {"joint_cap", c.joint_cap},
          {"workers", c.workers}};
}

SearchConfig search_config_from_json(const Json& doc, SearchConfig c) {
  if (!doc.is_object()) throw std::invalid_argument("search config must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    try {
      if (key == "max_steps") c.max_steps = value.get<int>();
      else if (key == "base_seed") c.base_seed = value.get<std::uint64_t>();
      else if (key == "cache_enabled") c.cache_enabled = value.get<bool>();
      else if (key == "replicates") c.replicates = value.get<int>();
      else if (key == "failure_score") c.failure_score = value.get<double>();
      else if (key == "joint_cap") c.joint_cap = value.get<std::uint64_t>();
      else if (key == "workers") c.workers = value.get<int>();
      else throw std::invalid_argument("search: unknown field '" + key + "'");
    } catch (const nlohmann::json::exception&) {
      throw std::invalid_argument("search." + key + " has the wrong type");
    }
  }
  c.validate();
  return c;
}

const StepBest& TuneReport::best() const {
  if (best_per_step.empty()) throw std::logic_error("report has no completed step");
  return best_per_step.back();
}

BudgetExceeded::BudgetExceeded(std::optional<std::uint64_t> product, std::uint64_t cap)
    : std::runtime_error("joint grid search refused: grid product " +
                         (product ? std::to_string(*product) : std::string("> 2^64")) + " exceeds cap " +
                         std::to_string(cap)),
      product_(product),
      cap_(cap) {}

std::optional<TrialOutcome> EvaluationCache::find(const PointKey& key) const {
  std::lock_guard lock(mutex_);
  if (auto it = map_.find(key); it != map_.end()) return it->second;
  return std::nullopt;
}

TrialOutcome EvaluationCache::insert_once(const PointKey& key, TrialOutcome outcome) {
  std::lock_guard lock(mutex_);
  return map_.try_emplace(key, std::move(outcome)).first->second;
}

std::size_t EvaluationCache::size() const {
  std::lock_guard lock(mutex_);
  return map_.size();
}

std::uint64_t trial_seed(std::uint64_t base_seed, const PointKey& key) { return derive_seed(base_seed, key.text); }

namespace {

struct Timed {
  TrialOutcome outcome;
  double seconds = 0.0;
};

/// Issues objective requests on behalf of one search run and keeps the
/// report's trial log and counters in request order.
class TrialRunner {
 public:
  TrialRunner(const Objective& objective, const SearchConfig& config, TuneReport& report)
      : objective_(objective), config_(config), report_(report) {}

  std::vector<double> request(const std::vector<HyperparamPoint>& points, int step,
                              const std::optional<std::string>& axis) {
    const std::size_t n = points.size();
    std::vector<PointKey> keys(n);
    std::vector<std::uint64_t> seeds(n);
    std::vector<bool> needs_eval(n, true);
    std::set<std::string> in_batch;
    for (std::size_t i = 0; i < n; ++i) {
      keys[i] = point_key(points[i]);
      seeds[i] = trial_seed(config_.base_seed, keys[i]);
      if (config_.cache_enabled) {
        needs_eval[i] = !cache_.find(keys[i]) && in_batch.insert(keys[i].text).second;
      }
    }

    std::vector<Timed> fresh(n);
    std::vector<std::size_t> jobs;
    for (std::size_t i = 0; i < n; ++i) {
      if (needs_eval[i]) jobs.push_back(i);
    }
    if (config_.workers <= 1 || jobs.size() <= 1) {
      for (auto i : jobs) fresh[i] = evaluate(points[i], seeds[i]);
    } else {
      const auto width = static_cast<std::size_t>(config_.workers);
      for (std::size_t start = 0; start < jobs.size(); start += width) {
        std::vector<std::future<Timed>> running;
        for (std::size_t j = start; j < std::min(jobs.size(), start + width); ++j) {
          const auto i = jobs[j];
          running.push_back(std::async(std::launch::async, [&, i] { return evaluate(points[i], seeds[i]); }));
        }
        for (std::size_t j = 0; j < running.size(); ++j) fresh[jobs[start + j]] = running[j].get();
      }
    }

    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i) {
      TrialResult t;
      t.point = points[i];
      t.key = keys[i];
      t.seed = seeds[i];
      t.step_index = step;
      t.axis_swept = axis;
      TrialOutcome outcome;
      if (needs_eval[i]) {
        ++report_.objective_calls;
        t.wall_time = fresh[i].seconds;
        outcome = config_.cache_enabled ? cache_.insert_once(keys[i], std::move(fresh[i].outcome))
                                        : std::move(fresh[i].outcome);
      } else {
        outcome = *cache_.find(keys[i]);
        t.cached = true;
      }
      t.failed = outcome.failed;
      t.error = outcome.error;
      t.score = outcome.failed ? config_.failure_score : outcome.score;
      t.diagnostics = outcome.diagnostics;
      scores[i] = t.score;
      if (t.failed) ++failures_in_step_[step];
      ++requests_in_step_[step];
      if (distinct_.insert(keys[i].text).second) ++report_.distinct_evaluations;
      ++report_.total_requests;
      report_.trials.push_back(std::move(t));
    }
    return scores;
  }

  void check_step(int step) const {
    const auto r = requests_in_step_.find(step);
    const auto f = failures_in_step_.find(step);
    if (r != requests_in_step_.end() && f != failures_in_step_.end() && f->second == r->second) {
      throw AllTrialsFailed("all " + std::to_string(r->second) + " trials of step " + std::to_string(step) +
                            " failed; last error: " + report_.trials.back().error);
    }
  }

 private:
  Timed evaluate(const HyperparamPoint& point, std::uint64_t seed) const {
    const auto start = std::chrono::steady_clock::now();
    Timed result;
    double total = 0.0;
    for (int r = 0; r < config_.replicates; ++r) {
      const std::uint64_t s = r == 0 ? seed : derive_seed(seed, "replicate/" + std::to_string(r));
      TrialOutcome one;
      try {
        one = objective_(point, s);
        if (!one.failed && !std::isfinite(one.score)) {
          one.failed = true;
          one.error = "objective returned a non-finite score";
        }
      } catch (const std::exception& e) {
        one = TrialOutcome{};
        one.failed = true;
        one.error = e.what();
      }
      if (one.failed) {
        result.outcome = std::move(one);
        break;
      }
      total += one.score;
      if (r == 0) result.outcome = std::move(one);
    }
    if (!result.outcome.failed) result.outcome.score = total / config_.replicates;
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
  }

  const Objective& objective_;
  const SearchConfig& config_;
  TuneReport& report_;
  EvaluationCache cache_;
  std::set<std::string> distinct_;
  std::unordered_map<int, std::size_t> requests_in_step_;
  std::unordered_map<int, std::size_t> failures_in_step_;
};

TuneReport start_report(SearchMethod method, const HyperparamGrid& grid, const SearchConfig& config) {
  config.validate();
  TuneReport report;
  report.method = method;
  report.grid = grid;
  report.config = config;
  return report;
}

std::size_t find_key(const std::vector<HyperparamPoint>& points, const PointKey& key) {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (point_key(points[i]) == key) return i;
  }
  throw std::logic_error("incumbent missing from its own sweep");
}

/// Candidates for one axis around `base`, plus the index of `base` among
/// them. The base is prepended when its value lies off the axis.
struct Sweep {
  std::vector<HyperparamPoint> points;
  std::size_t base_index = 0;
  std::size_t first_value = 0;
};

Sweep make_sweep(const HyperparamGrid& grid, const HyperparamPoint& base, const ParamAxis& axis, bool include_base) {
  Sweep s;
  const bool on_axis = axis.contains(base.at(axis.id()));
  if (include_base && !on_axis) {
    s.points.push_back(base);
    s.first_value = 1;
  }
  for (const auto& v : axis.values()) s.points.push_back(point_with(grid, base, axis.id(), v));
  if (include_base) s.base_index = find_key(s.points, point_key(base));
  return s;
}

}  // namespace

TuneReport marginal_search(const HyperparamGrid& grid, const HyperparamPoint& init, const Objective& objective,
                           const SearchConfig& config) {
  grid.validate_compatible(init);
  TuneReport report = start_report(SearchMethod::marginal, grid, config);
  report.init = init;
  TrialRunner runner(objective, config, report);

  HyperparamPoint base = init;
  std::optional<HyperparamPoint> previous;
  for (int step = 1; step <= config.max_steps; ++step) {
    const bool base_swept = std::any_of(grid.axes().begin(), grid.axes().end(),
                                        [&](const ParamAxis& a) { return a.contains(base.at(a.id())); });
    double base_score = 0.0;
    if (!base_swept) base_score = runner.request({base}, step, std::nullopt).front();

    HyperparamPoint chosen = base;
    double chosen_score = 0.0;
    std::vector<SweepRecord> step_sweeps;
    std::vector<std::pair<HyperparamPoint, double>> seen;
    for (const auto& axis : grid.axes()) {
      Sweep sweep = make_sweep(grid, base, axis, false);
      const auto scores = runner.request(sweep.points, step, axis.id());
      SweepRecord rec{step, axis.id(), base, 0.0, scores, base, 0.0};
      for (std::size_t i = 0; i < scores.size(); ++i) {
        if (sweep.points[i] == base) base_score = scores[i];
        seen.emplace_back(sweep.points[i], scores[i]);
      }
      step_sweeps.push_back(std::move(rec));
    }
    runner.check_step(step);

    // The incumbent wins ties; otherwise the first strict improvement in
    // (axis order, value order) is kept.
    chosen_score = base_score;
    for (const auto& [p, s] : seen) {
      if (s < chosen_score) {
        chosen = p;
        chosen_score = s;
      }
    }
    for (auto& rec : step_sweeps) {
      rec.base_score = base_score;
      const auto& axis = grid.axis(rec.axis);
      std::size_t best = 0;
      for (std::size_t i = 1; i < rec.scores.size(); ++i) {
        if (rec.scores[i] < rec.scores[best]) best = i;
      }
      rec.chosen = point_with(grid, base, rec.axis, axis.values()[best]);
      rec.chosen_score = rec.scores[best];
      report.sweeps.push_back(std::move(rec));
    }
    report.best_per_step.push_back({step, chosen, chosen_score});

    if (previous && *previous == chosen) {
      report.converged_at_step = step;
      break;
    }
    previous = chosen;
    base = chosen;
  }
  return report;
}

TuneReport alternating_search(const HyperparamGrid& grid, const HyperparamPoint& init, const Objective& objective,
                              const SearchConfig& config) {
  grid.validate_compatible(init);
  TuneReport report = start_report(SearchMethod::alternating, grid, config);
  report.init = init;
  TrialRunner runner(objective, config, report);

  HyperparamPoint current = init;
  double current_score = 0.0;
  std::optional<HyperparamPoint> previous;
  for (int step = 1; step <= config.max_steps; ++step) {
    for (const auto& axis : grid.axes()) {
      Sweep sweep = make_sweep(grid, current, axis, true);
      const auto scores = runner.request(sweep.points, step, axis.id());
      // Keep the incumbent on ties, else the lowest value index.
      std::size_t best = sweep.base_index;
      for (std::size_t i = sweep.first_value; i < scores.size(); ++i) {
        if (scores[i] < scores[best]) best = i;
      }
      SweepRecord rec;
      rec.step = step;
      rec.axis = axis.id();
      rec.base = current;
      rec.base_score = scores[sweep.base_index];
      rec.scores.assign(scores.begin() + static_cast<std::ptrdiff_t>(sweep.first_value), scores.end());
      current = sweep.points[best];
      current_score = scores[best];
      rec.chosen = current;
      rec.chosen_score = current_score;
      report.sweeps.push_back(std::move(rec));
    }
    runner.check_step(step);
    report.best_per_step.push_back({step, current, current_score});

    if (previous && *previous == current) {
      report.converged_at_step = step;
      break;
    }
    previous = current;
  }
  return report;
}

TuneReport joint_search(const HyperparamGrid& grid, const Objective& objective, const SearchConfig& config) {
  const auto product = grid.product_size();
  if (!product || *product > config.joint_cap) throw BudgetExceeded(product, config.joint_cap);
  TuneReport report = start_report(SearchMethod::joint, grid, config);
  TrialRunner runner(objective, config, report);

  // Each point is its own step, so best_per_step is the best-so-far trace.
  std::optional<StepBest> best;
  int ordinal = 0;
  for_each_point(grid, [&](const HyperparamPoint& p) {
    ++ordinal;
    const double s = runner.request({p}, ordinal, std::nullopt).front();
    if (!best || s < best->score) best = StepBest{ordinal, p, s};
    report.best_per_step.push_back({ordinal, best->point, best->score});
    return true;
  });
  if (std::all_of(report.trials.begin(), report.trials.end(), [](const TrialResult& t) { return t.failed; })) {
    throw AllTrialsFailed("every joint-search trial failed");
  }
  return report;
}

TuneReport random_search(const HyperparamGrid& grid, const Objective& objective, const SearchConfig& config,
                         int n_trials) {
  if (n_trials < 1) throw std::invalid_argument("random search needs n_trials >= 1");
  TuneReport report = start_report(SearchMethod::random, grid, config);
  TrialRunner runner(objective, config, report);

  Rng rng(derive_seed(config.base_seed, "random-search"));
  std::optional<StepBest> best;
  for (int t = 1; t <= n_trials; ++t) {
    std::vector<std::size_t> idx(grid.size());
    for (std::size_t a = 0; a < grid.size(); ++a) idx[a] = uniform_index(rng, grid.axes()[a].size());
    HyperparamPoint p = grid.point_at(idx);
    const double s = runner.request({p}, t, std::nullopt).front();
    if (!best || s < best->score) best = StepBest{t, p, s};
    report.best_per_step.push_back({t, best->point, best->score});
  }
  if (std::all_of(report.trials.begin(), report.trials.end(), [](const TrialResult& t) { return t.failed; })) {
    throw AllTrialsFailed("every random-search trial failed");
  }
  return report;
}

}  // namespace coordtune
