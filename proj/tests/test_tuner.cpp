#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>

#include "coordtune/random.hpp"
#include "coordtune/tuner.hpp"

using namespace coordtune;

namespace {

std::vector<Decimal> ints(int lo, int hi) {
  std::vector<Decimal> v;
  for (int i = lo; i <= hi; ++i) v.push_back(Decimal::integer(i));
  return v;
}

HyperparamGrid toy_grid() { return HyperparamGrid({ParamAxis::numeric("x", ints(1, 5)), ParamAxis::numeric("y", ints(1, 5))}); }

HyperparamPoint xy(const HyperparamGrid& g, int x, int y) {
  return g.make_point({{"x", Decimal::integer(x)}, {"y", Decimal::integer(y)}});
}

TrialOutcome quadratic(const HyperparamPoint& p, std::uint64_t) {
  const double x = p.number("x"), y = p.number("y");
  return {(x - 2) * (x - 2) + (y - 3) * (y - 3)};
}

double exhaustive_min(const HyperparamGrid& g, const Objective& f) {
  double best = INFINITY;
  for_each_point(g, [&](const HyperparamPoint& p) {
    best = std::min(best, f(p, 0).score);
    return true;
  });
  return best;
}

// Separable objective with per-axis random tables.
struct Separable {
  std::vector<std::vector<double>> tables;
  HyperparamGrid grid;
  TrialOutcome operator()(const HyperparamPoint& p, std::uint64_t) const {
    double s = 0;
    for (std::size_t a = 0; a < grid.size(); ++a) s += tables[a][*grid.axes()[a].index_of(p.entries()[a].second)];
    return {s};
  }
};

Separable random_separable(std::uint64_t seed, std::size_t axes, int width) {
  Rng rng(seed);
  std::vector<ParamAxis> ax;
  std::vector<std::vector<double>> tables;
  for (std::size_t a = 0; a < axes; ++a) {
    ax.push_back(ParamAxis::numeric("a" + std::to_string(a), ints(1, width)));
    std::vector<double> t;
    for (int i = 0; i < width; ++i) t.push_back(uniform01(rng));
    tables.push_back(std::move(t));
  }
  return {std::move(tables), HyperparamGrid(std::move(ax))};
}

}  // namespace

TEST_CASE("marginal search on the toy quadratic") {
  const auto g = toy_grid();
  SearchConfig cfg;
  const auto r = marginal_search(g, xy(g, 1, 1), quadratic, cfg);
  REQUIRE(r.best_per_step.size() == 3);
  CHECK(r.best_per_step[0].point == xy(g, 1, 3));
  CHECK(r.best_per_step[0].score == 1.0);
  CHECK(r.best_per_step[1].point == xy(g, 2, 3));
  CHECK(r.best_per_step[1].score == 0.0);
  CHECK(r.converged_at_step == 3);
  CHECK(r.best().point == xy(g, 2, 3));
  CHECK(r.best().score == exhaustive_min(g, quadratic));

  // Step 1 sweeps around (1,1) only: x varies with y = 1, y varies with x = 1.
  for (const auto& t : r.trials) {
    if (t.step_index != 1) continue;
    CHECK((t.point.integer("y") == 1 || t.point.integer("x") == 1));
  }
  CHECK(r.total_requests == 30);
  CHECK(r.distinct_evaluations <= r.total_requests);
}

TEST_CASE("alternating search on the toy quadratic") {
  const auto g = toy_grid();
  const auto r = alternating_search(g, xy(g, 1, 1), quadratic, SearchConfig{});
  REQUIRE(r.sweeps.size() >= 2);
  CHECK(r.sweeps[0].chosen == xy(g, 2, 1));
  CHECK(r.sweeps[0].chosen_score == 4.0);
  CHECK(r.sweeps[1].chosen == xy(g, 2, 3));
  CHECK(r.best_per_step[0].score == 0.0);
  CHECK(r.best().point == xy(g, 2, 3));
  CHECK(r.converged_at_step == 2);
}

TEST_CASE("constant objective keeps the start and converges at step 2") {
  const auto g = toy_grid();
  const Objective flat = [](const HyperparamPoint&, std::uint64_t) { return TrialOutcome{0.5}; };
  for (auto* search : {&marginal_search, &alternating_search}) {
    const auto r = (*search)(g, xy(g, 3, 4), flat, SearchConfig{});
    CHECK(r.best().point == xy(g, 3, 4));
    CHECK(r.converged_at_step == 2);
  }
}

TEST_CASE("alternating reaches the joint optimum of separable objectives in one pass") {
  for (std::uint64_t seed : {11u, 22u, 33u}) {
    const auto s = random_separable(seed, 4, 6);
    const Objective f = s;
    SearchConfig cfg;
    cfg.max_steps = 1;
    const auto start = s.grid.point_at({5, 0, 3, 1});
    const auto alt = alternating_search(s.grid, start, f, cfg);
    CHECK(alt.best().score == doctest::Approx(exhaustive_min(s.grid, f)).epsilon(1e-15));
  }
}

TEST_CASE("joint >= alternating >= marginal in quality on the toy") {
  const auto g = toy_grid();
  SearchConfig cfg;
  cfg.max_steps = 1;
  const auto j = joint_search(g, quadratic, cfg);
  const auto a = alternating_search(g, xy(g, 1, 1), quadratic, cfg);
  const auto m = marginal_search(g, xy(g, 1, 1), quadratic, cfg);
  CHECK(j.distinct_evaluations == 25);
  CHECK(j.best().score == 0.0);
  CHECK(j.best().score <= a.best().score);
  CHECK(a.best().score <= m.best().score);
}

TEST_CASE("budget identities on a nine-by-nine grid") {
  std::vector<ParamAxis> ax;
  for (int a = 0; a < 9; ++a) ax.push_back(ParamAxis::numeric("a" + std::to_string(a), ints(1, 9)));
  const HyperparamGrid g(std::move(ax));
  const auto start = g.point_at(std::vector<std::size_t>(9, 4));
  const Objective f = [](const HyperparamPoint&, std::uint64_t) { return TrialOutcome{1.0}; };
  SearchConfig cfg;
  cfg.max_steps = 1;

  const auto cached = marginal_search(g, start, f, cfg);
  CHECK(cached.total_requests == 81);
  CHECK(cached.distinct_evaluations == 73);
  CHECK(cached.objective_calls == 73);

  cfg.cache_enabled = false;
  const auto raw = marginal_search(g, start, f, cfg);
  CHECK(raw.total_requests == 81);
  CHECK(raw.objective_calls == 81);
  CHECK(raw.distinct_evaluations == 73);
}

TEST_CASE("budget identities on the default grid") {
  const auto g = default_grid();
  const Objective f = [](const HyperparamPoint&, std::uint64_t) { return TrialOutcome{0.25}; };
  SearchConfig cfg;
  cfg.max_steps = 1;
  std::uint64_t sum = 0, on_axis = 0;
  const auto init = initial_point();
  for (const auto& a : g.axes()) {
    sum += a.size();
    on_axis += a.contains(init.at(a.id())) ? 1 : 0;
  }
  CHECK(sum == 76);
  const auto r = marginal_search(g, init, f, cfg);
  CHECK(r.total_requests == sum);
  CHECK(r.distinct_evaluations == 1 + sum - on_axis);
  CHECK(r.distinct_evaluations == 70);

  // With an on-grid start every axis contains the base value.
  auto on_grid = point_with(g, init, axis::iterations, Decimal::integer(200));
  on_grid = point_with(g, on_grid, axis::num_neurons, Decimal::integer(30));
  const auto r2 = marginal_search(g, on_grid, f, cfg);
  CHECK(r2.total_requests == 76);
  CHECK(r2.distinct_evaluations == 1 + 76 - 9);

  CHECK_THROWS_AS(joint_search(g, f, cfg), BudgetExceeded);
  try {
    joint_search(g, f, cfg);
  } catch (const BudgetExceeded& e) {
    CHECK(e.product() == std::optional<std::uint64_t>(172'186'884ull));
    CHECK(std::string(e.what()).find("172186884") != std::string::npos);
  }
}

TEST_CASE("every coordinate trial differs from its base in at most one axis") {
  const auto s = random_separable(5, 3, 4);
  const Objective f = s;
  for (auto* search : {&marginal_search, &alternating_search}) {
    const auto r = (*search)(s.grid, s.grid.point_at({0, 0, 0}), f, SearchConfig{});
    for (const auto& sw : r.sweeps) {
      for (const auto& v : s.grid.axis(sw.axis).values()) {
        const auto p = point_with(s.grid, sw.base, sw.axis, v);
        int diff = 0;
        for (std::size_t a = 0; a < p.size(); ++a) diff += p.entries()[a] != sw.base.entries()[a];
        CHECK(diff <= 1);
      }
    }
  }
}

TEST_CASE("best-so-far traces are non-increasing on random objectives") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto g = random_separable(seed, 3, 4).grid;
    // Non-separable random lookup table keyed by the point.
    const Objective f = [seed](const HyperparamPoint& p, std::uint64_t) {
      return TrialOutcome{static_cast<double>(derive_seed(seed, point_key(p).text) % 1000) / 1000.0};
    };
    SearchConfig cfg;
    cfg.base_seed = seed;
    const auto start = g.point_at({seed % 4, (seed / 4) % 4, 0});
    for (const auto& r : {marginal_search(g, start, f, cfg), alternating_search(g, start, f, cfg),
                          joint_search(g, f, cfg), random_search(g, f, cfg, 15)}) {
      for (std::size_t i = 1; i < r.best_per_step.size(); ++i) {
        CHECK(r.best_per_step[i].score <= r.best_per_step[i - 1].score);
      }
    }
  }
}

TEST_CASE("random search") {
  const auto g = toy_grid();
  SearchConfig cfg;
  CHECK(random_search(g, quadratic, cfg, 1).trials.size() == 1);

  const auto a = random_search(g, quadratic, cfg, 10);
  const auto b = random_search(g, quadratic, cfg, 10);
  REQUIRE(a.trials.size() == b.trials.size());
  for (std::size_t i = 0; i < a.trials.size(); ++i) CHECK(a.trials[i].key == b.trials[i].key);

  std::vector<double> all;
  for_each_point(g, [&](const HyperparamPoint& p) {
    all.push_back(quadratic(p, 0).score);
    return true;
  });
  std::sort(all.begin(), all.end());
  const double median = all[12];
  for (std::uint64_t s = 0; s < 100; ++s) {
    cfg.base_seed = s;
    CHECK(random_search(g, quadratic, cfg, 25).best().score <= median);
  }
  CHECK_THROWS(random_search(g, quadratic, cfg, 0));
}

TEST_CASE("failed trials score worst; a step with only failures raises") {
  const auto g = toy_grid();
  const Objective flaky = [](const HyperparamPoint& p, std::uint64_t) -> TrialOutcome {
    if (p.integer("x") == 3) throw std::runtime_error("diverged");
    if (p.integer("y") == 5) return {std::nan("")};
    return quadratic(p, 0);
  };
  const auto r = marginal_search(g, xy(g, 1, 1), flaky, SearchConfig{});
  bool saw_throw = false, saw_nan = false;
  for (const auto& t : r.trials) {
    if (t.point.integer("x") == 3) {
      CHECK(t.failed);
      CHECK(t.score == 1.0);
      saw_throw = true;
    }
    if (t.point.integer("y") == 5 && t.point.integer("x") != 3) {
      CHECK(t.failed);
      saw_nan = true;
    }
  }
  CHECK(saw_throw);
  CHECK(saw_nan);

  const Objective broken = [](const HyperparamPoint&, std::uint64_t) -> TrialOutcome {
    throw std::runtime_error("nope");
  };
  CHECK_THROWS_AS(marginal_search(g, xy(g, 1, 1), broken, SearchConfig{}), AllTrialsFailed);
  CHECK_THROWS_AS(alternating_search(g, xy(g, 1, 1), broken, SearchConfig{}), AllTrialsFailed);
}

TEST_CASE("seeds are derived from the point key and reproduce") {
  const auto g = toy_grid();
  std::map<std::string, std::uint64_t> seen;
  const Objective f = [&](const HyperparamPoint& p, std::uint64_t seed) {
    seen[point_key(p).text] = seed;
    return TrialOutcome{static_cast<double>(seed % 997) / 997.0};
  };
  SearchConfig cfg;
  cfg.base_seed = 1234;
  const auto r1 = alternating_search(g, xy(g, 1, 1), f, cfg);
  for (const auto& [k, s] : seen) CHECK(s == trial_seed(1234, PointKey{k}));
  const auto r2 = alternating_search(g, xy(g, 1, 1), f, cfg);
  REQUIRE(r1.trials.size() == r2.trials.size());
  for (std::size_t i = 0; i < r1.trials.size(); ++i) {
    CHECK(r1.trials[i].key == r2.trials[i].key);
    CHECK(r1.trials[i].score == r2.trials[i].score);
  }
}

TEST_CASE("concurrent sweeps match serial ones") {
  const auto s = random_separable(9, 3, 6);
  const Objective f = s;
  SearchConfig serial, parallel;
  parallel.workers = 4;
  const auto a = marginal_search(s.grid, s.grid.point_at({0, 0, 0}), f, serial);
  const auto b = marginal_search(s.grid, s.grid.point_at({0, 0, 0}), f, parallel);
  REQUIRE(a.trials.size() == b.trials.size());
  for (std::size_t i = 0; i < a.trials.size(); ++i) {
    CHECK(a.trials[i].key == b.trials[i].key);
    CHECK(a.trials[i].score == b.trials[i].score);
    CHECK(a.trials[i].cached == b.trials[i].cached);
  }
}

TEST_CASE("replicates average independent seeds") {
  const auto g = toy_grid();
  std::atomic<int> calls{0};
  const Objective f = [&](const HyperparamPoint&, std::uint64_t seed) {
    ++calls;
    return TrialOutcome{static_cast<double>(seed % 2)};
  };
  SearchConfig cfg;
  cfg.replicates = 3;
  cfg.max_steps = 1;
  const auto r = random_search(g, f, cfg, 1);
  CHECK(calls == 3);
  CHECK(r.trials[0].score >= 0.0);
  CHECK(r.trials[0].score <= 1.0);
  CHECK(std::fmod(r.trials[0].score * 3.0, 1.0) == doctest::Approx(0.0));
}

TEST_CASE("search config validation") {
  SearchConfig c;
  c.max_steps = 0;
  CHECK_THROWS(c.validate());
  CHECK_THROWS(search_config_from_json(Json{{"max_steps", 2}, {"tie_break", "x"}}));
  CHECK(search_config_from_json(Json{{"max_steps", 2}}).max_steps == 2);
  CHECK(parse_search_method("alternating") == SearchMethod::alternating);
  CHECK_THROWS(parse_search_method("bayes"));
}
