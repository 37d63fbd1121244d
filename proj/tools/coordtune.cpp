// Command-line front end: tune, eval, sweep-table, channel-stats.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <locale>
#include <sstream>

#include "coordtune/campaign.hpp"
#include "coordtune/channel.hpp"
#include "coordtune/objective.hpp"
#include "coordtune/report.hpp"

namespace fs = std::filesystem;
using namespace coordtune;

namespace {

enum Exit { ok = 0, config_error = 2, budget_error = 3, runtime_error = 4 };

std::pair<std::string, std::string> split_assignment(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + text + "' is not of the form key=value");
  return {text.substr(0, eq), text.substr(eq + 1)};
}

std::string with_commas(std::uint64_t v) {
  std::string digits = std::to_string(v);
  for (int i = static_cast<int>(digits.size()) - 3; i > 0; i -= 3) digits.insert(static_cast<std::size_t>(i), ",");
  return digits;
}

// Accepts inline JSON or a path to a JSON file.
Json json_argument(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\n");
  if (first != std::string::npos && (text[first] == '{' || text[first] == '[')) {
    try {
      return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(std::string("inline JSON: ") + e.what());
    }
  }
  return load_json_file(text);
}

SystemConfig system_argument(const std::string& text) {
  if (text == "fso") return fso_system();
  if (text == "fiber") return fiber_system();
  if (text == "awgn") return awgn_system(10.0);
  try {
    return system_from_json(json_argument(text));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("system: ") + e.what());
  }
}

// ---------------------------------------------------------------- tune

struct TuneArgs {
  std::string config;
  std::string manifest;
  std::vector<std::string> methods;
  std::vector<std::string> systems;
  int max_steps = 0;
  std::string output;
  std::optional<std::uint64_t> seed;
  int workers = 0;
  std::vector<std::string> sets;
};

int run_tune(const TuneArgs& a, const std::vector<std::string>& extras) {
  std::vector<std::pair<std::string, std::string>> cli;
  for (const auto& s : a.sets) cli.push_back(split_assignment(s));
  for (const auto& e : extras) {
    if (e.rfind("--", 0) != 0) throw ConfigError("unexpected argument '" + e + "'");
    cli.push_back(split_assignment(e.substr(2)));
  }
  if (a.max_steps > 0) cli.emplace_back("search.max_steps", std::to_string(a.max_steps));
  if (a.workers > 0) cli.emplace_back("search.workers", std::to_string(a.workers));
  if (a.seed) cli.emplace_back("search.base_seed", std::to_string(*a.seed));
  if (!a.output.empty()) cli.emplace_back("output_dir", Json(a.output).dump());
  if (!a.methods.empty()) cli.emplace_back("methods", Json(a.methods).dump());

  Json file_doc;
  if (!a.manifest.empty()) {
    file_doc = campaign_to_json(campaign_from_manifest(load_json_file(a.manifest)));
  } else if (!a.config.empty()) {
    file_doc = load_json_file(a.config);
  }
  CampaignConfig config = resolve_campaign(file_doc, process_environment(), cli);

  if (!a.systems.empty()) {
    std::vector<SystemConfig> chosen;
    for (const auto& name : a.systems) {
      const auto it = std::find_if(config.systems.begin(), config.systems.end(),
                                   [&](const SystemConfig& s) { return s.name == name; });
      chosen.push_back(it != config.systems.end() ? *it : system_argument(name));
    }
    config.systems = std::move(chosen);
    config.validate();
  }

  const auto result = run_campaign(config);
  for (const auto& run : result.runs) {
    const auto& best = run.report.best();
    std::cout << run.system << ' ' << to_string(run.method) << " best=" << best.score << " key="
              << point_key(best.point).text << " distinct=" << run.report.distinct_evaluations
              << " requests=" << run.report.total_requests << '\n';
  }
  std::cout << "wrote " << (fs::path(config.output_dir) / "manifest.json").string() << '\n';
  return ok;
}

// ---------------------------------------------------------------- eval

int run_eval(const std::string& point_arg, const std::string& system_arg, std::optional<std::uint64_t> seed,
             const std::vector<std::string>& sets, const std::vector<std::string>& system_sets) {
  const HyperparamGrid grid = default_grid();
  Json point_doc = to_json(initial_point());
  if (!point_arg.empty()) {
    const Json given = json_argument(point_arg);
    if (!given.is_object()) throw ConfigError("point must be a JSON object");
    for (const auto& [k, v] : given.items()) {
      if (!grid.axis_index(k)) throw ConfigError("point field '" + k + "': unknown axis");
      point_doc[k] = v;
    }
  }
  for (const auto& s : sets) {
    auto [k, v] = split_assignment(s);
    if (!grid.axis_index(k)) throw ConfigError("point field '" + k + "': unknown axis");
    Json parsed;
    try {
      parsed = Json::parse(v);
    } catch (const nlohmann::json::parse_error&) {
      parsed = v;
    }
    point_doc[k] = parsed;
  }
  HyperparamPoint point;
  try {
    point = point_from_json(grid, point_doc);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }

  SystemConfig sys = system_argument(system_arg);
  if (!system_sets.empty()) {
    Json doc = system_to_json(sys);
    for (const auto& s : system_sets) {
      auto [k, v] = split_assignment(s);
      apply_override(doc, k, v);
    }
    try {
      sys = system_from_json(doc);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("system: ") + e.what());
    }
  }
  if (seed) sys.base_seed = *seed;
  try {
    (void)make_plan(point, sys, 0);
  } catch (const GridError& e) {
    throw ConfigError(e.what());
  }

  const TrialResult r = evaluate(point, sys);
  Json out;
  out["system"] = sys.name;
  out["key"] = r.key.text;
  out["point"] = to_json(r.point);
  out["score"] = r.score;
  out["failed"] = r.failed;
  if (!r.error.empty()) out["error"] = r.error;
  out["seed"] = r.seed;
  out["wall_time"] = r.wall_time;
  out["diagnostics"] = r.diagnostics;
  std::cout << out.dump(2) << '\n';
  return ok;
}

// ---------------------------------------------------------------- sweep-table

int run_sweep_table(const std::vector<std::string>& reports, const std::string& out_dir, int step) {
  std::vector<TableRun> runs;
  for (const auto& path : reports) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open report '" + path + "'");
    ParsedReport parsed;
    try {
      parsed = parse_report_jsonl(f);
    } catch (const std::exception& e) {
      throw ConfigError(path + ": " + e.what());
    }
    runs.push_back({parsed.system(), parsed.method(), parsed.grid(), sweep_table(parsed, step)});
  }
  const Table7 t = render_table7(runs);
  if (out_dir.empty()) {
    std::cout << t.markdown;
  } else {
    fs::create_directories(out_dir);
    std::ofstream(fs::path(out_dir) / "table7.md") << t.markdown;
    std::ofstream(fs::path(out_dir) / "table7.csv") << t.csv;
    std::cout << "wrote " << (fs::path(out_dir) / "table7.md").string() << '\n';
  }
  return ok;
}

// ---------------------------------------------------------------- channel-stats

void write_histogram(const fs::path& path, const std::vector<double>& x, int bins) {
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  const double lo = *lo_it;
  const double hi = *hi_it > lo ? *hi_it : lo + 1.0;
  const double width = (hi - lo) / bins;
  std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
  for (double v : x) {
    auto b = static_cast<std::size_t>((v - lo) / width);
    counts[std::min(b, counts.size() - 1)]++;
  }
  std::ofstream f(path);
  f.precision(17);
  f << "bin_lo,bin_hi,count,density\n";
  for (std::size_t b = 0; b < counts.size(); ++b) {
    const double a = lo + static_cast<double>(b) * width;
    f << a << ',' << a + width << ',' << counts[b] << ','
      << static_cast<double>(counts[b]) / (static_cast<double>(x.size()) * width) << '\n';
  }
}

int run_channel_stats(const std::string& channel_arg, std::size_t n, std::uint64_t seed, const std::string& out_dir,
                      int bins, const std::vector<std::string>& sets) {
  if (n < 1000) throw ConfigError("channel-stats: -n must be >= 1000");
  if (bins < 1) throw ConfigError("channel-stats: --bins must be >= 1");
  Json doc;
  if (channel_arg == "fso" || channel_arg == "fiber" || channel_arg == "awgn") {
    doc = {{"type", channel_arg}};
  } else {
    doc = json_argument(channel_arg);
  }
  for (const auto& s : sets) {
    auto [k, v] = split_assignment(s);
    apply_override(doc, k, v);
  }
  ChannelModel model;
  try {
    model = channel_from_json(doc);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("channel: ") + e.what());
  }

  fs::create_directories(out_dir);
  Rng rng(derive_seed(seed, "channel-stats"));
  Json stats;
  stats["channel"] = channel_to_json(model);
  stats["n"] = n;
  stats["seed"] = seed;
  std::ofstream moments(fs::path(out_dir) / "moments.csv");
  moments.precision(17);
  moments << "quantity,empirical,expected\n";

  if (const auto* f = std::get_if<FsoParams>(&model)) {
    const auto x = gg_sample(rng, f->alpha, f->beta, n);
    double m1 = 0, m2 = 0;
    for (double v : x) {
      m1 += v;
      m2 += v * v;
    }
    m1 /= static_cast<double>(n);
    m2 /= static_cast<double>(n);
    const double si = m2 / (m1 * m1) - 1.0;
    const double si_expected = 1.0 / f->alpha + 1.0 / f->beta + 1.0 / (f->alpha * f->beta);
    const double ks = gg_ks_statistic(x, f->alpha, f->beta);
    moments << "mean," << m1 << ",1\n";
    moments << "second_moment," << m2 << ',' << 1.0 + si_expected << '\n';
    moments << "scintillation_index," << si << ',' << si_expected << '\n';
    moments << "ks_statistic," << ks << ",\n";
    write_histogram(fs::path(out_dir) / "histogram.csv", x, bins);
    stats["mean"] = m1;
    stats["scintillation_index"] = si;
    stats["scintillation_index_expected"] = si_expected;
    stats["ks_statistic"] = ks;
    std::cout << "mean " << m1 << "\nscintillation_index " << si << " (expected " << si_expected << ")\nks_statistic "
              << ks << '\n';
  } else {
    // Pass zeros through the channel: what comes out is the noise.
    const std::vector<Complex> zeros(n, Complex(0.0, 0.0));
    const auto noise = apply_channel(model, zeros, rng);
    double re = 0, im = 0, power = 0;
    std::vector<double> real_part(n);
    for (std::size_t i = 0; i < n; ++i) {
      re += noise[i].real();
      im += noise[i].imag();
      power += std::norm(noise[i]);
      real_part[i] = noise[i].real();
    }
    const double dn = static_cast<double>(n);
    const double variance = power / dn - (re * re + im * im) / (dn * dn);
    double requested = 0;
    if (const auto* p = std::get_if<FiberParams>(&model)) {
      const auto fn = fiber_noise_variance(*p);
      requested = fn.normalized;
      stats["sigma2_ase"] = fn.ase;
      stats["sigma2_nlin"] = fn.nlin;
      stats["sigma2_total"] = fn.total;
      stats["launch_power_w"] = fn.launch_power;
      stats["snr_eff_db"] = 10.0 * std::log10(fn.snr_eff());
      moments << "sigma2_ase_w," << fn.ase << ",\n";
      moments << "sigma2_nlin_w," << fn.nlin << ",\n";
      std::cout << "sigma2_ase " << fn.ase << "\nsigma2_nlin " << fn.nlin << "\nsnr_eff_db "
                << 10.0 * std::log10(fn.snr_eff()) << '\n';
    } else {
      requested = std::get<AwgnParams>(model).noise_variance;
    }
    moments << "noise_variance," << variance << ',' << requested << '\n';
    write_histogram(fs::path(out_dir) / "histogram.csv", real_part, bins);
    stats["noise_variance"] = variance;
    stats["noise_variance_requested"] = requested;
    stats["relative_error"] = requested > 0 ? std::abs(variance - requested) / requested : std::abs(variance);
    std::cout << "noise_variance " << variance << " (requested " << requested << ")\n";
  }
  std::ofstream(fs::path(out_dir) / "stats.json") << stats.dump(2) << '\n';
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coordinate-wise hyperparameter search for neural symbol detectors"};
  app.require_subcommand(1);

  TuneArgs tune;
  auto* tune_cmd = app.add_subcommand("tune", "Run a search campaign");
  tune_cmd->add_option("--config", tune.config, "Campaign JSON file");
  tune_cmd->add_option("--manifest", tune.manifest, "Re-run the campaign recorded in a manifest.json");
  tune_cmd->add_option("--method", tune.methods, "marginal, alternating, joint or random (repeatable)");
  tune_cmd->add_option("--system", tune.systems, "System name from the config or a preset (repeatable)");
  tune_cmd->add_option("--max-steps", tune.max_steps, "Search steps");
  tune_cmd->add_option("--output", tune.output, "Output directory");
  tune_cmd->add_option("--seed", tune.seed, "Search base seed");
  tune_cmd->add_option("--workers", tune.workers, "Concurrent trials per sweep");
  tune_cmd->add_option("--set", tune.sets, "Config override key=value (repeatable)");
  tune_cmd->allow_extras();
  tune_cmd->get_option("--manifest")->excludes("--config");

  std::string eval_point, eval_system = "fso";
  std::optional<std::uint64_t> eval_seed;
  std::vector<std::string> eval_sets, eval_system_sets;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate one hyperparameter point");
  eval_cmd->add_option("--point", eval_point, "Point JSON (inline or file); missing axes use the starting point");
  eval_cmd->add_option("--system", eval_system, "fso, fiber, awgn or a system JSON")->capture_default_str();
  eval_cmd->add_option("--seed", eval_seed, "System base seed");
  eval_cmd->add_option("--set", eval_sets, "Point coordinate override axis=value (repeatable)");
  eval_cmd->add_option("--system-set", eval_system_sets, "System override key=value (repeatable)");

  std::vector<std::string> table_reports;
  std::string table_out;
  int table_step = 1;
  auto* table_cmd = app.add_subcommand("sweep-table", "Render the per-axis SER table from report.jsonl files");
  table_cmd->add_option("reports", table_reports, "report.jsonl files")->required();
  table_cmd->add_option("--out", table_out, "Directory for table7.md/table7.csv (default: markdown to stdout)");
  table_cmd->add_option("--step", table_step, "Search step to tabulate")->capture_default_str();

  std::string stats_channel = "fso", stats_out = "channel-stats";
  std::size_t stats_n = 1'000'000;
  std::uint64_t stats_seed = 0;
  int stats_bins = 100;
  std::vector<std::string> stats_sets;
  auto* stats_cmd = app.add_subcommand("channel-stats", "Sample a channel and compare against its model");
  stats_cmd->add_option("--channel", stats_channel, "fso, fiber, awgn or a channel JSON")->capture_default_str();
  stats_cmd->add_option("-n", stats_n, "Samples (>= 1000)")->capture_default_str();
  stats_cmd->add_option("--seed", stats_seed, "Seed")->capture_default_str();
  stats_cmd->add_option("--out", stats_out, "Output directory")->capture_default_str();
  stats_cmd->add_option("--bins", stats_bins, "Histogram bins")->capture_default_str();
  stats_cmd->add_option("--set", stats_sets, "Channel override key=value (repeatable)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*tune_cmd) return run_tune(tune, tune_cmd->remaining());
    if (*eval_cmd) return run_eval(eval_point, eval_system, eval_seed, eval_sets, eval_system_sets);
    if (*table_cmd) return run_sweep_table(table_reports, table_out, table_step);
    if (*stats_cmd) return run_channel_stats(stats_channel, stats_n, stats_seed, stats_out, stats_bins, stats_sets);
  } catch (const BudgetExceeded& e) {
    std::cerr << "error: joint search refused: grid product "
              << (e.product() ? with_commas(*e.product()) : std::string("exceeds 2^64")) << " > cap "
              << with_commas(e.cap()) << '\n';
    return budget_error;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return config_error;
  } catch (const GridError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return config_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return runtime_error;
  }
  return ok;
}
