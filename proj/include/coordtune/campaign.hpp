#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "coordtune/grid.hpp"
#include "coordtune/objective.hpp"
#include "coordtune/report.hpp"
#include "coordtune/tuner.hpp"

namespace coordtune {

inline constexpr std::string_view software_version = "0.1.0";
inline constexpr std::string_view manifest_schema = "coordtune.manifest/1";

/// A full experiment: every (system x method) pair is tuned from `init` over
/// `grid` and written below `output_dir`.
struct CampaignConfig {
  std::vector<SystemConfig> systems = {fso_system(), fiber_system()};
  HyperparamGrid grid = default_grid();
  HyperparamPoint init = initial_point();
  std::vector<SearchMethod> methods = {SearchMethod::marginal, SearchMethod::alternating};
  SearchConfig search = [] {
    SearchConfig s;
    s.max_steps = 1;
    return s;
  }();
  /// Sample count for random search.
  int random_trials = 20;
  std::string output_dir = "coordtune-out";

  void validate() const;
};

/// Raised for malformed configuration; the message names the field.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

Json campaign_to_json(const CampaignConfig& config);
/// Systems may be given as preset names ("fso", "fiber", "awgn") or objects.
CampaignConfig campaign_from_json(const Json& doc);

/// Sets a dotted path ("search.max_steps", "systems.0.channel.es_n0_db") in
/// `doc`. The value is parsed as JSON when possible, else taken as a string.
void apply_override(Json& doc, const std::string& path, const std::string& value);

/// COORDTUNE_SEARCH__MAX_STEPS=3 becomes ("search.max_steps", "3"): the prefix
/// is dropped, the rest lower-cased and "__" read as a path separator.
std::vector<std::pair<std::string, std::string>> env_overrides(const std::map<std::string, std::string>& env);
std::map<std::string, std::string> process_environment();

/// File, then environment, then command line; later sources win.
CampaignConfig resolve_campaign(const Json& file_doc, const std::map<std::string, std::string>& env,
                                const std::vector<std::pair<std::string, std::string>>& cli);

/// Reads a JSON file, reporting parse errors with line and column.
Json load_json_file(const std::filesystem::path& path);

/// FNV-1a of the canonical config dump, as 16 hex digits.
std::string config_hash(const CampaignConfig& config);

struct CampaignRun {
  std::string system;
  SearchMethod method = SearchMethod::marginal;
  std::filesystem::path dir;
  TuneReport report;
};

struct CampaignResult {
  std::vector<CampaignRun> runs;
  Json manifest;
};

/// Throws BudgetExceeded before any work when a joint run would exceed the cap.
void check_budget(const CampaignConfig& config);

/// Writes report.jsonl, summary.md, summary.csv and best.json per run, then
/// table7.md, table7.csv and manifest.json at the top of output_dir.
CampaignResult run_campaign(const CampaignConfig& config);

/// The configuration recorded in a manifest.
CampaignConfig campaign_from_manifest(const Json& manifest);

}  // namespace coordtune
