#include "coordtune/campaign.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

extern char** environ;

namespace coordtune {

namespace {

SystemConfig system_entry(const Json& j) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "fso") return fso_system();
    if (name == "fiber") return fiber_system();
    if (name == "awgn") return awgn_system(10.0);
    throw ConfigError("systems: unknown preset '" + name + "' (expected fso, fiber or awgn)");
  }
  return system_from_json(j);
}

// Wraps a parsing step so its message names the config field.
template <typename F>
auto field(const char* name, F&& parse) {
  try {
    return parse();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config field '") + name + "': " + e.what());
  }
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << content;
  if (!f) throw std::runtime_error("error while writing " + path.string());
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

void CampaignConfig::validate() const {
  if (systems.empty()) throw ConfigError("config field 'systems': at least one system is required");
  if (methods.empty()) throw ConfigError("config field 'methods': at least one method is required");
  std::set<std::string> names;
  for (const auto& s : systems) {
    if (!names.insert(s.name).second) throw ConfigError("config field 'systems': duplicate name '" + s.name + "'");
    field("systems", [&] { s.validate(); return 0; });
  }
  field("search", [&] { search.validate(); return 0; });
  field("init", [&] { grid.validate_compatible(init); return 0; });
  if (random_trials < 1) throw ConfigError("config field 'random_trials': must be >= 1");
  if (output_dir.empty()) throw ConfigError("config field 'output_dir': must not be empty");
}

Json campaign_to_json(const CampaignConfig& c) {
  Json systems = Json::array();
  for (const auto& s : c.systems) systems.push_back(system_to_json(s));
  Json methods = Json::array();
  for (auto m : c.methods) methods.push_back(std::string(to_string(m)));
  return {{"systems", std::move(systems)}, {"grid", to_json(c.grid)},          {"init", to_json(c.init)},
          {"methods", std::move(methods)}, {"search", to_json(c.search)},      {"random_trials", c.random_trials},
          {"output_dir", c.output_dir}};
}

CampaignConfig campaign_from_json(const Json& doc) {
  if (!doc.is_object()) throw ConfigError("campaign config must be a JSON object");
  static const std::set<std::string> known = {"systems", "grid",          "init",      "methods",
                                              "search",  "random_trials", "output_dir"};
  for (const auto& [key, value] : doc.items()) {
    if (!known.count(key)) throw ConfigError("config: unknown field '" + key + "'");
  }
  CampaignConfig c;
  if (doc.contains("systems")) {
    c.systems = field("systems", [&] {
      const auto& arr = doc.at("systems");
      std::vector<SystemConfig> out;
      if (arr.is_string()) {
        out.push_back(system_entry(arr));
      } else {
        if (!arr.is_array()) throw std::invalid_argument("must be an array");
        for (const auto& s : arr) out.push_back(system_entry(s));
      }
      return out;
    });
  }
  if (doc.contains("grid")) c.grid = field("grid", [&] { return grid_from_json(doc.at("grid")); });
  if (doc.contains("init")) c.init = field("init", [&] { return point_from_json(c.grid, doc.at("init")); });
  if (doc.contains("methods")) {
    c.methods = field("methods", [&] {
      const auto& arr = doc.at("methods");
      std::vector<SearchMethod> out;
      if (arr.is_string()) {
        out.push_back(parse_search_method(arr.get<std::string>()));
      } else {
        for (const auto& m : arr) out.push_back(parse_search_method(m.get<std::string>()));
      }
      return out;
    });
  }
  if (doc.contains("search")) c.search = field("search", [&] { return search_config_from_json(doc.at("search"), c.search); });
  if (doc.contains("random_trials")) c.random_trials = field("random_trials", [&] { return doc.at("random_trials").get<int>(); });
  if (doc.contains("output_dir")) c.output_dir = field("output_dir", [&] { return doc.at("output_dir").get<std::string>(); });
  c.validate();
  return c;
}

void apply_override(Json& doc, const std::string& path, const std::string& value) {
  if (path.empty()) throw ConfigError("override with an empty key");
  Json parsed;
  try {
    parsed = Json::parse(value);
  } catch (const nlohmann::json::parse_error&) {
    parsed = value;
  }
  Json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string part = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override '" + path + "': empty path component");
    Json* next = nullptr;
    if (node->is_array()) {
      if (!std::all_of(part.begin(), part.end(), [](unsigned char ch) { return std::isdigit(ch); })) {
        throw ConfigError("override '" + path + "': '" + part + "' must be an array index");
      }
      const auto i = std::stoul(part);
      if (i >= node->size()) throw ConfigError("override '" + path + "': index " + part + " out of range");
      next = &(*node)[i];
    } else {
      if (node->is_null()) *node = Json::object();
      if (!node->is_object()) throw ConfigError("override '" + path + "': '" + part + "' is below a scalar");
      next = &(*node)[part];
    }
    if (dot == std::string::npos) {
      *next = std::move(parsed);
      return;
    }
    node = next;
    start = dot + 1;
  }
}

std::vector<std::pair<std::string, std::string>> env_overrides(const std::map<std::string, std::string>& env) {
  constexpr std::string_view prefix = "COORDTUNE_";
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [name, value] : env) {
    if (name.size() <= prefix.size() || name.compare(0, prefix.size(), prefix) != 0) continue;
    std::string key;
    for (std::size_t i = prefix.size(); i < name.size(); ++i) {
      if (name[i] == '_' && i + 1 < name.size() && name[i + 1] == '_') {
        key += '.';
        ++i;
      } else {
        key += static_cast<char>(std::tolower(static_cast<unsigned char>(name[i])));
      }
    }
    out.emplace_back(std::move(key), value);
  }
  return out;
}

std::map<std::string, std::string> process_environment() {
  std::map<std::string, std::string> env;
  for (char** e = environ; e && *e; ++e) {
    const std::string entry(*e);
    const auto eq = entry.find('=');
    if (eq != std::string::npos) env.emplace(entry.substr(0, eq), entry.substr(eq + 1));
  }
  return env;
}

CampaignConfig resolve_campaign(const Json& file_doc, const std::map<std::string, std::string>& env,
                                const std::vector<std::pair<std::string, std::string>>& cli) {
  // Normalize first so overrides can address preset systems by index.
  Json doc = campaign_to_json(campaign_from_json(file_doc.is_null() ? Json::object() : file_doc));
  for (const auto& [k, v] : env_overrides(env)) apply_override(doc, k, v);
  for (const auto& [k, v] : cli) apply_override(doc, k, v);
  return campaign_from_json(doc);
}

Json load_json_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << f.rdbuf();
  const std::string text = buf.str();
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // Translate the byte offset into line:column.
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(path.string() + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
  }
}

std::string config_hash(const CampaignConfig& config) { return hex64(fnv1a64(campaign_to_json(config).dump())); }

void check_budget(const CampaignConfig& config) {
  if (std::find(config.methods.begin(), config.methods.end(), SearchMethod::joint) == config.methods.end()) return;
  const auto product = config.grid.product_size();
  if (!product || *product > config.search.joint_cap) throw BudgetExceeded(product, config.search.joint_cap);
}

CampaignResult run_campaign(const CampaignConfig& config) {
  config.validate();
  check_budget(config);
  const std::filesystem::path root(config.output_dir);
  std::filesystem::create_directories(root);

  CampaignResult result;
  Json runs = Json::array();
  std::vector<TableRun> table_runs;
  for (const auto& sys : config.systems) {
    const Objective objective = make_objective(sys);
    for (const auto method : config.methods) {
      TuneReport report;
      switch (method) {
        case SearchMethod::marginal: report = marginal_search(config.grid, config.init, objective, config.search); break;
        case SearchMethod::alternating:
          report = alternating_search(config.grid, config.init, objective, config.search);
          break;
        case SearchMethod::joint: report = joint_search(config.grid, objective, config.search); break;
        case SearchMethod::random:
          report = random_search(config.grid, objective, config.search, config.random_trials);
          break;
      }
      const auto dir = root / sys.name / std::string(to_string(method));
      std::filesystem::create_directories(dir);

      const Json extra = {{"system", sys.name}, {"system_config", system_to_json(sys)},
                          {"version", software_version}};
      std::ostringstream jsonl;
      write_report_jsonl(jsonl, report, extra);
      write_file(dir / "report.jsonl", jsonl.str());

      const SweepTable table = sweep_table(report);
      std::ostringstream md, csv;
      write_summary_markdown(md, table, sys.name + " / " + method_label(method) + " (" + std::string(to_string(method)) + ")");
      write_summary_csv(csv, table);
      write_file(dir / "summary.md", md.str());
      write_file(dir / "summary.csv", csv.str());

      const auto& best = report.best();
      const Json best_doc = {{"system", sys.name},         {"method", to_string(method)},
                             {"point", to_json(best.point)}, {"key", point_key(best.point).text},
                             {"score", best.score},         {"step", best.step}};
      write_file(dir / "best.json", best_doc.dump(2) + "\n");

      runs.push_back({{"system", sys.name},
                      {"method", to_string(method)},
                      {"dir", std::filesystem::relative(dir, root).generic_string()},
                      {"base_seed", config.search.base_seed},
                      {"report_fnv1a", hex64(fnv1a64(jsonl.str()))},
                      {"best_score", best.score},
                      {"distinct_evaluations", report.distinct_evaluations},
                      {"total_requests", report.total_requests}});
      table_runs.push_back({sys.name, method, config.grid, table});
      result.runs.push_back({sys.name, method, dir, std::move(report)});
    }
  }

  const Table7 t7 = render_table7(table_runs);
  write_file(root / "table7.md", t7.markdown);
  write_file(root / "table7.csv", t7.csv);

  result.manifest = {{"schema", manifest_schema},
                     {"version", software_version},
                     {"config_hash", config_hash(config)},
                     {"config", campaign_to_json(config)},
                     {"seeds", {{"search_base_seed", config.search.base_seed}}},
                     {"runs", std::move(runs)}};
  write_file(root / "manifest.json", result.manifest.dump(2) + "\n");
  return result;
}

CampaignConfig campaign_from_manifest(const Json& manifest) {
  if (manifest.value("schema", "") != manifest_schema) throw ConfigError("not a coordtune manifest");
  CampaignConfig c = campaign_from_json(manifest.at("config"));
  if (config_hash(c) != manifest.value("config_hash", "")) {
    throw ConfigError("manifest config_hash does not match its config");
  }
  return c;
}

}  // namespace coordtune
