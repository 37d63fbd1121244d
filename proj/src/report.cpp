#include "coordtune/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace coordtune {

namespace {

constexpr double nan_score = std::numeric_limits<double>::quiet_NaN();

Json trial_to_json(const TrialResult& t, std::size_t index) {
  Json j;
  j["record"] = "trial";
  j["index"] = index;
  j["step"] = t.step_index;
  j["axis"] = t.axis_swept ? Json(*t.axis_swept) : Json(nullptr);
  j["key"] = t.key.text;
  j["point"] = to_json(t.point);
  j["score"] = t.score;
  j["seed"] = t.seed;
  j["cached"] = t.cached;
  j["failed"] = t.failed;
  if (!t.error.empty()) j["error"] = t.error;
  j["diagnostics"] = t.diagnostics;
  return j;
}

std::string shortest(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string fixed4(double v) {
  if (std::isnan(v)) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

double json_score(const Json& v) { return v.is_number() ? v.get<double>() : nan_score; }

// Best score per axis value over a set of (point, score) pairs.
SweepTable marginal_minima(const HyperparamGrid& grid, const std::vector<std::pair<HyperparamPoint, double>>& trials) {
  SweepTable table;
  for (const auto& ax : grid.axes()) {
    SweepTable::Row row{ax.id(), {}, std::vector<double>(ax.size(), nan_score)};
    for (const auto& v : ax.values()) row.values.push_back(render_value(v));
    for (const auto& [p, s] : trials) {
      const auto* v = p.find(ax.id());
      if (!v) continue;
      if (const auto i = ax.index_of(*v)) {
        if (std::isnan(row.scores[*i]) || s < row.scores[*i]) row.scores[*i] = s;
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

SweepTable from_sweeps(const HyperparamGrid& grid, const std::vector<std::tuple<int, std::string, std::vector<double>>>& sweeps,
                       int step) {
  SweepTable table;
  for (const auto& ax : grid.axes()) {
    SweepTable::Row row{ax.id(), {}, std::vector<double>(ax.size(), nan_score)};
    for (const auto& v : ax.values()) row.values.push_back(render_value(v));
    // Alternating search may sweep an axis only in some steps; take the
    // requested step's sweep, else the latest earlier one.
    for (const auto& [s, id, scores] : sweeps) {
      if (id == ax.id() && s <= step && scores.size() == ax.size()) row.scores = scores;
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string system_label(const std::string& name) {
  if (name == "fso") return "FSO";
  if (name == "fiber") return "Fiber";
  if (name == "awgn") return "AWGN";
  return name;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Markdown cells of one score row with the minimum bolded (all ties bolded).
std::vector<std::string> bold_row(const std::vector<double>& scores) {
  double best = std::numeric_limits<double>::infinity();
  for (double s : scores) {
    if (!std::isnan(s)) best = std::min(best, s);
  }
  std::vector<std::string> cells;
  for (double s : scores) {
    std::string c = fixed4(s);
    if (!std::isnan(s) && fixed4(s) == fixed4(best)) c = "**" + c + "**";
    cells.push_back(std::move(c));
  }
  return cells;
}

void md_row(std::ostream& out, const std::string& label, const std::vector<std::string>& cells, std::size_t width) {
  out << "| " << label;
  for (std::size_t i = 0; i < width; ++i) out << " | " << (i < cells.size() ? cells[i] : "");
  out << " |\n";
}

}  // namespace

void write_report_jsonl(std::ostream& out, const TuneReport& report, const Json& header_extra) {
  Json header;
  header["record"] = "header";
  header["schema"] = report_schema;
  header["method"] = to_string(report.method);
  for (const auto& [k, v] : header_extra.items()) header[k] = v;
  header["grid"] = to_json(report.grid);
  header["init"] = report.init ? to_json(*report.init) : Json(nullptr);
  header["config"] = to_json(report.config);
  out << header.dump() << '\n';

  for (const auto& s : report.sweeps) {
    Json j;
    j["record"] = "sweep";
    j["step"] = s.step;
    j["axis"] = s.axis;
    j["base"] = to_json(s.base);
    j["base_score"] = s.base_score;
    j["scores"] = s.scores;
    j["chosen"] = to_json(s.chosen);
    j["chosen_score"] = s.chosen_score;
    out << j.dump() << '\n';
  }
  for (std::size_t i = 0; i < report.trials.size(); ++i) out << trial_to_json(report.trials[i], i).dump() << '\n';

  Json summary;
  summary["record"] = "summary";
  const auto& best = report.best();
  summary["best"] = {{"point", to_json(best.point)}, {"key", point_key(best.point).text}, {"score", best.score},
                     {"step", best.step}};
  Json steps = Json::array();
  for (const auto& b : report.best_per_step) steps.push_back({{"step", b.step}, {"score", b.score}});
  summary["best_per_step"] = std::move(steps);
  summary["distinct_evaluations"] = report.distinct_evaluations;
  summary["total_requests"] = report.total_requests;
  summary["objective_calls"] = report.objective_calls;
  summary["converged_at_step"] = report.converged_at_step ? Json(*report.converged_at_step) : Json(nullptr);
  out << summary.dump() << '\n';
}

ParsedReport parse_report_jsonl(std::istream& in) {
  ParsedReport r;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::invalid_argument("report line " + std::to_string(n) + ": " + e.what());
    }
    const auto kind = j.value("record", "");
    if (kind == "header") {
      if (j.value("schema", "") != report_schema) {
        throw std::invalid_argument("report line " + std::to_string(n) + ": unsupported schema");
      }
      r.header = std::move(j);
    } else if (kind == "trial") {
      r.trials.push_back(std::move(j));
    } else if (kind == "sweep") {
      r.sweeps.push_back(std::move(j));
    } else if (kind == "summary") {
      r.summary = std::move(j);
    } else {
      throw std::invalid_argument("report line " + std::to_string(n) + ": unknown record '" + kind + "'");
    }
  }
  if (r.header.is_null()) throw std::invalid_argument("report has no header record");
  if (r.summary.is_null()) throw std::invalid_argument("report has no summary record (truncated?)");
  return r;
}

HyperparamGrid ParsedReport::grid() const { return grid_from_json(header.at("grid")); }
std::string ParsedReport::system() const { return header.value("system", "system"); }
SearchMethod ParsedReport::method() const { return parse_search_method(header.at("method").get<std::string>()); }

SweepTable sweep_table(const TuneReport& report, int step) {
  if (report.method == SearchMethod::marginal || report.method == SearchMethod::alternating) {
    std::vector<std::tuple<int, std::string, std::vector<double>>> sweeps;
    for (const auto& s : report.sweeps) sweeps.emplace_back(s.step, s.axis, s.scores);
    return from_sweeps(report.grid, sweeps, step);
  }
  std::vector<std::pair<HyperparamPoint, double>> trials;
  for (const auto& t : report.trials) trials.emplace_back(t.point, t.score);
  return marginal_minima(report.grid, trials);
}

SweepTable sweep_table(const ParsedReport& report, int step) {
  const HyperparamGrid grid = report.grid();
  const SearchMethod method = report.method();
  if (method == SearchMethod::marginal || method == SearchMethod::alternating) {
    std::vector<std::tuple<int, std::string, std::vector<double>>> sweeps;
    for (const auto& s : report.sweeps) {
      std::vector<double> scores;
      for (const auto& v : s.at("scores")) scores.push_back(json_score(v));
      sweeps.emplace_back(s.at("step").get<int>(), s.at("axis").get<std::string>(), std::move(scores));
    }
    return from_sweeps(grid, sweeps, step);
  }
  std::vector<std::pair<HyperparamPoint, double>> trials;
  for (const auto& t : report.trials) trials.emplace_back(point_from_json(grid, t.at("point")), json_score(t.at("score")));
  return marginal_minima(grid, trials);
}

void write_summary_markdown(std::ostream& out, const SweepTable& table, const std::string& title) {
  std::size_t width = 0;
  for (const auto& r : table.rows) width = std::max(width, r.values.size());
  out << "# " << title << "\n\n";
  md_row(out, "Hyperparameter", {}, width);
  out << "|---";
  for (std::size_t i = 0; i < width; ++i) out << "|---";
  out << "|\n";
  for (const auto& r : table.rows) {
    md_row(out, "**" + r.axis + "**", r.values, width);
    md_row(out, "SER", bold_row(r.scores), width);
  }
}

void write_summary_csv(std::ostream& out, const SweepTable& table) {
  out << "axis,value,score\n";
  for (const auto& r : table.rows) {
    for (std::size_t i = 0; i < r.values.size(); ++i) {
      out << csv_field(r.axis) << ',' << csv_field(r.values[i]) << ','
          << (std::isnan(r.scores[i]) ? std::string() : shortest(r.scores[i])) << '\n';
    }
  }
}

std::string method_label(SearchMethod method) {
  switch (method) {
    case SearchMethod::marginal: return "method 1";
    case SearchMethod::alternating: return "method 2";
    default: return std::string(to_string(method));
  }
}

Table7 render_table7(const std::vector<TableRun>& runs) {
  if (runs.empty()) throw std::invalid_argument("render_table7: no reports given");
  for (const auto& r : runs) {
    if (!(r.grid == runs.front().grid)) {
      throw std::invalid_argument("render_table7: report for " + r.system + "/" + std::string(to_string(r.method)) +
                                  " uses a different grid");
    }
    if (r.table.rows.size() != r.grid.size()) throw std::invalid_argument("render_table7: table does not match grid");
  }
  const HyperparamGrid& grid = runs.front().grid;

  // Systems in first-seen order, methods within a system in numeric order.
  std::vector<std::string> systems;
  for (const auto& r : runs) {
    if (std::find(systems.begin(), systems.end(), r.system) == systems.end()) systems.push_back(r.system);
  }
  std::vector<const TableRun*> ordered;
  for (const auto& s : systems) {
    std::vector<const TableRun*> mine;
    for (const auto& r : runs) {
      if (r.system == s) mine.push_back(&r);
    }
    std::stable_sort(mine.begin(), mine.end(),
                     [](const TableRun* a, const TableRun* b) { return a->method < b->method; });
    ordered.insert(ordered.end(), mine.begin(), mine.end());
  }

  std::size_t width = 0;
  for (const auto& ax : grid.axes()) width = std::max(width, ax.size());

  std::ostringstream md;
  std::ostringstream csv;
  md_row(md, "Hyperparameter", {}, width);
  md << "|---";
  for (std::size_t i = 0; i < width; ++i) md << "|---";
  md << "|\n";
  csv << "axis,value,row,score\n";
  for (std::size_t a = 0; a < grid.size(); ++a) {
    const auto& ax = grid.axes()[a];
    std::vector<std::string> values;
    for (const auto& v : ax.values()) values.push_back(render_value(v));
    md_row(md, "**" + ax.id() + "**", values, width);
    for (const TableRun* r : ordered) {
      const std::string label = method_label(r->method) + "-" + system_label(r->system) + " SER";
      const auto& scores = r->table.rows[a].scores;
      md_row(md, label, bold_row(scores), width);
      for (std::size_t i = 0; i < values.size(); ++i) {
        csv << csv_field(ax.id()) << ',' << csv_field(values[i]) << ',' << csv_field(label) << ','
            << (std::isnan(scores[i]) ? std::string() : shortest(scores[i])) << '\n';
      }
    }
  }
  return {md.str(), csv.str()};
}

}  // namespace coordtune
