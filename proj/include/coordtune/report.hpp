#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "coordtune/grid.hpp"
#include "coordtune/tuner.hpp"

namespace coordtune {

inline constexpr std::string_view report_schema = "coordtune.report/1";

/// Line-delimited trial log. First line is a header record, then one record
/// per sweep and per trial in request order, then a summary record. Wall-clock
/// times are left out so identical runs produce identical bytes.
void write_report_jsonl(std::ostream& out, const TuneReport& report, const Json& header_extra = Json::object());

struct ParsedReport {
  Json header;
  std::vector<Json> trials;
  std::vector<Json> sweeps;
  Json summary;

  HyperparamGrid grid() const;
  std::string system() const;
  SearchMethod method() const;
};

/// Throws std::invalid_argument naming the offending line.
ParsedReport parse_report_jsonl(std::istream& in);

/// Score for every candidate of every axis, as one row per axis.
struct SweepTable {
  struct Row {
    std::string axis;
    std::vector<std::string> values;
    /// NaN when no trial covered the value.
    std::vector<double> scores;
  };
  std::vector<Row> rows;
};

/// For coordinate methods the row of an axis is its sweep in `step`. For joint
/// and random search each cell is the best score among trials with that value.
SweepTable sweep_table(const TuneReport& report, int step = 1);
SweepTable sweep_table(const ParsedReport& report, int step = 1);

/// Markdown with 4-decimal cells and the row minimum in bold.
void write_summary_markdown(std::ostream& out, const SweepTable& table, const std::string& title);
/// Long-format CSV "axis,value,score" at full precision.
void write_summary_csv(std::ostream& out, const SweepTable& table);

/// "method 1" for marginal, "method 2" for alternating, the method name otherwise.
std::string method_label(SearchMethod method);

/// One campaign run as input to the combined table.
struct TableRun {
  std::string system;
  SearchMethod method = SearchMethod::marginal;
  HyperparamGrid grid{std::vector<ParamAxis>{}};
  SweepTable table;
};

struct Table7 {
  std::string markdown;
  std::string csv;
};

/// Per axis: a header row with the candidates, then one row per system and
/// method labelled like "method 1-FSO SER". Throws on an empty list or when
/// the runs do not share one grid.
Table7 render_table7(const std::vector<TableRun>& runs);

}  // namespace coordtune
