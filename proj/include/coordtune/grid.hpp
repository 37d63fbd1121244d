#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

namespace coordtune {

using Json = nlohmann::ordered_json;

/// Exact decimal number: mantissa * 10^exponent, normalized so the mantissa
/// carries no trailing zeros. Numeric grid values are stored this way so that
/// point keys (and the seeds derived from them) never depend on float printing.
class Decimal {
 public:
  constexpr Decimal() = default;
  Decimal(std::int64_t mantissa, int exponent);

  static Decimal integer(std::int64_t value) { return Decimal(value, 0); }
  /// Parses plain decimal text ("0.00005", "250", "-1.5"); scientific notation
  /// is accepted too ("5e-05").
  static Decimal parse(std::string_view text);
  /// Shortest round-trip representation of `value`.
  static Decimal from_double(double value);

  std::int64_t mantissa() const noexcept { return mantissa_; }
  int exponent() const noexcept { return exponent_; }

  bool is_integer() const noexcept { return exponent_ >= 0; }
  /// Throws if the value is not integral or does not fit.
  std::int64_t to_integer() const;
  double to_double() const;
  /// Fixed-point rendering without exponent ("0.00005", "16384").
  std::string to_string() const;

  friend bool operator==(const Decimal&, const Decimal&) = default;

 private:
  std::int64_t mantissa_ = 0;
  int exponent_ = 0;
};

/// Categorical axis values are plain tags ("Selu", "Adam").
struct Category {
  std::string tag;
  friend bool operator==(const Category&, const Category&) = default;
};

using AxisValue = std::variant<Decimal, Category>;

std::string render_value(const AxisValue& value);

enum class AxisKind { numeric, categorical };

std::string_view to_string(AxisKind kind) noexcept;

/// Identifiers of the axes in the default search space.
namespace axis {
inline constexpr std::string_view learning_rate = "learning_rate";
inline constexpr std::string_view iterations = "iterations";
inline constexpr std::string_view num_layers = "num_layers";
inline constexpr std::string_view num_neurons = "num_neurons";
inline constexpr std::string_view activation = "activation";
inline constexpr std::string_view optimizer = "optimizer";
inline constexpr std::string_view sample_to_batch_ratio = "sample_to_batch_ratio";
inline constexpr std::string_view batch_size = "batch_size";
inline constexpr std::string_view loss_function = "loss_function";
}  // namespace axis

/// Thrown for any violation of grid/point validity; the message names the
/// offending axis and value.
class GridError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// One hyperparameter axis with its ordered candidate values.
class ParamAxis {
 public:
  ParamAxis(std::string id, AxisKind kind, std::vector<AxisValue> values);

  static ParamAxis numeric(std::string id, std::vector<Decimal> values);
  static ParamAxis categorical(std::string id, std::vector<std::string> tags);

  const std::string& id() const noexcept { return id_; }
  AxisKind kind() const noexcept { return kind_; }
  const std::vector<AxisValue>& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }

  std::optional<std::size_t> index_of(const AxisValue& value) const;
  bool contains(const AxisValue& value) const { return index_of(value).has_value(); }
  /// Checks the value has this axis's kind (membership is not required).
  bool accepts_kind(const AxisValue& value) const;
  /// Parses `text` with this axis's kind.
  AxisValue parse_value(std::string_view text) const;

  friend bool operator==(const ParamAxis&, const ParamAxis&) = default;

 private:
  std::string id_;
  AxisKind kind_;
  std::vector<AxisValue> values_;
};

/// One value per axis, in the owning grid's axis order.
class HyperparamPoint {
 public:
  using Entry = std::pair<std::string, AxisValue>;

  HyperparamPoint() = default;
  explicit HyperparamPoint(std::vector<Entry> entries) : entries_(std::move(entries)) {}

  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

  /// Throws GridError for unknown ids.
  const AxisValue& at(std::string_view id) const;
  const AxisValue* find(std::string_view id) const;

  /// Convenience accessors for numeric/categorical coordinates.
  double number(std::string_view id) const;
  std::int64_t integer(std::string_view id) const;
  const std::string& tag(std::string_view id) const;

  friend bool operator==(const HyperparamPoint&, const HyperparamPoint&) = default;

 private:
  friend class HyperparamGrid;
  std::vector<Entry> entries_;
};

/// Canonical text encoding of a point: "id=value;id=value;..." in grid order.
struct PointKey {
  std::string text;
  friend bool operator==(const PointKey&, const PointKey&) = default;
  friend auto operator<=>(const PointKey&, const PointKey&) = default;
};

/// Ordered, immutable collection of axes. Axis order is the sweep order.
class HyperparamGrid {
 public:
  explicit HyperparamGrid(std::vector<ParamAxis> axes);

  const std::vector<ParamAxis>& axes() const noexcept { return axes_; }
  std::size_t size() const noexcept { return axes_.size(); }
  const ParamAxis& axis(std::string_view id) const;
  std::optional<std::size_t> axis_index(std::string_view id) const;

  /// Number of points in the Cartesian product; nullopt on overflow of 64 bits.
  std::optional<std::uint64_t> product_size() const;

  /// Same axes in the same order, each value of the right kind. Values need
  /// not be grid members: an initial point may sit between grid lines.
  void validate_compatible(const HyperparamPoint& point) const;
  /// Compatible and every value a member of its axis.
  void validate_member(const HyperparamPoint& point) const;
  bool is_member(const HyperparamPoint& point) const;

  /// Builds a point from (id, value) pairs in any order; every axis must be
  /// assigned exactly once.
  HyperparamPoint make_point(std::vector<HyperparamPoint::Entry> entries) const;

  /// Point at `indices` (one value index per axis).
  HyperparamPoint point_at(const std::vector<std::size_t>& indices) const;

  friend bool operator==(const HyperparamGrid&, const HyperparamGrid&) = default;

 private:
  std::vector<ParamAxis> axes_;
};

/// The nine-axis search space used for the optical detector experiments.
HyperparamGrid default_grid();

/// Starting point shared by both coordinate-wise search methods.
HyperparamPoint initial_point();

/// Copy of `point` with axis `id` set to `value`; `value` must be on the axis.
HyperparamPoint point_with(const HyperparamGrid& grid, const HyperparamPoint& point,
                           std::string_view id, const AxisValue& value);

PointKey point_key(const HyperparamPoint& point);
HyperparamPoint parse_point_key(const HyperparamGrid& grid, const PointKey& key);

/// Visits every grid point in lexicographic order (first axis slowest).
/// The visitor returns false to stop early.
template <typename Visitor>
void for_each_point(const HyperparamGrid& grid, Visitor&& visit) {
  std::vector<std::size_t> idx(grid.size(), 0);
  if (grid.size() == 0) return;
  while (true) {
    if (!visit(grid.point_at(idx))) return;
    std::size_t a = grid.size();
    while (a > 0) {
      --a;
      if (++idx[a] < grid.axes()[a].size()) break;
      idx[a] = 0;
      if (a == 0) return;
    }
  }
}

// JSON schema: grid = {"axes": [{"id", "kind", "values": [...]}, ...]};
// point = flat object {id: value}. Numeric values are JSON numbers.
Json to_json(const HyperparamGrid& grid);
HyperparamGrid grid_from_json(const Json& doc);
Json to_json(const HyperparamPoint& point);
/// Keys may appear in any order; every axis must be present.
HyperparamPoint point_from_json(const HyperparamGrid& grid, const Json& doc);
Json value_to_json(const AxisValue& value);

}  // namespace coordtune
