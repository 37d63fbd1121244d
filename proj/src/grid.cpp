#include "coordtune/grid.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>

namespace coordtune {

namespace {

bool valid_token_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
         c == '-' || c == '+' || c == '.';
}

void check_token(std::string_view what, std::string_view token) {
  if (token.empty() || !std::all_of(token.begin(), token.end(), valid_token_char)) {
    throw GridError(std::string(what) + " '" + std::string(token) +
                    "' must be non-empty and use only [A-Za-z0-9_+-.]");
  }
}

std::int64_t checked_mul10(std::int64_t v) {
  if (v > std::numeric_limits<std::int64_t>::max() / 10 || v < std::numeric_limits<std::int64_t>::min() / 10) {
    throw GridError("decimal value out of range");
  }
  return v * 10;
}

}  // namespace

// ---------------------------------------------------------------- Decimal

Decimal::Decimal(std::int64_t mantissa, int exponent) : mantissa_(mantissa), exponent_(exponent) {
  if (mantissa_ == 0) {
    exponent_ = 0;
    return;
  }
  while (mantissa_ % 10 == 0) {
    mantissa_ /= 10;
    ++exponent_;
  }
}

Decimal Decimal::parse(std::string_view text) {
  const std::string original(text);
  auto fail = [&] { return GridError("not a decimal number: '" + original + "'"); };
  if (text.empty()) throw fail();
  bool negative = false;
  if (text.front() == '+' || text.front() == '-') {
    negative = text.front() == '-';
    text.remove_prefix(1);
  }
  std::int64_t mantissa = 0;
  int exponent = 0;
  bool any_digit = false;
  bool seen_point = false;
  std::size_t i = 0;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (c >= '0' && c <= '9') {
      mantissa = checked_mul10(mantissa) + (c - '0');
      any_digit = true;
      if (seen_point) --exponent;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (!any_digit) throw fail();
  if (i < text.size()) {
    if (text[i] != 'e' && text[i] != 'E') throw fail();
    int e = 0;
    const char* first = text.data() + i + 1;
    const char* last = text.data() + text.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, e);
    if (ec != std::errc() || ptr != last) throw fail();
    exponent += e;
  }
  return Decimal(negative ? -mantissa : mantissa, exponent);
}

Decimal Decimal::from_double(double value) {
  if (!std::isfinite(value)) throw GridError("non-finite numeric value");
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc()) throw GridError("cannot format numeric value");
  return parse(std::string_view(buf.data(), static_cast<std::size_t>(ptr - buf.data())));
}

std::int64_t Decimal::to_integer() const {
  if (!is_integer()) throw GridError("value " + to_string() + " is not an integer");
  std::int64_t v = mantissa_;
  for (int e = 0; e < exponent_; ++e) v = checked_mul10(v);
  return v;
}

double Decimal::to_double() const {
  // Round-trip through text so the result is the correctly rounded double.
  const std::string s = to_string();
  double v = 0.0;
  std::from_chars(s.data(), s.data() + s.size(), v);
  return v;
}

std::string Decimal::to_string() const {
  const bool negative = mantissa_ < 0;
  const std::uint64_t magnitude =
      negative ? 0 - static_cast<std::uint64_t>(mantissa_) : static_cast<std::uint64_t>(mantissa_);
  std::string digits = std::to_string(magnitude);
  std::string out;
  if (exponent_ >= 0) {
    out = digits + std::string(static_cast<std::size_t>(exponent_), '0');
  } else {
    const auto frac = static_cast<std::size_t>(-exponent_);
    if (digits.size() <= frac) digits.insert(0, frac - digits.size() + 1, '0');
    out = digits.substr(0, digits.size() - frac) + "." + digits.substr(digits.size() - frac);
  }
  return negative ? "-" + out : out;
}

std::string render_value(const AxisValue& value) {
  if (const auto* d = std::get_if<Decimal>(&value)) return d->to_string();
  return std::get<Category>(value).tag;
}

std::string_view to_string(AxisKind kind) noexcept {
  return kind == AxisKind::numeric ? "numeric" : "categorical";
}

// ---------------------------------------------------------------- ParamAxis

ParamAxis::ParamAxis(std::string id, AxisKind kind, std::vector<AxisValue> values)
    : id_(std::move(id)), kind_(kind), values_(std::move(values)) {
  check_token("axis id", id_);
  if (values_.empty()) throw GridError("axis '" + id_ + "' has no values");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const auto& v = values_[i];
    if (!accepts_kind(v)) {
      throw GridError("axis '" + id_ + "' (" + std::string(to_string(kind_)) + ") holds value of the wrong kind: " +
                      render_value(v));
    }
    if (kind_ == AxisKind::numeric && std::get<Decimal>(v).mantissa() <= 0) {
      throw GridError("axis '" + id_ + "' holds non-positive value " + render_value(v));
    }
    if (kind_ == AxisKind::categorical) check_token("category on axis '" + id_ + "'", std::get<Category>(v).tag);
    if (std::find(values_.begin(), values_.begin() + static_cast<std::ptrdiff_t>(i), v) !=
        values_.begin() + static_cast<std::ptrdiff_t>(i)) {
      throw GridError("axis '" + id_ + "' repeats value " + render_value(v));
    }
  }
}

ParamAxis ParamAxis::numeric(std::string id, std::vector<Decimal> values) {
  return ParamAxis(std::move(id), AxisKind::numeric, std::vector<AxisValue>(values.begin(), values.end()));
}

ParamAxis ParamAxis::categorical(std::string id, std::vector<std::string> tags) {
  std::vector<AxisValue> values;
  values.reserve(tags.size());
  for (auto& t : tags) values.emplace_back(Category{std::move(t)});
  return ParamAxis(std::move(id), AxisKind::categorical, std::move(values));
}

std::optional<std::size_t> ParamAxis::index_of(const AxisValue& value) const {
  const auto it = std::find(values_.begin(), values_.end(), value);
  if (it == values_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - values_.begin());
}

bool ParamAxis::accepts_kind(const AxisValue& value) const {
  return (kind_ == AxisKind::numeric) == std::holds_alternative<Decimal>(value);
}

AxisValue ParamAxis::parse_value(std::string_view text) const {
  if (kind_ == AxisKind::numeric) return Decimal::parse(text);
  check_token("category on axis '" + id_ + "'", text);
  return Category{std::string(text)};
}

// ---------------------------------------------------------------- HyperparamPoint

const AxisValue* HyperparamPoint::find(std::string_view id) const {
  for (const auto& [k, v] : entries_) {
    if (k == id) return &v;
  }
  return nullptr;
}

const AxisValue& HyperparamPoint::at(std::string_view id) const {
  if (const auto* v = find(id)) return *v;
  throw GridError("point has no axis '" + std::string(id) + "'");
}

double HyperparamPoint::number(std::string_view id) const {
  const auto* d = std::get_if<Decimal>(&at(id));
  if (d == nullptr) throw GridError("axis '" + std::string(id) + "' is not numeric");
  return d->to_double();
}

std::int64_t HyperparamPoint::integer(std::string_view id) const {
  const auto* d = std::get_if<Decimal>(&at(id));
  if (d == nullptr) throw GridError("axis '" + std::string(id) + "' is not numeric");
  return d->to_integer();
}

const std::string& HyperparamPoint::tag(std::string_view id) const {
  const auto* c = std::get_if<Category>(&at(id));
  if (c == nullptr) throw GridError("axis '" + std::string(id) + "' is not categorical");
  return c->tag;
}

// ---------------------------------------------------------------- HyperparamGrid

HyperparamGrid::HyperparamGrid(std::vector<ParamAxis> axes) : axes_(std::move(axes)) {
  for (std::size_t i = 0; i < axes_.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (axes_[i].id() == axes_[j].id()) throw GridError("duplicate axis id '" + axes_[i].id() + "'");
    }
  }
}

std::optional<std::size_t> HyperparamGrid::axis_index(std::string_view id) const {
  for (std::size_t i = 0; i < axes_.size(); ++i) {
    if (axes_[i].id() == id) return i;
  }
  return std::nullopt;
}

const ParamAxis& HyperparamGrid::axis(std::string_view id) const {
  if (auto i = axis_index(id)) return axes_[*i];
  throw GridError("unknown axis '" + std::string(id) + "'");
}

std::optional<std::uint64_t> HyperparamGrid::product_size() const {
  std::uint64_t product = 1;
  for (const auto& a : axes_) {
    if (product > std::numeric_limits<std::uint64_t>::max() / a.size()) return std::nullopt;
    product *= a.size();
  }
  return product;
}

void HyperparamGrid::validate_compatible(const HyperparamPoint& point) const {
  if (point.size() != axes_.size()) {
    throw GridError("point assigns " + std::to_string(point.size()) + " axes, grid has " +
                    std::to_string(axes_.size()));
  }
  for (std::size_t i = 0; i < axes_.size(); ++i) {
    const auto& [id, value] = point.entries()[i];
    if (id != axes_[i].id()) {
      throw GridError("point axis #" + std::to_string(i) + " is '" + id + "', expected '" + axes_[i].id() + "'");
    }
    if (!axes_[i].accepts_kind(value)) {
      throw GridError("axis '" + id + "' expects a " + std::string(to_string(axes_[i].kind())) + " value, got '" +
                      render_value(value) + "'");
    }
  }
}

void HyperparamGrid::validate_member(const HyperparamPoint& point) const {
  validate_compatible(point);
  for (std::size_t i = 0; i < axes_.size(); ++i) {
    const auto& value = point.entries()[i].second;
    if (!axes_[i].contains(value)) {
      throw GridError("value '" + render_value(value) + "' is not on axis '" + axes_[i].id() + "'");
    }
  }
}

bool HyperparamGrid::is_member(const HyperparamPoint& point) const {
  try {
    validate_member(point);
    return true;
  } catch (const GridError&) {
    return false;
  }
}

HyperparamPoint HyperparamGrid::make_point(std::vector<HyperparamPoint::Entry> entries) const {
  for (const auto& e : entries) {
    if (!axis_index(e.first)) throw GridError("unknown axis '" + e.first + "'");
  }
  std::vector<HyperparamPoint::Entry> ordered;
  ordered.reserve(axes_.size());
  for (const auto& a : axes_) {
    const auto count = std::count_if(entries.begin(), entries.end(), [&](const auto& e) { return e.first == a.id(); });
    if (count == 0) throw GridError("point is missing axis '" + a.id() + "'");
    if (count > 1) throw GridError("point assigns axis '" + a.id() + "' more than once");
    auto it = std::find_if(entries.begin(), entries.end(), [&](const auto& e) { return e.first == a.id(); });
    ordered.push_back(std::move(*it));
  }
  HyperparamPoint p(std::move(ordered));
  validate_compatible(p);
  return p;
}

HyperparamPoint HyperparamGrid::point_at(const std::vector<std::size_t>& indices) const {
  if (indices.size() != axes_.size()) throw GridError("index vector length does not match grid");
  std::vector<HyperparamPoint::Entry> entries;
  entries.reserve(axes_.size());
  for (std::size_t i = 0; i < axes_.size(); ++i) {
    if (indices[i] >= axes_[i].size()) throw GridError("index out of range on axis '" + axes_[i].id() + "'");
    entries.emplace_back(axes_[i].id(), axes_[i].values()[indices[i]]);
  }
  return HyperparamPoint(std::move(entries));
}

// ---------------------------------------------------------------- defaults

HyperparamGrid default_grid() {
  auto ints = [](std::int64_t first, std::int64_t step, int n) {
    std::vector<Decimal> v;
    for (int i = 0; i < n; ++i) v.push_back(Decimal::integer(first + step * i));
    return v;
  };
  std::vector<Decimal> batch;
  for (std::int64_t b = 4; b <= 1024; b *= 2) batch.push_back(Decimal::integer(b * 16));

  return HyperparamGrid({
      ParamAxis::numeric(std::string(axis::learning_rate),
                         {Decimal(5, -5), Decimal(1, -4), Decimal(5, -4), Decimal(1, -3), Decimal(5, -3),
                          Decimal(1, -2), Decimal(5, -2), Decimal(1, -1), Decimal(5, -1)}),
      ParamAxis::numeric(std::string(axis::iterations), ints(100, 100, 9)),
      ParamAxis::numeric(std::string(axis::num_layers), ints(1, 1, 9)),
      ParamAxis::numeric(std::string(axis::num_neurons), ints(10, 10, 9)),
      ParamAxis::categorical(std::string(axis::activation),
                             {"Relu", "Crelu", "Elu", "Selu", "Relu6", "Tanh", "Softmax", "Softsign", "Softplus"}),
      ParamAxis::categorical(std::string(axis::optimizer),
                             {"Adam", "Adadelta", "Adagrad", "Ftrl", "GradientDescent", "ProximalAdagrad",
                              "ProximalGradientDescent", "RMSProp", "Momentum"}),
      ParamAxis::numeric(std::string(axis::sample_to_batch_ratio), ints(1, 1, 9)),
      ParamAxis::numeric(std::string(axis::batch_size), std::move(batch)),
      ParamAxis::categorical(std::string(axis::loss_function), {"SoftmaxCE", "SoftmaxCEv2", "SigmoidCE", "WeightedCE"}),
  });
}

HyperparamPoint initial_point() {
  return HyperparamPoint({
      {std::string(axis::learning_rate), Decimal(1, -3)},
      {std::string(axis::iterations), Decimal::integer(250)},
      {std::string(axis::num_layers), Decimal::integer(2)},
      {std::string(axis::num_neurons), Decimal::integer(32)},
      {std::string(axis::activation), Category{"Selu"}},
      {std::string(axis::optimizer), Category{"Adam"}},
      {std::string(axis::sample_to_batch_ratio), Decimal::integer(8)},
      {std::string(axis::batch_size), Decimal::integer(128)},
      {std::string(axis::loss_function), Category{"SoftmaxCE"}},
  });
}

HyperparamPoint point_with(const HyperparamGrid& grid, const HyperparamPoint& point, std::string_view id,
                           const AxisValue& value) {
  const auto idx = grid.axis_index(id);
  if (!idx) throw GridError("unknown axis '" + std::string(id) + "'");
  if (!grid.axes()[*idx].contains(value)) {
    throw GridError("value '" + render_value(value) + "' is not on axis '" + std::string(id) + "'");
  }
  grid.validate_compatible(point);
  auto entries = point.entries();
  entries[*idx].second = value;
  return HyperparamPoint(std::move(entries));
}

PointKey point_key(const HyperparamPoint& point) {
  std::string key;
  for (const auto& [id, value] : point.entries()) {
    if (!key.empty()) key += ';';
    key += id;
    key += '=';
    key += render_value(value);
  }
  return PointKey{std::move(key)};
}

HyperparamPoint parse_point_key(const HyperparamGrid& grid, const PointKey& key) {
  std::vector<HyperparamPoint::Entry> entries;
  std::string_view rest = key.text;
  while (!rest.empty()) {
    const auto semi = rest.find(';');
    const std::string_view field = rest.substr(0, semi);
    rest = semi == std::string_view::npos ? std::string_view{} : rest.substr(semi + 1);
    const auto eq = field.find('=');
    if (eq == std::string_view::npos) throw GridError("malformed point key field '" + std::string(field) + "'");
    const std::string id(field.substr(0, eq));
    entries.emplace_back(id, grid.axis(id).parse_value(field.substr(eq + 1)));
  }
  HyperparamPoint p(std::move(entries));
  grid.validate_compatible(p);
  return p;
}

// ---------------------------------------------------------------- JSON

Json value_to_json(const AxisValue& value) {
  if (const auto* d = std::get_if<Decimal>(&value)) {
    if (d->is_integer()) return d->to_integer();
    return d->to_double();
  }
  return std::get<Category>(value).tag;
}

namespace {

AxisValue value_from_json(const ParamAxis& axis, const Json& v) {
  if (axis.kind() == AxisKind::numeric) {
    if (v.is_number_integer()) return Decimal::integer(v.get<std::int64_t>());
    if (v.is_number_float()) return Decimal::from_double(v.get<double>());
    if (v.is_string()) return Decimal::parse(v.get<std::string>());
    throw GridError("axis '" + axis.id() + "' expects a number, got " + v.dump());
  }
  if (!v.is_string()) throw GridError("axis '" + axis.id() + "' expects a string tag, got " + v.dump());
  return axis.parse_value(v.get<std::string>());
}

}  // namespace

Json to_json(const HyperparamGrid& grid) {
  Json axes = Json::array();
  for (const auto& a : grid.axes()) {
    Json values = Json::array();
    for (const auto& v : a.values()) values.push_back(value_to_json(v));
    axes.push_back(Json{{"id", a.id()}, {"kind", std::string(to_string(a.kind()))}, {"values", std::move(values)}});
  }
  return Json{{"axes", std::move(axes)}};
}

HyperparamGrid grid_from_json(const Json& doc) {
  if (!doc.is_object() || !doc.contains("axes") || !doc["axes"].is_array()) {
    throw GridError("grid document must be an object with an 'axes' array");
  }
  std::vector<ParamAxis> axes;
  for (const auto& a : doc["axes"]) {
    if (!a.contains("id") || !a.contains("kind") || !a.contains("values")) {
      throw GridError("grid axis needs 'id', 'kind' and 'values': " + a.dump());
    }
    const auto id = a["id"].get<std::string>();
    const auto kind_text = a["kind"].get<std::string>();
    AxisKind kind;
    if (kind_text == "numeric") {
      kind = AxisKind::numeric;
    } else if (kind_text == "categorical") {
      kind = AxisKind::categorical;
    } else {
      throw GridError("axis '" + id + "' has unknown kind '" + kind_text + "'");
    }
    // Parse values through a permissive single-value axis of the same kind.
    const ParamAxis proto(id, kind,
                          {kind == AxisKind::numeric ? AxisValue{Decimal::integer(1)} : AxisValue{Category{"x"}}});
    std::vector<AxisValue> values;
    for (const auto& v : a["values"]) values.push_back(value_from_json(proto, v));
    axes.emplace_back(id, kind, std::move(values));
  }
  return HyperparamGrid(std::move(axes));
}

Json to_json(const HyperparamPoint& point) {
  Json doc = Json::object();
  for (const auto& [id, value] : point.entries()) doc[id] = value_to_json(value);
  return doc;
}

HyperparamPoint point_from_json(const HyperparamGrid& grid, const Json& doc) {
  if (!doc.is_object()) throw GridError("point document must be a JSON object");
  std::vector<HyperparamPoint::Entry> entries;
  for (const auto& [id, v] : doc.items()) {
    if (!grid.axis_index(id)) throw GridError("unknown axis '" + id + "'");
    entries.emplace_back(id, value_from_json(grid.axis(id), v));
  }
  return grid.make_point(std::move(entries));
}

}  // namespace coordtune
