#include "mencode/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <locale>
#include <numeric>
#include <set>
#include <sstream>

#include "mencode/error.hpp"
#include "mencode/rng.hpp"

namespace mencode::data {

// ---------------------------------------------------------------- config

namespace {

VariableKind parse_kind(const std::string& s) {
  if (s == "categorical") return VariableKind::categorical;
  if (s == "continuous") return VariableKind::continuous;
  fail(ErrorCode::InvalidSchema, "unknown variable kind '" + s + "'");
}

BinningStrategy parse_strategy(const std::string& s) {
  if (s == "equal_frequency") return BinningStrategy::equal_frequency;
  if (s == "equal_width") return BinningStrategy::equal_width;
  fail(ErrorCode::InvalidSchema, "unknown binning strategy '" + s + "'");
}

std::string format_real(double x) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(6);
  os << x;
  return os.str();
}

}  // namespace

SchemaConfig SchemaConfig::from_json(const nlohmann::json& doc) {
  SchemaConfig config;
  try {
    for (const auto& v : doc.at("variables")) {
      VariableConfig var;
      var.name = v.at("name").get<std::string>();
      var.kind = parse_kind(v.value("kind", std::string("categorical")));
      if (var.kind == VariableKind::categorical) {
        var.labels = v.at("labels").get<std::vector<std::string>>();
      } else {
        var.bins = v.value("bins", 4);
        var.strategy = parse_strategy(v.value("strategy", std::string("equal_frequency")));
      }
      config.variables.push_back(std::move(var));
    }
    config.class_name = doc.value("class", std::string());
    if (doc.contains("missing")) config.missing_markers = doc.at("missing").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidSchema, std::string("schema config: ") + e.what());
  }
  if (config.variables.empty()) fail(ErrorCode::InvalidSchema, "schema config lists no variables");
  return config;
}

SchemaConfig SchemaConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::InvalidSchema, "cannot open schema file " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidSchema, path + ": " + e.what());
  }
  return from_json(doc);
}

nlohmann::json SchemaConfig::to_json() const {
  nlohmann::ordered_json vars = nlohmann::ordered_json::array();
  for (const auto& v : variables) {
    nlohmann::ordered_json j;
    j["name"] = v.name;
    if (v.kind == VariableKind::categorical) {
      j["kind"] = "categorical";
      j["labels"] = v.labels;
    } else {
      j["kind"] = "continuous";
      j["bins"] = v.bins;
      j["strategy"] = v.strategy == BinningStrategy::equal_frequency ? "equal_frequency" : "equal_width";
    }
    vars.push_back(std::move(j));
  }
  nlohmann::ordered_json doc;
  doc["variables"] = std::move(vars);
  doc["class"] = class_name;
  doc["missing"] = missing_markers;
  return nlohmann::json::parse(doc.dump());
}

// ---------------------------------------------------------------- schema

Schema::Schema(std::vector<Variable> variables, std::size_t class_index)
    : variables_(std::move(variables)), class_index_(class_index) {
  if (variables_.empty()) fail(ErrorCode::InvalidSchema, "schema has no variables");
  if (class_index_ >= variables_.size()) fail(ErrorCode::InvalidSchema, "class index out of range");
  std::set<std::string> names;
  for (const auto& v : variables_) {
    if (!names.insert(v.name).second) fail(ErrorCode::InvalidSchema, "duplicate variable name '" + v.name + "'");
    if (v.cardinality() < 2)
      fail(ErrorCode::InvalidSchema, "variable '" + v.name + "' needs at least two values");
    std::set<std::string> labels(v.labels.begin(), v.labels.end());
    if (labels.size() != v.labels.size())
      fail(ErrorCode::InvalidSchema, "variable '" + v.name + "' has duplicate labels");
  }
}

std::vector<std::size_t> Schema::cardinalities() const {
  std::vector<std::size_t> out;
  out.reserve(variables_.size());
  for (const auto& v : variables_) out.push_back(v.cardinality());
  return out;
}

std::optional<std::size_t> Schema::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < variables_.size(); ++i)
    if (variables_[i].name == name) return i;
  return std::nullopt;
}

int Schema::encode(std::size_t variable, const std::string& label) const {
  const auto& labels = variables_.at(variable).labels;
  const auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end())
    fail(ErrorCode::UnknownLabel, "value '" + label + "' not declared for variable '" + variables_[variable].name + "'");
  return static_cast<int>(it - labels.begin());
}

const std::string& Schema::decode(std::size_t variable, int value) const {
  return variables_.at(variable).labels.at(static_cast<std::size_t>(value));
}

// ---------------------------------------------------------------- dataset

Dataset::Dataset(Schema schema, std::vector<int> cells, std::size_t dropped_rows)
    : schema_(std::move(schema)), cells_(std::move(cells)), dropped_rows_(dropped_rows) {
  const std::size_t w = schema_.size();
  if (w == 0 || cells_.size() % w != 0) fail(ErrorCode::MalformedRecord, "cell count is not a multiple of the row width");
  rows_ = cells_.size() / w;
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    const auto card = schema_.cardinality(i % w);
    if (cells_[i] < 0 || static_cast<std::size_t>(cells_[i]) >= card)
      fail(ErrorCode::OutOfRangeValue, "cell value out of range in row " + std::to_string(i / w));
  }
}

std::span<const int> Dataset::row(std::size_t r) const {
  return std::span<const int>(cells_).subspan(r * width(), width());
}

Dataset Dataset::select(std::span<const std::size_t> row_indices) const {
  std::vector<int> cells;
  cells.reserve(row_indices.size() * width());
  for (auto r : row_indices) {
    const auto src = row(r);
    cells.insert(cells.end(), src.begin(), src.end());
  }
  return Dataset(schema_, std::move(cells), 0);
}

// ---------------------------------------------------------------- discretize

int bin_of(std::span<const double> cut_points, double x) {
  return static_cast<int>(std::lower_bound(cut_points.begin(), cut_points.end(), x) - cut_points.begin());
}

Discretization discretize(std::span<const double> column, int bins, BinningStrategy strategy) {
  if (bins < 2) fail(ErrorCode::PreconditionViolation, "discretize needs at least two bins");
  if (column.empty()) fail(ErrorCode::EmptyInput, "cannot discretize an empty column");
  const auto [lo_it, hi_it] = std::minmax_element(column.begin(), column.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (lo == hi) fail(ErrorCode::ConstantColumn, "all values equal " + format_real(lo));

  Discretization out;
  if (strategy == BinningStrategy::equal_width) {
    const double width = (hi - lo) / bins;
    for (int j = 1; j < bins; ++j) out.cut_points.push_back(lo + j * width);
  } else {
    std::vector<double> sorted(column.begin(), column.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    // Boundaries t where sorted[t-1] < sorted[t]; a cut can only go there.
    std::vector<std::size_t> boundaries;
    for (std::size_t t = 1; t < n; ++t)
      if (sorted[t - 1] < sorted[t]) boundaries.push_back(t);
    const auto b = static_cast<std::size_t>(bins);
    for (std::size_t j = 1; j < b; ++j) {
      const std::size_t target = (2 * j * n + b) / (2 * b);  // round(j n / b)
      auto it = std::lower_bound(boundaries.begin(), boundaries.end(), target);
      std::size_t t;
      if (it == boundaries.end()) {
        t = boundaries.back();
      } else if (it == boundaries.begin() || *it == target) {
        t = *it;
      } else {
        const std::size_t above = *it;
        const std::size_t below = *(it - 1);
        t = (target - below <= above - target) ? below : above;
      }
      out.cut_points.push_back(0.5 * (sorted[t - 1] + sorted[t]));
    }
    out.cut_points.erase(std::unique(out.cut_points.begin(), out.cut_points.end()), out.cut_points.end());
  }
  out.indices.reserve(column.size());
  for (double x : column) out.indices.push_back(bin_of(out.cut_points, x));
  return out;
}

// ---------------------------------------------------------------- csv

std::optional<std::vector<std::string>> read_record(std::istream& in) {
  std::vector<std::string> fields;
  std::string field;
  bool in_quotes = false;
  bool any = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get(c);
      break;
    } else if (c == '\n') {
      break;
    } else {
      field.push_back(c);
    }
  }
  if (!any) return std::nullopt;
  if (in_quotes) fail(ErrorCode::MalformedRecord, "unterminated quoted field");
  fields.push_back(std::move(field));
  return fields;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double parse_real(const std::string& text, std::size_t line) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value))
    fail(ErrorCode::MalformedRecord, "line " + std::to_string(line) + ": '" + text + "' is not a finite number");
  return value;
}

std::vector<std::string> interval_labels(std::span<const double> cuts) {
  std::vector<std::string> labels;
  std::string lower = "-inf";
  for (double c : cuts) {
    const auto upper = format_real(c);
    labels.push_back("(" + lower + "," + upper + "]");
    lower = upper;
  }
  labels.push_back("(" + lower + ",inf)");
  return labels;
}

}  // namespace

Dataset load_csv(std::istream& in, const SchemaConfig& config) {
  const std::size_t width = config.variables.size();
  if (width == 0) fail(ErrorCode::InvalidSchema, "schema config lists no variables");

  std::size_t class_index = width - 1;
  if (!config.class_name.empty()) {
    bool found = false;
    for (std::size_t i = 0; i < width; ++i) {
      if (config.variables[i].name == config.class_name) {
        class_index = i;
        found = true;
      }
    }
    if (!found) fail(ErrorCode::InvalidSchema, "class variable '" + config.class_name + "' not in schema");
  }
  if (config.variables[class_index].kind != VariableKind::categorical)
    fail(ErrorCode::InvalidSchema, "class variable must be categorical");

  // Categorical lookup happens through a provisional schema; continuous
  // columns are staged as reals and binned once all rows are read.
  std::vector<std::vector<double>> reals(width);
  std::vector<int> cells;
  std::size_t dropped = 0;
  std::size_t line = 0;
  bool first = true;
  bool saw_anything = false;

  while (auto record = read_record(in)) {
    ++line;
    saw_anything = true;
    if (record->size() == 1 && trim((*record)[0]).empty() && width > 1) continue;  // blank line
    if (first) {
      first = false;
      bool header = record->size() == width;
      for (std::size_t i = 0; header && i < width; ++i) header = trim((*record)[i]) == config.variables[i].name;
      if (header) continue;
    }
    if (record->size() != width)
      fail(ErrorCode::MalformedRecord, "line " + std::to_string(line) + ": expected " + std::to_string(width) +
                                           " fields, got " + std::to_string(record->size()));
    bool missing = false;
    for (const auto& raw : *record) {
      const auto f = trim(raw);
      if (std::find(config.missing_markers.begin(), config.missing_markers.end(), f) != config.missing_markers.end())
        missing = true;
    }
    if (missing) {
      ++dropped;
      continue;
    }
    for (std::size_t i = 0; i < width; ++i) {
      const auto f = trim((*record)[i]);
      const auto& var = config.variables[i];
      if (var.kind == VariableKind::categorical) {
        const auto it = std::find(var.labels.begin(), var.labels.end(), f);
        if (it == var.labels.end())
          fail(ErrorCode::UnknownLabel, "line " + std::to_string(line) + ": value '" + f +
                                            "' not declared for variable '" + var.name + "'");
        cells.push_back(static_cast<int>(it - var.labels.begin()));
      } else {
        reals[i].push_back(parse_real(f, line));
        cells.push_back(0);
      }
    }
  }
  if (!saw_anything) fail(ErrorCode::EmptyInput, "no header and no records");

  const std::size_t rows = cells.size() / width;
  std::vector<Variable> variables;
  for (std::size_t i = 0; i < width; ++i) {
    const auto& vc = config.variables[i];
    Variable var{vc.name, vc.kind, {}, {}};
    if (vc.kind == VariableKind::categorical) {
      var.labels = vc.labels;
    } else if (rows == 0) {
      for (int b = 0; b < vc.bins; ++b) var.labels.push_back("bin" + std::to_string(b));
    } else {
      Discretization d;
      try {
        d = discretize(reals[i], vc.bins, vc.strategy);
      } catch (const Error& e) {
        fail(e.code(), "variable '" + vc.name + "': " + e.what());
      }
      for (std::size_t r = 0; r < rows; ++r) cells[r * width + i] = d.indices[r];
      var.labels = interval_labels(d.cut_points);
      var.cut_points = std::move(d.cut_points);
    }
    variables.push_back(std::move(var));
  }
  return Dataset(Schema(std::move(variables), class_index), std::move(cells), dropped);
}

Dataset load_csv_file(const std::string& path, const SchemaConfig& config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::EmptyInput, "cannot open data file " + path);
  return load_csv(in, config);
}

// ---------------------------------------------------------------- folds

std::vector<std::size_t> FoldPlan::test_rows(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < fold_of_row.size(); ++r)
    if (fold_of_row[r] == fold) out.push_back(r);
  return out;
}

std::vector<std::size_t> FoldPlan::train_rows(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < fold_of_row.size(); ++r)
    if (fold_of_row[r] != fold) out.push_back(r);
  return out;
}

FoldPlan make_folds(std::size_t n, int k, std::uint64_t seed) {
  if (k < 2) fail(ErrorCode::PreconditionViolation, "need at least two folds");
  if (static_cast<std::size_t>(k) > n)
    fail(ErrorCode::TooFewRows, std::to_string(k) + " folds requested for " + std::to_string(n) + " rows");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng::Stream stream(seed);
  rng::shuffle(std::span<std::size_t>(order), stream);
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.fold_of_row.assign(n, 0);
  for (std::size_t pos = 0; pos < n; ++pos) plan.fold_of_row[order[pos]] = static_cast<int>(pos % static_cast<std::size_t>(k));
  return plan;
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t s, std::uint64_t seed) {
  if (s < 1 || s > n)
    fail(ErrorCode::SampleTooLarge, "cannot draw " + std::to_string(s) + " of " + std::to_string(n) + " rows");
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  if (s == n) return pool;
  rng::Stream stream(seed);
  for (std::size_t i = 0; i < s; ++i) {
    const auto j = i + static_cast<std::size_t>(stream.below(n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(s);
  std::sort(pool.begin(), pool.end());
  return pool;
}

Dataset subsample(const Dataset& dataset, std::size_t s, std::uint64_t seed) {
  const auto picked = sample_indices(dataset.rows(), s, seed);
  return dataset.select(picked);
}

}  // namespace mencode::data
