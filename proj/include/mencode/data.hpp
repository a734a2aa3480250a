#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace mencode::data {

enum class VariableKind { categorical, continuous };
enum class BinningStrategy { equal_frequency, equal_width };

/// One column as declared in a schema config: categorical columns list
/// their labels, continuous columns say how to bin.
struct VariableConfig {
  std::string name;
  VariableKind kind = VariableKind::categorical;
  std::vector<std::string> labels;
  int bins = 4;
  BinningStrategy strategy = BinningStrategy::equal_frequency;
};

struct SchemaConfig {
  std::vector<VariableConfig> variables;
  /// Empty means the last variable.
  std::string class_name;
  /// Field values that mark a missing cell; such rows are dropped.
  std::vector<std::string> missing_markers{"?", ""};

  static SchemaConfig from_json(const nlohmann::json& doc);
  static SchemaConfig from_file(const std::string& path);
  nlohmann::json to_json() const;
};

/// A fully categorical variable after discretization.
struct Variable {
  std::string name;
  VariableKind kind = VariableKind::categorical;
  std::vector<std::string> labels;
  /// Only for continuous source columns.
  std::vector<double> cut_points;

  std::size_t cardinality() const noexcept { return labels.size(); }
};

class Schema {
 public:
  Schema() = default;
  Schema(std::vector<Variable> variables, std::size_t class_index);

  std::size_t size() const noexcept { return variables_.size(); }
  const Variable& variable(std::size_t i) const { return variables_.at(i); }
  const std::vector<Variable>& variables() const noexcept { return variables_; }
  std::size_t cardinality(std::size_t i) const { return variables_.at(i).cardinality(); }
  std::vector<std::size_t> cardinalities() const;
  std::size_t class_index() const noexcept { return class_index_; }
  std::optional<std::size_t> index_of(const std::string& name) const;

  /// Maps a label to its value index, throwing UnknownLabel.
  int encode(std::size_t variable, const std::string& label) const;
  const std::string& decode(std::size_t variable, int value) const;

 private:
  std::vector<Variable> variables_;
  std::size_t class_index_ = 0;
};

/// Row-major matrix of value indices.
class Dataset {
 public:
  Dataset() = default;
  Dataset(Schema schema, std::vector<int> cells, std::size_t dropped_rows = 0);

  const Schema& schema() const noexcept { return schema_; }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t width() const noexcept { return schema_.size(); }
  bool empty() const noexcept { return rows_ == 0; }
  std::span<const int> row(std::size_t r) const;
  int at(std::size_t r, std::size_t v) const { return cells_[r * width() + v]; }
  std::size_t dropped_rows() const noexcept { return dropped_rows_; }

  /// New dataset with the given rows, in the given order.
  Dataset select(std::span<const std::size_t> row_indices) const;

 private:
  Schema schema_;
  std::vector<int> cells_;
  std::size_t rows_ = 0;
  std::size_t dropped_rows_ = 0;
};

struct Discretization {
  std::vector<int> indices;
  std::vector<double> cut_points;
};

/// Bins a real column. Value x falls in bin j when cut[j-1] < x <= cut[j].
Discretization discretize(std::span<const double> column, int bins, BinningStrategy strategy);

/// Applies fixed cut points to a value.
int bin_of(std::span<const double> cut_points, double x);

/// Reads RFC-4180 records. The header line, if present, must equal the
/// schema variable names in order.
Dataset load_csv(std::istream& in, const SchemaConfig& config);
Dataset load_csv_file(const std::string& path, const SchemaConfig& config);

/// Splits one CSV record honoring quotes. Returns nullopt at end of input.
std::optional<std::vector<std::string>> read_record(std::istream& in);

struct FoldPlan {
  std::vector<int> fold_of_row;
  int k = 0;
  std::uint64_t seed = 0;

  std::vector<std::size_t> test_rows(int fold) const;
  std::vector<std::size_t> train_rows(int fold) const;
};

FoldPlan make_folds(std::size_t n, int k, std::uint64_t seed);

/// s distinct row indices of {0..n-1}, sorted ascending.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t s, std::uint64_t seed);

Dataset subsample(const Dataset& dataset, std::size_t s, std::uint64_t seed);

}  // namespace mencode::data
