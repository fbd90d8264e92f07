#pragma once

#include <filesystem>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sos/types.hpp"

namespace sos {

enum class ColumnKind { Continuous, Categorical };

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::Continuous;
  /// Decoded values are rounded to the nearest integer.
  bool integer = false;

  bool operator==(const Column&) const = default;
};

class Schema {
 public:
  Schema(std::vector<Column> columns, std::string label_column);

  static Schema from_json(const nlohmann::json& j);
  static Schema load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  const std::vector<Column>& columns() const noexcept { return columns_; }
  const std::string& label_column() const noexcept { return label_; }
  std::size_t label_index() const noexcept { return label_index_; }
  std::optional<std::size_t> find(const std::string& name) const;

  bool operator==(const Schema&) const = default;

 private:
  std::vector<Column> columns_;
  std::string label_;
  std::size_t label_index_ = 0;
};

using Cell = std::variant<double, std::string>;
using Row = std::vector<Cell>;

/// Immutable rows plus the class partition over the label column.
/// Class ids are indices into `class_labels()`, in first-seen order.
class Table {
 public:
  Table(Schema schema, std::vector<Row> rows);

  const Schema& schema() const noexcept { return schema_; }
  const std::vector<Row>& rows() const noexcept { return rows_; }
  std::size_t size() const noexcept { return rows_.size(); }
  bool empty() const noexcept { return rows_.empty(); }

  const std::vector<std::string>& class_labels() const noexcept { return class_labels_; }
  const std::vector<std::size_t>& class_rows(std::size_t class_id) const { return class_index_.at(class_id); }
  std::size_t row_class(std::size_t row) const { return row_class_.at(row); }
  const std::vector<std::size_t>& row_classes() const noexcept { return row_class_; }
  std::optional<std::size_t> class_id(const std::string& label) const;

  /// Same schema, rows appended. Class ids of existing labels are preserved.
  Table append(const std::vector<Row>& extra) const;

  void write_csv(const std::filesystem::path& path) const;

 private:
  Schema schema_;
  std::vector<Row> rows_;
  std::vector<std::string> class_labels_;
  std::vector<std::vector<std::size_t>> class_index_;
  std::vector<std::size_t> row_class_;
};

Table load_table(const std::filesystem::path& path, const Schema& schema);
Table parse_table(const std::string& csv_text, const Schema& schema);

/// Reversible map from rows to real vectors: continuous columns min-max to
/// [-1, 1], categorical columns one-hot. The label column is not a feature.
class Encoder {
 public:
  struct ColumnCodec {
    std::size_t schema_index = 0;
    std::string name;
    ColumnKind kind = ColumnKind::Continuous;
    bool integer = false;
    double min = 0.0;
    double max = 1.0;
    std::vector<std::string> vocabulary;
    std::size_t offset = 0;  // first feature index
    std::size_t width() const { return kind == ColumnKind::Continuous ? 1 : vocabulary.size(); }
  };

  Encoder(Schema schema, std::vector<ColumnCodec> codecs, std::vector<std::string> class_labels);

  std::size_t dim() const noexcept { return dim_; }
  const Schema& schema() const noexcept { return schema_; }
  const std::vector<ColumnCodec>& codecs() const noexcept { return codecs_; }
  const ColumnCodec& codec(const std::string& column) const;
  const std::vector<std::string>& class_labels() const noexcept { return class_labels_; }

  nlohmann::json to_json() const;
  static Encoder from_json(const nlohmann::json& j, const Schema& schema);

 private:
  Schema schema_;
  std::vector<ColumnCodec> codecs_;
  std::vector<std::string> class_labels_;
  std::size_t dim_ = 0;
};

inline constexpr double kConstantColumnWidening = 1e-6;

Encoder fit_encoder(const Table& table);

struct Encoded {
  Matrix features;
  std::vector<std::size_t> labels;
};

/// Labels are the table's class ids.
Encoded encode(const Encoder& encoder, const Table& table);
Matrix encode_rows(const Encoder& encoder, const std::vector<Row>& rows);

/// Rows with every non-label cell filled and the label cell set to `label`.
std::vector<Row> decode(const Encoder& encoder, const Matrix& features, const std::string& label = "");

struct ClassPartition {
  std::vector<std::size_t> counts;  // indexed by class id
  std::size_t major = 0;
  std::vector<std::size_t> minors;
  std::size_t max_count() const { return counts.empty() ? 0 : counts[major]; }
};

/// Major class is the argmax count, ties to the lowest class id.
/// Throws SingleClassError when `require_minor` and there is only one class.
ClassPartition partition_classes(const Table& table, bool require_minor = false);
ClassPartition partition_counts(const std::vector<std::size_t>& counts, bool require_minor = false);

std::string format_real(double v);

}  // namespace sos
