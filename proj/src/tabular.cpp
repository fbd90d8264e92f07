#include "sos/tabular.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <unordered_map>

#include "sos/error.hpp"

namespace sos {

using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Splits one CSV record; supports double-quoted fields with "" escapes.
std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back(trim(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  out.emplace_back(trim(field));
  return out;
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q.push_back('"');
    q.push_back(c);
  }
  q.push_back('"');
  return q;
}

std::optional<double> parse_real(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

std::string format_real(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

// ---------------------------------------------------------------------------
// Schema

Schema::Schema(std::vector<Column> columns, std::string label_column)
    : columns_(std::move(columns)), label_(std::move(label_column)) {
  std::set<std::string> seen;
  for (const auto& c : columns_) {
    if (c.name.empty()) throw SchemaError("column with empty name");
    if (!seen.insert(c.name).second) throw SchemaError("duplicate column '" + c.name + "'");
  }
  const auto idx = find(label_);
  if (!idx) throw SchemaError("label column '" + label_ + "' is not a declared column");
  if (columns_[*idx].kind != ColumnKind::Categorical)
    throw SchemaError("label column '" + label_ + "' must be categorical");
  if (columns_.size() < 2) throw SchemaError("schema needs at least one non-label column");
  label_index_ = *idx;
}

std::optional<std::size_t> Schema::find(const std::string& name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i)
    if (columns_[i].name == name) return i;
  return std::nullopt;
}

Schema Schema::from_json(const json& j) {
  try {
    std::vector<Column> cols;
    for (const auto& c : j.at("columns")) {
      Column col;
      col.name = c.at("name").get<std::string>();
      const auto kind = c.at("kind").get<std::string>();
      if (kind == "continuous") {
        col.kind = ColumnKind::Continuous;
      } else if (kind == "categorical") {
        col.kind = ColumnKind::Categorical;
      } else {
        throw SchemaError("column '" + col.name + "': unknown kind '" + kind + "'");
      }
      col.integer = c.value("integer", false);
      cols.push_back(std::move(col));
    }
    return Schema(std::move(cols), j.at("label").get<std::string>());
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed schema: ") + e.what());
  }
}

Schema Schema::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open schema file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw SchemaError("schema " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

json Schema::to_json() const {
  json cols = json::array();
  for (const auto& c : columns_) {
    json jc{{"name", c.name}, {"kind", c.kind == ColumnKind::Continuous ? "continuous" : "categorical"}};
    if (c.integer) jc["integer"] = true;
    cols.push_back(std::move(jc));
  }
  return json{{"columns", cols}, {"label", label_}};
}

// ---------------------------------------------------------------------------
// Table

Table::Table(Schema schema, std::vector<Row> rows) : schema_(std::move(schema)), rows_(std::move(rows)) {
  const auto& cols = schema_.columns();
  std::unordered_map<std::string, std::size_t> ids;
  row_class_.reserve(rows_.size());
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    const Row& row = rows_[r];
    if (row.size() != cols.size())
      throw DataError("row " + std::to_string(r) + " has " + std::to_string(row.size()) + " cells, expected " +
                      std::to_string(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (cols[c].kind == ColumnKind::Continuous) {
        const double* v = std::get_if<double>(&row[c]);
        if (v == nullptr || !std::isfinite(*v))
          throw DataError("row " + std::to_string(r) + ": column '" + cols[c].name + "' needs a finite real");
      } else if (!std::holds_alternative<std::string>(row[c])) {
        throw DataError("row " + std::to_string(r) + ": column '" + cols[c].name + "' needs a category");
      }
    }
    const auto& label = std::get<std::string>(row[schema_.label_index()]);
    auto [it, inserted] = ids.emplace(label, class_labels_.size());
    if (inserted) {
      class_labels_.push_back(label);
      class_index_.emplace_back();
    }
    class_index_[it->second].push_back(r);
    row_class_.push_back(it->second);
  }
}

std::optional<std::size_t> Table::class_id(const std::string& label) const {
  const auto it = std::find(class_labels_.begin(), class_labels_.end(), label);
  if (it == class_labels_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - class_labels_.begin());
}

Table Table::append(const std::vector<Row>& extra) const {
  std::vector<Row> all = rows_;
  all.insert(all.end(), extra.begin(), extra.end());
  return Table(schema_, std::move(all));
}

void Table::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  const auto& cols = schema_.columns();
  for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << quote_if_needed(cols[c].name);
  out << '\n';
  for (const auto& row : rows_) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ',';
      if (const double* v = std::get_if<double>(&row[c])) {
        out << format_real(*v);
      } else {
        out << quote_if_needed(std::get<std::string>(row[c]));
      }
    }
    out << '\n';
  }
}

Table parse_table(const std::string& csv_text, const Schema& schema) {
  std::istringstream in(csv_text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_csv_line(line);
      break;
    }
  }
  if (header.empty()) throw EmptyTableError("CSV has no header row");

  const auto& cols = schema.columns();
  std::vector<std::size_t> source(cols.size());
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const auto it = std::find(header.begin(), header.end(), cols[c].name);
    if (it == header.end()) throw MissingColumnError(cols[c].name);
    source[c] = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<Row> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                      " fields, found " + std::to_string(fields.size()));
    Row row(cols.size());
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const std::string& raw = fields[source[c]];
      if (cols[c].kind == ColumnKind::Continuous) {
        const auto v = parse_real(raw);
        if (!v) throw ContinuousParseError(cols[c].name, raw, line_no);
        row[c] = *v;
      } else {
        row[c] = raw;
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw EmptyTableError("CSV has a header but no data rows");
  return Table(schema, std::move(rows));
}

Table load_table(const std::filesystem::path& path, const Schema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_table(buf.str(), schema);
}

// ---------------------------------------------------------------------------
// Encoder

Encoder::Encoder(Schema schema, std::vector<ColumnCodec> codecs, std::vector<std::string> class_labels)
    : schema_(std::move(schema)), codecs_(std::move(codecs)), class_labels_(std::move(class_labels)) {
  dim_ = 0;
  for (auto& c : codecs_) {
    if (c.kind == ColumnKind::Continuous && !(c.min < c.max))
      throw DataError("encoder column '" + c.name + "' needs min < max");
    if (c.kind == ColumnKind::Categorical && c.vocabulary.empty())
      throw DataError("encoder column '" + c.name + "' has an empty vocabulary");
    c.offset = dim_;
    dim_ += c.width();
  }
}

const Encoder::ColumnCodec& Encoder::codec(const std::string& column) const {
  for (const auto& c : codecs_)
    if (c.name == column) return c;
  throw MissingColumnError(column);
}

Encoder fit_encoder(const Table& table) {
  if (table.empty()) throw EmptyTableError("cannot fit an encoder on an empty table");
  const auto& schema = table.schema();
  std::vector<Encoder::ColumnCodec> codecs;
  for (std::size_t c = 0; c < schema.columns().size(); ++c) {
    if (c == schema.label_index()) continue;
    const Column& col = schema.columns()[c];
    Encoder::ColumnCodec codec;
    codec.schema_index = c;
    codec.name = col.name;
    codec.kind = col.kind;
    codec.integer = col.integer;
    if (col.kind == ColumnKind::Continuous) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (const auto& row : table.rows()) {
        const double v = std::get<double>(row[c]);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (!(lo < hi)) hi = lo + kConstantColumnWidening;
      codec.min = lo;
      codec.max = hi;
    } else {
      for (const auto& row : table.rows()) {
        const auto& v = std::get<std::string>(row[c]);
        if (std::find(codec.vocabulary.begin(), codec.vocabulary.end(), v) == codec.vocabulary.end())
          codec.vocabulary.push_back(v);
      }
    }
    codecs.push_back(std::move(codec));
  }
  return Encoder(schema, std::move(codecs), table.class_labels());
}

json Encoder::to_json() const {
  json mins = json::object(), maxs = json::object(), vocabs = json::object(), integers = json::array();
  for (const auto& c : codecs_) {
    if (c.kind == ColumnKind::Continuous) {
      mins[c.name] = c.min;
      maxs[c.name] = c.max;
    } else {
      vocabs[c.name] = c.vocabulary;
    }
  }
  return json{{"mins", mins},
              {"maxs", maxs},
              {"vocabularies", vocabs},
              {"dim", dim_},
              {"label", {{"name", schema_.label_column()}, {"classes", class_labels_}}}};
}

Encoder Encoder::from_json(const json& j, const Schema& schema) {
  try {
    std::vector<ColumnCodec> codecs;
    for (std::size_t c = 0; c < schema.columns().size(); ++c) {
      if (c == schema.label_index()) continue;
      const Column& col = schema.columns()[c];
      ColumnCodec codec;
      codec.schema_index = c;
      codec.name = col.name;
      codec.kind = col.kind;
      codec.integer = col.integer;
      if (col.kind == ColumnKind::Continuous) {
        codec.min = j.at("mins").at(col.name).get<double>();
        codec.max = j.at("maxs").at(col.name).get<double>();
      } else {
        codec.vocabulary = j.at("vocabularies").at(col.name).get<std::vector<std::string>>();
      }
      codecs.push_back(std::move(codec));
    }
    std::vector<std::string> classes;
    if (j.contains("label")) classes = j.at("label").at("classes").get<std::vector<std::string>>();
    Encoder enc(schema, std::move(codecs), std::move(classes));
    if (j.at("dim").get<std::size_t>() != enc.dim()) throw CorruptFileError("encoder dim does not match schema");
    return enc;
  } catch (const json::exception& e) {
    throw CorruptFileError(std::string("malformed encoder: ") + e.what());
  }
}

Matrix encode_rows(const Encoder& encoder, const std::vector<Row>& rows) {
  Matrix x = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(encoder.dim()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Row& row = rows[r];
    for (const auto& c : encoder.codecs()) {
      if (c.kind == ColumnKind::Continuous) {
        const double v = std::get<double>(row.at(c.schema_index));
        x(r, c.offset) = 2.0 * (v - c.min) / (c.max - c.min) - 1.0;
      } else {
        const auto& v = std::get<std::string>(row.at(c.schema_index));
        const auto it = std::find(c.vocabulary.begin(), c.vocabulary.end(), v);
        if (it == c.vocabulary.end()) throw UnseenCategoryError(c.name, v);
        x(r, c.offset + static_cast<std::size_t>(it - c.vocabulary.begin())) = 1.0;
      }
    }
  }
  return x;
}

Encoded encode(const Encoder& encoder, const Table& table) {
  if (!(table.schema() == encoder.schema())) throw DataError("table schema differs from the encoder schema");
  return Encoded{encode_rows(encoder, table.rows()), table.row_classes()};
}

std::vector<Row> decode(const Encoder& encoder, const Matrix& features, const std::string& label) {
  if (static_cast<std::size_t>(features.cols()) != encoder.dim())
    throw DimensionMismatchError("decode: feature width " + std::to_string(features.cols()) + " != dim " +
                                 std::to_string(encoder.dim()));
  const auto& schema = encoder.schema();
  std::vector<Row> rows;
  rows.reserve(static_cast<std::size_t>(features.rows()));
  for (Eigen::Index r = 0; r < features.rows(); ++r) {
    Row row(schema.columns().size());
    row[schema.label_index()] = label;
    for (const auto& c : encoder.codecs()) {
      if (c.kind == ColumnKind::Continuous) {
        double v = c.min + (features(r, c.offset) + 1.0) * 0.5 * (c.max - c.min);
        v = std::clamp(v, c.min, c.max);
        if (c.integer) {
          const double lo = std::ceil(c.min), hi = std::floor(c.max);
          v = std::round(v);
          if (lo <= hi) v = std::clamp(v, lo, hi);
        }
        row[c.schema_index] = v;
      } else {
        std::size_t best = 0;
        for (std::size_t k = 1; k < c.vocabulary.size(); ++k)
          if (features(r, c.offset + k) > features(r, c.offset + best)) best = k;
        row[c.schema_index] = c.vocabulary[best];
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Partition

ClassPartition partition_counts(const std::vector<std::size_t>& counts, bool require_minor) {
  if (counts.empty()) throw EmptyTableError("no classes to partition");
  ClassPartition p;
  p.counts = counts;
  for (std::size_t k = 1; k < counts.size(); ++k)
    if (counts[k] > counts[p.major]) p.major = k;
  for (std::size_t k = 0; k < counts.size(); ++k)
    if (k != p.major) p.minors.push_back(k);
  if (require_minor && counts.size() < 2)
    throw SingleClassError("table has a single class; oversampling needs at least two");
  return p;
}

ClassPartition partition_classes(const Table& table, bool require_minor) {
  if (table.empty()) throw EmptyTableError("cannot partition an empty table");
  std::vector<std::size_t> counts;
  for (std::size_t k = 0; k < table.class_labels().size(); ++k) counts.push_back(table.class_rows(k).size());
  return partition_counts(counts, require_minor);
}

}  // namespace sos
