#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "sos/error.hpp"
#include "sos/rng.hpp"
#include "sos/tabular.hpp"

using namespace sos;

namespace {

Schema pets_schema() {
  return Schema({{"age", ColumnKind::Continuous}, {"pet", ColumnKind::Categorical}, {"label", ColumnKind::Categorical}},
                "label");
}

Schema mixed_schema() {
  return Schema({{"a", ColumnKind::Continuous},
                 {"b", ColumnKind::Continuous},
                 {"c", ColumnKind::Categorical},
                 {"label", ColumnKind::Categorical}},
                "label");
}

}  // namespace

TEST_CASE("load_table builds the class index") {
  const Table t = parse_table("age,pet,label\n1,cat,A\n2,dog,A\n3,cat,A\n4,dog,B\n", pets_schema());
  REQUIRE(t.size() == 4);
  REQUIRE(t.class_labels() == std::vector<std::string>{"A", "B"});
  CHECK(t.class_rows(0).size() == 3);
  CHECK(t.class_rows(1).size() == 1);
  CHECK(t.row_class(3) == 1);
}

TEST_CASE("load_table accepts a reordered header and quoted cells") {
  const Table t = parse_table("label,pet,age\nA,\"c,at\",1.5\nB,dog,2\n", pets_schema());
  CHECK(std::get<double>(t.rows()[0][0]) == 1.5);
  CHECK(std::get<std::string>(t.rows()[0][1]) == "c,at");
  CHECK(std::get<std::string>(t.rows()[1][2]) == "B");
}

TEST_CASE("load_table errors are distinct") {
  SUBCASE("non-numeric continuous cell names the column") {
    try {
      parse_table("age,pet,label\nabc,cat,A\n", pets_schema());
      FAIL("expected a parse error");
    } catch (const ContinuousParseError& e) {
      CHECK(e.column() == "age");
      CHECK(e.value() == "abc");
      CHECK(exit_code(e.category()) == 3);
    }
  }
  SUBCASE("empty body") { CHECK_THROWS_AS(parse_table("age,pet,label\n", pets_schema()), EmptyTableError); }
  SUBCASE("empty file") { CHECK_THROWS_AS(parse_table("", pets_schema()), EmptyTableError); }
  SUBCASE("missing column") {
    try {
      parse_table("age,label\n1,A\n", pets_schema());
      FAIL("expected a missing-column error");
    } catch (const MissingColumnError& e) {
      CHECK(e.column() == "pet");
    }
  }
  SUBCASE("non-finite value") { CHECK_THROWS_AS(parse_table("age,pet,label\ninf,cat,A\n", pets_schema()), ContinuousParseError); }
  SUBCASE("missing file") { CHECK_THROWS_AS(load_table("/nonexistent/x.csv", pets_schema()), DataError); }
}

TEST_CASE("schema invariants") {
  CHECK_THROWS_AS(Schema({{"x", ColumnKind::Continuous}, {"x", ColumnKind::Categorical}}, "x"), SchemaError);
  CHECK_THROWS_AS(Schema({{"x", ColumnKind::Continuous}, {"y", ColumnKind::Continuous}}, "y"), SchemaError);
  CHECK_THROWS_AS(Schema({{"y", ColumnKind::Categorical}}, "y"), SchemaError);
  CHECK_THROWS_AS(Schema({{"x", ColumnKind::Continuous}, {"y", ColumnKind::Categorical}}, "z"), SchemaError);
  const Schema s = pets_schema();
  CHECK(Schema::from_json(s.to_json()) == s);
}

TEST_CASE("fit_encoder extrema, vocabulary and width") {
  const Table t = parse_table("age,pet,label\n0,cat,A\n10,dog,A\n4,cat,B\n", pets_schema());
  const Encoder enc = fit_encoder(t);
  CHECK(enc.codec("age").min == 0.0);
  CHECK(enc.codec("age").max == 10.0);
  CHECK(enc.codec("pet").vocabulary == std::vector<std::string>{"cat", "dog"});
  CHECK(enc.codec("pet").width() == 2);
  CHECK(enc.dim() == 3);

  const Table m = parse_table("a,b,c,label\n1,2,x,A\n3,4,y,B\n5,6,z,A\n", mixed_schema());
  CHECK(fit_encoder(m).dim() == 5);
}

TEST_CASE("constant column is widened") {
  const Table t = parse_table("age,pet,label\n3,cat,A\n3,dog,B\n", pets_schema());
  const Encoder enc = fit_encoder(t);
  CHECK(enc.codec("age").max - enc.codec("age").min == doctest::Approx(kConstantColumnWidening));
  const Matrix x = encode(enc, t).features;
  CHECK(x(0, 0) == -1.0);
}

TEST_CASE("encode values") {
  const Table t = parse_table("age,pet,label\n0,cat,A\n10,dog,A\n5,dog,B\n", pets_schema());
  const Encoder enc = fit_encoder(t);
  const Encoded e = encode(enc, t);
  CHECK(e.features(0, 0) == -1.0);
  CHECK(e.features(1, 0) == 1.0);
  CHECK(e.features(2, 0) == 0.0);
  CHECK(e.features(2, 1) == 0.0);
  CHECK(e.features(2, 2) == 1.0);
  CHECK(e.labels == std::vector<std::size_t>{0, 0, 1});

  try {
    encode_rows(enc, {Row{1.0, std::string("fish"), std::string("A")}});
    FAIL("expected an unseen-category error");
  } catch (const UnseenCategoryError& e) {
    CHECK(e.column() == "pet");
    CHECK(e.value() == "fish");
  }
}

TEST_CASE("decode inverts, clamps and breaks ties low") {
  const Schema s({{"age", ColumnKind::Continuous},
                  {"kind", ColumnKind::Categorical},
                  {"label", ColumnKind::Categorical}},
                 "label");
  const Table t = parse_table("age,kind,label\n0,p,A\n10,q,A\n5,r,B\n", s);
  const Encoder enc = fit_encoder(t);

  Matrix f(4, 4);
  f << 0.0, 0.2, 0.7, 0.1,  //
      1.7, 1, 0, 0,          //
      -3.0, 0.5, 0.5, 0.0,   //
      -1.0, 0, 0, 1;
  const auto rows = decode(enc, f, "B");
  CHECK(std::get<double>(rows[0][0]) == 5.0);
  CHECK(std::get<std::string>(rows[0][1]) == "q");
  CHECK(std::get<double>(rows[1][0]) == 10.0);
  CHECK(std::get<double>(rows[2][0]) == 0.0);
  CHECK(std::get<std::string>(rows[2][1]) == "p");
  CHECK(std::get<std::string>(rows[3][1]) == "r");
  CHECK(std::get<std::string>(rows[3][2]) == "B");
  CHECK_THROWS_AS(decode(enc, Matrix::Zero(1, 3)), DimensionMismatchError);
}

TEST_CASE("integer columns decode to whole numbers") {
  const Schema s({{"n", ColumnKind::Continuous, true}, {"label", ColumnKind::Categorical}}, "label");
  const Table t = parse_table("n,label\n0,A\n7,B\n", s);
  const Encoder enc = fit_encoder(t);
  Matrix f(2, 1);
  f << 0.1, 0.95;
  const auto rows = decode(enc, f, "A");
  CHECK(std::get<double>(rows[0][0]) == 4.0);
  CHECK(std::get<double>(rows[1][0]) == 7.0);
}

TEST_CASE("round trip on random mixed rows") {
  Rng rng(42);
  const std::vector<std::string> cats{"x", "y", "z"};
  std::vector<Row> rows;
  for (int i = 0; i < 200; ++i)
    rows.push_back(Row{rng.normal() * 100.0, rng.uniform() - 0.5, cats[rng.index(3)], std::string(i % 4 ? "A" : "B")});
  const Table t(mixed_schema(), rows);
  const Encoder enc = fit_encoder(t);
  const Encoded e = encode(enc, t);
  CHECK(e.features.col(0).minCoeff() >= -1.0);
  CHECK(e.features.col(0).maxCoeff() <= 1.0);
  CHECK(e.features.col(1).minCoeff() >= -1.0);
  CHECK(e.features.col(1).maxCoeff() <= 1.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto back = decode(enc, e.features.row(static_cast<Eigen::Index>(i)), std::get<std::string>(rows[i][3]));
    CHECK(std::abs(std::get<double>(back[0][0]) - std::get<double>(rows[i][0])) < 1e-9);
    CHECK(std::abs(std::get<double>(back[0][1]) - std::get<double>(rows[i][1])) < 1e-9);
    CHECK(back[0][2] == rows[i][2]);
    CHECK(back[0][3] == rows[i][3]);
  }
}

TEST_CASE("encoder json round trip") {
  const Table t = parse_table("age,pet,label\n0,cat,A\n10,dog,B\n", pets_schema());
  const Encoder enc = fit_encoder(t);
  const nlohmann::json j = enc.to_json();
  for (const char* key : {"mins", "maxs", "vocabularies", "dim"}) CHECK(j.contains(key));
  const Encoder back = Encoder::from_json(j, t.schema());
  CHECK(back.dim() == enc.dim());
  CHECK(back.codec("age").max == 10.0);
  CHECK(back.codec("pet").vocabulary == enc.codec("pet").vocabulary);
  CHECK(back.class_labels() == enc.class_labels());
}

TEST_CASE("partition_classes") {
  const auto p = partition_counts({3, 1});
  CHECK(p.major == 0);
  CHECK(p.minors == std::vector<std::size_t>{1});

  const auto tie = partition_counts({2, 2});
  CHECK(tie.major == 0);
  CHECK(tie.minors == std::vector<std::size_t>{1});

  const auto sat = partition_counts({2282, 1336, 1080, 562, 573, 539});
  CHECK(sat.major == 0);
  CHECK(sat.minors.size() == 5);
  CHECK(sat.max_count() == 2282);

  CHECK_THROWS_AS(partition_counts({5}, true), SingleClassError);
  CHECK_NOTHROW(partition_counts({5}, false));

  const Table t = parse_table("age,pet,label\n1,cat,A\n2,dog,B\n3,cat,B\n", pets_schema());
  const auto tp = partition_classes(t);
  CHECK(tp.major == 1);
  CHECK(tp.counts[0] + tp.counts[1] == t.size());
}

TEST_CASE("write_csv round trips exactly") {
  Rng rng(3);
  std::vector<Row> rows;
  for (int i = 0; i < 50; ++i) rows.push_back(Row{rng.normal() / 3.0, std::string("a,b"), std::string(i % 2 ? "A" : "B")});
  const Table t(pets_schema(), rows);
  const auto path = std::filesystem::temp_directory_path() / "sos_tabular_roundtrip.csv";
  t.write_csv(path);
  const Table back = load_table(path, t.schema());
  CHECK(back.rows() == t.rows());
  std::filesystem::remove(path);
}
