// Copyright 2026 The danserv Authors
// SPDX-License-Identifier: Apache-2.0

#include "dan/schemagen.hpp"

#include <fstream>

#include "dan/errors.hpp"
#include "test_util.hpp"

#include <doctest.h>

using namespace dan;
using dantest::TempDir;

namespace {

const char* kSmtSchema = R"({"tables":[{"name":"smt_ped","columns":[)"
                         R"({"name":"channel_id","type":"int"},)"
                         R"({"name":"pedestal","type":"float"},)"
                         R"({"name":"gain","type":"float"}],"order_by":"channel_id"}]})";

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

Err schema_err(const std::string& json_text, std::string* detail = nullptr) {
  try {
    (void)parse_schema(json_text);
  } catch (const DanError& e) {
    if (detail) *detail = e.what();
    return e.kind();
  }
  FAIL("expected SchemaError");
  return Err::Internal;
}

}  // namespace

TEST_CASE("parse_schema accepts the SMT pedestal shape") {
  const SchemaDoc doc = parse_schema(kSmtSchema);
  REQUIRE(doc.tables.size() == 1);
  const auto& t = doc.tables[0];
  CHECK(t.name == "smt_ped");
  REQUIRE(t.columns.size() == 3);
  CHECK(t.columns[0].name == "channel_id");
  CHECK(t.columns[0].ctype == CType::Int);
  CHECK(t.columns[1].ctype == CType::Float);
  CHECK(t.order_by == "channel_id");
}

TEST_CASE("parse_schema rejects invalid documents with context") {
  std::string detail;

  SUBCASE("duplicate column") {
    const auto kind = schema_err(
        R"({"tables":[{"name":"t","columns":[{"name":"a","type":"int"},)"
        R"({"name":"a","type":"float"}],"order_by":"a"}]})",
        &detail);
    CHECK(kind == Err::Schema);
    CHECK(detail.find("'a'") != std::string::npos);
  }
  SUBCASE("unknown ctype") {
    const auto kind = schema_err(
        R"({"tables":[{"name":"t","columns":[{"name":"a","type":"double"}],"order_by":"a"}]})",
        &detail);
    CHECK(kind == Err::Schema);
    CHECK(detail.find("double") != std::string::npos);
  }
  SUBCASE("duplicate table") {
    CHECK(schema_err(
              R"({"tables":[{"name":"t","columns":[{"name":"a","type":"int"}],"order_by":"a"},)"
              R"({"name":"t","columns":[{"name":"b","type":"int"}],"order_by":"b"}]})") ==
          Err::Schema);
  }
  SUBCASE("order_by names no column") {
    CHECK(schema_err(
              R"({"tables":[{"name":"t","columns":[{"name":"a","type":"int"}],"order_by":"z"}]})") ==
          Err::Schema);
  }
  SUBCASE("empty columns") {
    CHECK(schema_err(R"({"tables":[{"name":"t","columns":[],"order_by":"a"}]})") == Err::Schema);
  }
  SUBCASE("not json") { CHECK(schema_err("{nope") == Err::Schema); }
}

TEST_CASE("object type names are UpperCamelCase of the table name") {
  CHECK(upper_camel("smt_ped") == "SmtPed");
  CHECK(upper_camel("mu") == "Mu");
  CHECK(upper_camel("a_b_c") == "ABC");
  CHECK(upper_camel("already") == "Already");
}

TEST_CASE("generated outputs are deterministic and complete") {
  TempDir out1, out2;
  const auto files1 = generate_schema_outputs(kSmtSchema, out1.path());
  const auto files2 = generate_schema_outputs(kSmtSchema, out2.path());
  REQUIRE(files1.size() == 2);  // one .ifc + one .mapping.json per table
  CHECK(slurp(files1[0]) == slurp(files2[0]));
  CHECK(slurp(files1[1]) == slurp(files2[1]));

  const std::string ifc = slurp(out1 / "smt_ped.ifc");
  CHECK(ifc.find("object SmtPed (table smt_ped)") != std::string::npos);
  CHECK(ifc.find("field channel_id: INT") != std::string::npos);
  CHECK(ifc.find("field pedestal: FLOAT") != std::string::npos);
  CHECK(ifc.find("field gain: FLOAT") != std::string::npos);
  CHECK(ifc.find("get_smt_ped(run: u64, variant: string) -> SmtPed") != std::string::npos);
  CHECK(ifc.find("ordered by channel_id") != std::string::npos);
  CHECK(ifc.find(schema_content_hash(kSmtSchema)) != std::string::npos);  // drift banner
}

TEST_CASE("two tables yield two interface files and two descriptors") {
  const std::string schema =
      R"({"tables":[{"name":"smt_ped","columns":[{"name":"c","type":"int"}],"order_by":"c"},)"
      R"({"name":"mu_gain","columns":[{"name":"g","type":"float"}],"order_by":"g"}]})";
  TempDir out;
  const auto files = generate_schema_outputs(schema, out.path());
  CHECK(files.size() == 4);
  CHECK(std::filesystem::exists(out / "smt_ped.ifc"));
  CHECK(std::filesystem::exists(out / "smt_ped.mapping.json"));
  CHECK(std::filesystem::exists(out / "mu_gain.ifc"));
  CHECK(std::filesystem::exists(out / "mu_gain.mapping.json"));
}

TEST_CASE("descriptors round-trip through JSON and load from a directory") {
  TempDir out;
  generate_schema_outputs(kSmtSchema, out.path());
  const auto set = DescriptorSet::load_dir(out.path());
  REQUIRE(set.size() == 1);
  const auto* d = set.find("smt_ped");
  REQUIRE(d != nullptr);
  CHECK(d->object_type == "SmtPed");
  REQUIRE(d->fields.size() == 3);
  CHECK(d->fields[0].name == "channel_id");
  CHECK(d->order_by == "channel_id");
  CHECK(!d->schema_hash.empty());
  CHECK(set.find("absent_table") == nullptr);
}

TEST_CASE("descriptor validation accepts matches and names mismatches") {
  TempDir out;
  generate_schema_outputs(kSmtSchema, out.path());
  const auto set = DescriptorSet::load_dir(out.path());

  const std::vector<ColumnSpec> good = {
      {"channel_id", CType::Int}, {"pedestal", CType::Float}, {"gain", CType::Float}};
  CHECK_NOTHROW(set.validate("smt_ped", good));
  CHECK_NOTHROW(set.validate("table_without_descriptor", {{"x", CType::Int}}));

  std::vector<ColumnSpec> renamed = good;
  renamed[1].name = "offset";
  CHECK_THROWS_AS(set.validate("smt_ped", renamed), DanError);

  std::vector<ColumnSpec> retyped = good;
  retyped[2].ctype = CType::Int;
  CHECK_THROWS_AS(set.validate("smt_ped", retyped), DanError);

  CHECK_THROWS_AS(set.validate("smt_ped", {{"channel_id", CType::Int}}), DanError);
}

TEST_CASE("missing descriptor dir is an empty set") {
  CHECK(DescriptorSet::load_dir("/nonexistent/dir/for/test").size() == 0);
}
