// Copyright 2026 The danserv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "dan/object.hpp"

namespace dan {

struct SchemaTable {
  std::string name;
  std::vector<ColumnSpec> columns;
  std::string order_by;  // names an existing column
  // key columns are fixed to (run, variant)
};

struct SchemaDoc {
  std::vector<SchemaTable> tables;
};

// Derived deterministically from the schema; consumed at server startup to
// validate backend files against the declared shape.
struct MappingDescriptor {
  std::string table;
  std::string object_type;  // UpperCamelCase of the table name
  std::vector<ColumnSpec> fields;
  std::string order_by;
  std::string schema_hash;  // content hash of the schema document bytes
};

// Validates and returns the SchemaDoc; throws Schema with table/column
// context on duplicate table, duplicate column, unknown ctype string,
// missing order_by target or empty columns.
SchemaDoc parse_schema(const std::string& json_text);

std::string upper_camel(const std::string& snake);
std::string schema_content_hash(const std::string& json_text);  // crc32 hex

MappingDescriptor make_descriptor(const SchemaTable& table, const std::string& schema_hash);
std::string render_interface(const MappingDescriptor& d);  // <table>.ifc text
std::string descriptor_to_json_text(const MappingDescriptor& d);
MappingDescriptor descriptor_from_json_text(const std::string& text);  // throws Schema

// Writes <table>.ifc and <table>.mapping.json per table into out_dir.
// Deterministic: identical schema bytes produce byte-identical outputs.
std::vector<std::filesystem::path> generate_schema_outputs(const std::string& schema_json_text,
                                                           const std::filesystem::path& out_dir);

class DescriptorSet {
 public:
  DescriptorSet() = default;

  // Loads every *.mapping.json under dir; missing dir = empty set.
  static DescriptorSet load_dir(const std::filesystem::path& dir);

  void add(MappingDescriptor d);
  const MappingDescriptor* find(const std::string& table) const;
  size_t size() const { return by_table_.size(); }

  // Throws Schema when `table` has a descriptor whose fields disagree with
  // `columns`; tables without a descriptor pass.
  void validate(const std::string& table, const std::vector<ColumnSpec>& columns) const;

 private:
  std::map<std::string, MappingDescriptor> by_table_;
};

}  // namespace dan
