// Copyright 2026 The danserv Authors
// SPDX-License-Identifier: Apache-2.0

#include "dan/schemagen.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "dan/crc32.hpp"
#include "dan/errors.hpp"

#include <json.hpp>

namespace dan {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

CType parse_ctype(const std::string& s, const std::string& table, const std::string& column) {
  if (s == "int") return CType::Int;
  if (s == "float") return CType::Float;
  if (s == "string") return CType::String;
  throw DanError(Err::Schema, "table '" + table + "' column '" + column + "': unknown type '" +
                                  s + "' (expected int/float/string)");
}

const char* ctype_keyword(CType t) {
  switch (t) {
    case CType::Int: return "int";
    case CType::Float: return "float";
    case CType::String: return "string";
  }
  return "?";
}

void write_text_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw DanError(Err::Io, "cannot create " + p.string());
  out << text;
  if (!out) throw DanError(Err::Io, "write failed for " + p.string());
}

}  // namespace

SchemaDoc parse_schema(const std::string& json_text) {
  auto doc = json::parse(json_text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw DanError(Err::Schema, "schema document is not a JSON object");
  }
  if (!doc.contains("tables") || !doc["tables"].is_array()) {
    throw DanError(Err::Schema, "schema document lacks a 'tables' array");
  }
  SchemaDoc out;
  std::set<std::string> table_names;
  for (const auto& t : doc["tables"]) {
    if (!t.is_object() || !t.contains("name") || !t["name"].is_string()) {
      throw DanError(Err::Schema, "table entry lacks a string 'name'");
    }
    SchemaTable table;
    table.name = t["name"].get<std::string>();
    if (table.name.empty()) throw DanError(Err::Schema, "table name is empty");
    if (!table_names.insert(table.name).second) {
      throw DanError(Err::Schema, "duplicate table '" + table.name + "'");
    }
    if (!t.contains("columns") || !t["columns"].is_array() || t["columns"].empty()) {
      throw DanError(Err::Schema, "table '" + table.name + "' has no columns");
    }
    std::set<std::string> col_names;
    for (const auto& c : t["columns"]) {
      if (!c.is_object() || !c.contains("name") || !c["name"].is_string() ||
          !c.contains("type") || !c["type"].is_string()) {
        throw DanError(Err::Schema, "table '" + table.name + "': column needs name and type");
      }
      ColumnSpec spec;
      spec.name = c["name"].get<std::string>();
      if (spec.name.empty()) {
        throw DanError(Err::Schema, "table '" + table.name + "': empty column name");
      }
      if (!col_names.insert(spec.name).second) {
        throw DanError(Err::Schema,
                       "table '" + table.name + "': duplicate column '" + spec.name + "'");
      }
      spec.ctype = parse_ctype(c["type"].get<std::string>(), table.name, spec.name);
      table.columns.push_back(std::move(spec));
    }
    if (!t.contains("order_by") || !t["order_by"].is_string()) {
      throw DanError(Err::Schema, "table '" + table.name + "' lacks 'order_by'");
    }
    table.order_by = t["order_by"].get<std::string>();
    if (!col_names.count(table.order_by)) {
      throw DanError(Err::Schema, "table '" + table.name + "': order_by '" + table.order_by +
                                      "' names no column");
    }
    out.tables.push_back(std::move(table));
  }
  return out;
}

std::string upper_camel(const std::string& snake) {
  std::string out;
  bool upper_next = true;
  for (char c : snake) {
    if (c == '_') {
      upper_next = true;
      continue;
    }
    out += upper_next ? static_cast<char>(std::toupper(static_cast<unsigned char>(c)))
                      : c;
    upper_next = false;
  }
  return out;
}

std::string schema_content_hash(const std::string& json_text) {
  char buf[16];
  snprintf(buf, sizeof(buf), "%08x", crc32(json_text));
  return buf;
}

MappingDescriptor make_descriptor(const SchemaTable& table, const std::string& schema_hash) {
  MappingDescriptor d;
  d.table = table.name;
  d.object_type = upper_camel(table.name);
  d.fields = table.columns;
  d.order_by = table.order_by;
  d.schema_hash = schema_hash;
  return d;
}

std::string render_interface(const MappingDescriptor& d) {
  std::string out;
  out += "// generated by danserv schemagen; schema-hash " + d.schema_hash + "\n";
  out += "// regenerate instead of editing\n\n";
  out += "object " + d.object_type + " (table " + d.table + ")\n";
  for (const auto& f : d.fields) {
    out += "  field " + f.name + ": " + ctype_name(f.ctype) + "\n";
  }
  out += "\naccessor get_" + d.table + "(run: u64, variant: string) -> " + d.object_type + "\n";
  out += "ordering: rows ordered by " + d.order_by + " ascending\n";
  return out;
}

std::string descriptor_to_json_text(const MappingDescriptor& d) {
  json fields = json::array();
  for (const auto& f : d.fields) {
    fields.push_back({{"name", f.name}, {"ctype", ctype_keyword(f.ctype)}});
  }
  json doc{{"table", d.table},
           {"object_type", d.object_type},
           {"fields", std::move(fields)},
           {"order_by", d.order_by},
           {"schema_hash", d.schema_hash}};
  return doc.dump(2) + "\n";
}

MappingDescriptor descriptor_from_json_text(const std::string& text) {
  auto doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("table") ||
      !doc.contains("fields") || !doc["fields"].is_array()) {
    throw DanError(Err::Schema, "invalid mapping descriptor document");
  }
  MappingDescriptor d;
  d.table = doc["table"].get<std::string>();
  d.object_type = doc.value("object_type", upper_camel(d.table));
  d.order_by = doc.value("order_by", std::string());
  d.schema_hash = doc.value("schema_hash", std::string());
  for (const auto& f : doc["fields"]) {
    if (!f.is_object() || !f.contains("name") || !f.contains("ctype")) {
      throw DanError(Err::Schema, "invalid field in mapping descriptor for '" + d.table + "'");
    }
    ColumnSpec spec;
    spec.name = f["name"].get<std::string>();
    spec.ctype = parse_ctype(f["ctype"].get<std::string>(), d.table, spec.name);
    d.fields.push_back(std::move(spec));
  }
  if (d.fields.empty()) {
    throw DanError(Err::Schema, "mapping descriptor for '" + d.table + "' has no fields");
  }
  return d;
}

std::vector<fs::path> generate_schema_outputs(const std::string& schema_json_text,
                                              const fs::path& out_dir) {
  const SchemaDoc schema = parse_schema(schema_json_text);
  const std::string hash = schema_content_hash(schema_json_text);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) {
    throw DanError(Err::Io, "cannot create output dir " + out_dir.string());
  }
  std::vector<fs::path> written;
  for (const auto& table : schema.tables) {
    const MappingDescriptor d = make_descriptor(table, hash);
    const fs::path ifc = out_dir / (table.name + ".ifc");
    const fs::path mapping = out_dir / (table.name + ".mapping.json");
    write_text_file(ifc, render_interface(d));
    write_text_file(mapping, descriptor_to_json_text(d));
    written.push_back(ifc);
    written.push_back(mapping);
  }
  return written;
}

DescriptorSet DescriptorSet::load_dir(const fs::path& dir) {
  DescriptorSet set;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return set;
  std::vector<fs::path> files;
  for (const auto& de : fs::directory_iterator(dir)) {
    const auto name = de.path().filename().string();
    if (de.is_regular_file() && name.size() > 13 &&
        name.substr(name.size() - 13) == ".mapping.json") {
      files.push_back(de.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    if (!in) throw DanError(Err::Io, "cannot open " + f.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    set.add(descriptor_from_json_text(text));
  }
  return set;
}

void DescriptorSet::add(MappingDescriptor d) {
  by_table_[d.table] = std::move(d);
}

const MappingDescriptor* DescriptorSet::find(const std::string& table) const {
  auto it = by_table_.find(table);
  return it == by_table_.end() ? nullptr : &it->second;
}

void DescriptorSet::validate(const std::string& table,
                             const std::vector<ColumnSpec>& columns) const {
  const MappingDescriptor* d = find(table);
  if (!d) return;
  if (columns.size() != d->fields.size()) {
    throw DanError(Err::Schema, "table '" + table + "': backend file has " +
                                    std::to_string(columns.size()) + " columns, descriptor has " +
                                    std::to_string(d->fields.size()));
  }
  for (size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name != d->fields[i].name || columns[i].ctype != d->fields[i].ctype) {
      throw DanError(Err::Schema, "table '" + table + "': column " + std::to_string(i) + " is " +
                                      columns[i].name + ":" + ctype_name(columns[i].ctype) +
                                      ", descriptor says " + d->fields[i].name + ":" +
                                      ctype_name(d->fields[i].ctype));
    }
  }
}

}  // namespace dan
