#include "stochlab/cli/emit.hpp"

#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

namespace stochlab::cli {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : path_(path), columns_(header.size()) {
  file_ = std::fopen(path.c_str(), "w");
  if (!file_) throw std::runtime_error("cannot open " + path.string() + ": " + std::strerror(errno));
  std::string line;
  for (std::size_t i = 0; i < header.size(); ++i) line += (i ? "," : "") + header[i];
  line += "\n";
  check(std::fputs(line.c_str(), file_) >= 0);
}

void CsvWriter::row(std::initializer_list<double> values) { row(std::vector<double>(values)); }

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != columns_) throw std::logic_error("csv row width does not match the header");
  std::string line;
  for (std::size_t i = 0; i < values.size(); ++i) line += (i ? "," : "") + format_number(values[i]);
  line += "\n";
  check(std::fputs(line.c_str(), file_) >= 0);
}

void CsvWriter::check(bool ok) {
  if (!ok) throw std::runtime_error("write to " + path_.string() + " failed: " + std::strerror(errno));
}

void CsvWriter::close() {
  if (!file_) return;
  std::FILE* f = file_;
  file_ = nullptr;
  const bool flushed = std::fflush(f) == 0;
  const int err = errno;
  const bool closed = std::fclose(f) == 0;
  if (!flushed || !closed) {
    throw std::runtime_error("write to " + path_.string() + " failed: " + std::strerror(flushed ? errno : err));
  }
}

CsvWriter::~CsvWriter() {
  if (file_) std::fclose(file_);
}

void write_json(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + ": " + std::strerror(errno));
  out << doc.dump(2) << "\n";
  out.close();
  if (!out) throw std::runtime_error("write to " + path.string() + " failed: " + std::strerror(errno));
}

// --- schemas -------------------------------------------------------------------

namespace {

enum class Kind { String, Number, Integer, Boolean, Object, Array, NumberArray, Any };

struct Field {
  std::string name;
  Kind kind;
  bool nullable = false;
  std::vector<Field> items;  // Array: fields of each element; Object: required members
};

Field str(std::string n) { return {std::move(n), Kind::String, false, {}}; }
Field num(std::string n, bool nullable = false) { return {std::move(n), Kind::Number, nullable, {}}; }
Field integer(std::string n) { return {std::move(n), Kind::Integer, false, {}}; }
Field boolean(std::string n) { return {std::move(n), Kind::Boolean, false, {}}; }
Field obj(std::string n, std::vector<Field> members = {}, bool nullable = false) {
  return {std::move(n), Kind::Object, nullable, std::move(members)};
}
Field arr(std::string n, std::vector<Field> items) { return {std::move(n), Kind::Array, false, std::move(items)}; }
Field nums(std::string n) { return {std::move(n), Kind::NumberArray, false, {}}; }
Field any(std::string n) { return {std::move(n), Kind::Any, false, {}}; }

std::vector<Field> estimate_fields() {
  return {str("status"), num("limit", true), num("growth_exponent", true),
          arr("truncations", {num("radius"), num("partial", true)}), str("note")};
}

const std::map<std::string, std::vector<Field>>& schemas() {
  static const std::map<std::string, std::vector<Field>> s = {
      {"classify",
       {obj("manifold"), str("verdict"), boolean("conflict"),
        arr("evidence", {str("criterion"), str("outcome"), str("status"), num("value", true),
                         arr("truncations", {num("radius"), num("partial", true)}), str("note")})}},
      {"shoot",
       {obj("manifold"), str("verdict"),
        arr("results", {num("lambda"), str("verdict"), num("sup", true), obj("estimate", estimate_fields())})}},
      {"demo_elliptic",
       {obj("manifold"), str("nonlinearity"), num("h"), str("verdict"), nums("radii"), nums("probe_radii"),
        any("probe_values"), nums("relative_changes"), nums("decay_ratios"), boolean("monotone_in_radius"),
        nums("residuals"), obj("shooting", {num("lambda"), str("verdict")}), boolean("coherent")}},
      {"demo_nonuniqueness",
       {obj("manifold"), str("nonlinearity"), str("verdict"), str("classification"),
        obj("clock", {num("alpha"), num("epsilon"), num("target"), num("exceedance_time")}),
        obj("minimal", {str("status"), num("sup")}),
        obj("witness", {str("status"), nums("relative_changes"), nums("decay_ratios"), boolean("monotone_in_radius")}),
        obj("gap", {num("time"), num("datum_sup"), num("witness_sup"), num("excess"), num("difference"),
                    num("tolerance"), boolean("witnessed")}),
        obj("duality", {num("sup"), num("psi_sup"), boolean("below_tolerance"), boolean("sign_check"), num("worst_defect")},
            true),
        obj("closure", {}, true),
        boolean("coherent")}},
      {"solve",
       {obj("manifold"), str("nonlinearity"), num("horizon"), num("radius"), integer("cells"), integer("steps"),
        num("sup"), num("max_balance_residual"), obj("weak", {num("max_normalized"), num("bound"), boolean("passed")}),
        obj("diagnostics")}},
      {"mass_audit",
       {obj("manifold"), str("nonlinearity"), integer("steps"), num("max_balance_residual"), num("tolerance"),
        boolean("passed")}},
      {"clock", {str("nonlinearity"), num("alpha"), num("epsilon"), num("target"), num("exceedance_time", true)}},
  };
  return s;
}

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::String: return "string";
    case Kind::Number: return "number";
    case Kind::Integer: return "integer";
    case Kind::Boolean: return "boolean";
    case Kind::Object: return "object";
    case Kind::Array: return "array";
    case Kind::NumberArray: return "array of numbers";
    case Kind::Any: return "value";
  }
  return "value";
}

void check_field(const json& parent, const Field& f, const std::string& path, std::vector<std::string>& errors) {
  const std::string here = path.empty() ? f.name : path + "." + f.name;
  if (!parent.contains(f.name)) {
    errors.push_back(here + ": missing");
    return;
  }
  const json& v = parent.at(f.name);
  if (v.is_null()) {
    if (!f.nullable && f.kind != Kind::Any) errors.push_back(here + ": null not allowed");
    return;
  }
  bool ok = true;
  switch (f.kind) {
    case Kind::String: ok = v.is_string(); break;
    case Kind::Number: ok = v.is_number(); break;
    case Kind::Integer: ok = v.is_number_integer(); break;
    case Kind::Boolean: ok = v.is_boolean(); break;
    case Kind::Object: ok = v.is_object(); break;
    case Kind::Array: ok = v.is_array(); break;
    case Kind::NumberArray: {
      ok = v.is_array();
      if (ok) {
        for (const auto& x : v) ok = ok && (x.is_number() || x.is_null());
      }
      break;
    }
    case Kind::Any: break;
  }
  if (!ok) {
    errors.push_back(here + ": expected " + kind_name(f.kind));
    return;
  }
  if (f.kind == Kind::Object) {
    for (const auto& m : f.items) check_field(v, m, here, errors);
  } else if (f.kind == Kind::Array) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string at = here + "[" + std::to_string(i) + "]";
      if (!v[i].is_object()) {
        errors.push_back(at + ": expected object");
        continue;
      }
      for (const auto& m : f.items) check_field(v[i], m, at, errors);
    }
  }
}

}  // namespace

std::vector<std::string> validate_document(const json& doc) {
  std::vector<std::string> errors;
  if (!doc.is_object()) return {"<document>: expected object"};
  if (!doc.contains("schema_version") || !doc.at("schema_version").is_number_integer()) {
    errors.push_back("schema_version: missing or not an integer");
  } else if (doc.at("schema_version").get<int>() != kSchemaVersion) {
    errors.push_back("schema_version: expected " + std::to_string(kSchemaVersion));
  }
  if (!doc.contains("document") || !doc.at("document").is_string()) {
    errors.push_back("document: missing or not a string");
    return errors;
  }
  const auto& all = schemas();
  const auto it = all.find(doc.at("document").get<std::string>());
  if (it == all.end()) {
    errors.push_back("document: unknown kind '" + doc.at("document").get<std::string>() + "'");
    return errors;
  }
  for (const auto& f : it->second) check_field(doc, f, "", errors);
  return errors;
}

std::vector<std::string> document_kinds() {
  std::vector<std::string> k;
  for (const auto& [name, fields] : schemas()) k.push_back(name);
  return k;
}

}  // namespace stochlab::cli
