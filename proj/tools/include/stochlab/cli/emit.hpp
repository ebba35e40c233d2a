#pragma once

#include <cstdio>
#include <filesystem>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace stochlab::cli {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Comma-separated rows, numbers printed with %.17g so that reruns are
/// byte-identical and values round-trip. Throws std::runtime_error with the
/// system message on I/O failure.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  void row(std::initializer_list<double> values);
  void row(const std::vector<double>& values);
  /// Flushes and closes; throws if anything failed on the way.
  void close();
  ~CsvWriter();

 private:
  void check(bool ok);
  std::filesystem::path path_;
  std::size_t columns_;
  std::FILE* file_ = nullptr;
};

std::string format_number(double x);

/// JSON has no infinities or NaN; those become null.
json finite_or_null(double x);

/// Pretty-printed with a trailing newline; keys come out sorted.
void write_json(const std::filesystem::path& path, const json& doc);

/// Checks a result document against the schema for its "document" kind.
/// Returns one message per problem (empty when valid).
std::vector<std::string> validate_document(const json& doc);

/// Document kinds the validator knows.
std::vector<std::string> document_kinds();

}  // namespace stochlab::cli
