#include "dhl_cli/output.hpp"

#include <charconv>
#include <cmath>

#include "dhl/errors.hpp"

namespace dhl::cli {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, value, std::chars_format::general, 17);
  return std::string(buffer, result.ptr);
}

std::string format_number(long double value) { return format_number(static_cast<double>(value)); }

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw UsageError("cannot open " + path.string() + " for writing");
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out_ << ',';
    out_ << fields[i];
  }
  out_ << '\n';
}

namespace {

nlohmann::json number(double value) {
  if (std::isfinite(value)) return value;
  return format_number(value);
}

}  // namespace

nlohmann::json to_json(const CheckResult& check) {
  return {{"name", check.name},
          {"target", number(check.target)},
          {"estimate", number(check.estimate)},
          {"se", number(check.se)},
          {"tolerance", number(check.tolerance)},
          {"tolerance_kind", check.tolerance_kind},
          {"verdict", to_string(check.verdict)},
          {"note", check.note}};
}

nlohmann::json to_json(const ExperimentReport& report) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : report.checks) checks.push_back(to_json(c));
  nlohmann::json diagnostics = nlohmann::json::object();
  for (const auto& [key, value] : report.diagnostics) diagnostics[key] = number(value);
  return {{"name", report.name}, {"checks", checks}, {"diagnostics", diagnostics}, {"notes", report.notes}};
}

void write_json(const std::filesystem::path& path, const nlohmann::json& value) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot open " + path.string() + " for writing");
  out << value.dump(2) << '\n';
}

}  // namespace dhl::cli
