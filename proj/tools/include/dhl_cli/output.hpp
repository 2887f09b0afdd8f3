#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "dhl/experiments.hpp"
#include "json.hpp"

namespace dhl::cli {

// 17 significant digits, '.' decimal, independent of the locale.
std::string format_number(double value);
std::string format_number(long double value);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& fields);

 private:
  std::ofstream out_;
};

nlohmann::json to_json(const CheckResult& check);
nlohmann::json to_json(const ExperimentReport& report);
void write_json(const std::filesystem::path& path, const nlohmann::json& value);

}  // namespace dhl::cli
