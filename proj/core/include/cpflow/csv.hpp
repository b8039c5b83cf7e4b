#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace cpflow {

/// Formats a double with 17 significant digits (round-trip exact).
std::string g17(double x);

/// Minimal CSV emitter: comma-separated, '\n' row terminator, numbers via g17.
class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path);

  void header(const std::vector<std::string>& names);
  void row(const std::vector<double>& values);
  /// Mixed row: leading text cells followed by numeric cells.
  void row(const std::vector<std::string>& text, const std::vector<double>& values);

  bool good() const { return out_.good(); }

 private:
  std::ofstream out_;
};

}  // namespace cpflow
