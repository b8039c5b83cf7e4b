#include "cpflow/csv.hpp"

#include <cstdio>
#include <stdexcept>

namespace cpflow {

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

CsvWriter::CsvWriter(const std::filesystem::path& path) : out_(path) {
  if (!out_) throw std::runtime_error("CsvWriter: cannot open " + path.string());
}

void CsvWriter::header(const std::vector<std::string>& names) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out_ << ',';
    out_ << names[i];
  }
  out_ << '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out_ << ',';
    out_ << g17(values[i]);
  }
  out_ << '\n';
}

void CsvWriter::row(const std::vector<std::string>& text, const std::vector<double>& values) {
  bool first = true;
  for (const auto& t : text) {
    if (!first) out_ << ',';
    out_ << t;
    first = false;
  }
  for (double v : values) {
    if (!first) out_ << ',';
    out_ << g17(v);
    first = false;
  }
  out_ << '\n';
}

}  // namespace cpflow
