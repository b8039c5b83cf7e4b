#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace cpflow {

/// Minimal static SVG 1.1 line/scatter plotter. Deterministic output.
class SvgPlot {
 public:
  SvgPlot(std::string title, std::string x_label, std::string y_label);

  void set_log_x(bool on) { log_x_ = on; }
  void set_log_y(bool on) { log_y_ = on; }

  void add_line(const std::vector<double>& xs, const std::vector<double>& ys,
                const std::string& label, const std::string& color);
  void add_scatter(const std::vector<double>& xs, const std::vector<double>& ys,
                   const std::string& label, const std::string& color);

  void write(const std::filesystem::path& path) const;

 private:
  struct Series {
    std::vector<double> xs, ys;
    std::string label, color;
    bool scatter;
  };
  std::string title_, x_label_, y_label_;
  bool log_x_ = false, log_y_ = false;
  std::vector<Series> series_;
};

}  // namespace cpflow
