#include "cpflow/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace cpflow {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return std::string(buf);
}

std::string escape_xml(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

SvgPlot::SvgPlot(std::string title, std::string x_label, std::string y_label)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

void SvgPlot::add_line(const std::vector<double>& xs, const std::vector<double>& ys,
                       const std::string& label, const std::string& color) {
  if (xs.size() != ys.size()) throw std::invalid_argument("SvgPlot: mismatched series lengths");
  series_.push_back({xs, ys, label, color, false});
}

void SvgPlot::add_scatter(const std::vector<double>& xs, const std::vector<double>& ys,
                          const std::string& label, const std::string& color) {
  if (xs.size() != ys.size()) throw std::invalid_argument("SvgPlot: mismatched series lengths");
  series_.push_back({xs, ys, label, color, true});
}

void SvgPlot::write(const std::filesystem::path& path) const {
  constexpr double W = 760.0, H = 480.0;
  constexpr double ml = 72.0, mr = 24.0, mt = 44.0, mb = 56.0;
  const double pw = W - ml - mr, ph = H - mt - mb;

  auto tx = [&](double x) { return log_x_ ? std::log10(x) : x; };
  auto ty = [&](double y) { return log_y_ ? std::log10(y) : y; };
  auto usable = [&](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && (!log_x_ || x > 0.0) && (!log_y_ || y > 0.0);
  };

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series_)
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      if (!usable(s.xs[i], s.ys[i])) continue;
      xmin = std::min(xmin, tx(s.xs[i]));
      xmax = std::max(xmax, tx(s.xs[i]));
      ymin = std::min(ymin, ty(s.ys[i]));
      ymax = std::max(ymax, ty(s.ys[i]));
    }
  if (!(xmin <= xmax)) {
    xmin = 0.0;
    xmax = 1.0;
  }
  if (!(ymin <= ymax)) {
    ymin = 0.0;
    ymax = 1.0;
  }
  if (xmax - xmin < 1e-12) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (ymax - ymin < 1e-12) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  const double ypad = 0.04 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  auto px = [&](double x) { return ml + (tx(x) - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return mt + ph - (ty(y) - ymin) / (ymax - ymin) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << fmt(W)
      << "\" height=\"" << fmt(H) << "\" viewBox=\"0 0 " << fmt(W) << " " << fmt(H) << "\">\n";
  svg << "<rect width=\"" << fmt(W) << "\" height=\"" << fmt(H) << "\" fill=\"#ffffff\"/>\n";
  svg << "<text x=\"" << fmt(W / 2) << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\""
      << " text-anchor=\"middle\">" << escape_xml(title_) << "</text>\n";

  // Axes frame.
  svg << "<rect x=\"" << fmt(ml) << "\" y=\"" << fmt(mt) << "\" width=\"" << fmt(pw)
      << "\" height=\"" << fmt(ph) << "\" fill=\"none\" stroke=\"#444444\"/>\n";

  // Ticks: decades when a log scale spans several, else five linear divisions.
  auto emit_x_tick = [&](double v, const std::string& text) {
    const double x = ml + (v - xmin) / (xmax - xmin) * pw;
    svg << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(mt + ph) << "\" x2=\"" << fmt(x)
        << "\" y2=\"" << fmt(mt + ph + 5) << "\" stroke=\"#444444\"/>\n";
    svg << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(mt + ph + 20)
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">"
        << escape_xml(text) << "</text>\n";
  };
  auto emit_y_tick = [&](double v, const std::string& text) {
    const double y = mt + ph - (v - ymin) / (ymax - ymin) * ph;
    svg << "<line x1=\"" << fmt(ml - 5) << "\" y1=\"" << fmt(y) << "\" x2=\"" << fmt(ml)
        << "\" y2=\"" << fmt(y) << "\" stroke=\"#444444\"/>\n";
    svg << "<text x=\"" << fmt(ml - 8) << "\" y=\"" << fmt(y + 4)
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">"
        << escape_xml(text) << "</text>\n";
  };

  if (log_x_ && xmax - xmin >= 2.0) {
    const int d0 = static_cast<int>(std::ceil(xmin));
    const int d1 = static_cast<int>(std::floor(xmax));
    const int stride = std::max(1, (d1 - d0) / 8);
    for (int d = d0; d <= d1; d += stride) emit_x_tick(d, "1e" + std::to_string(d));
  } else {
    for (int i = 0; i <= 5; ++i) {
      const double v = xmin + (xmax - xmin) * i / 5.0;
      emit_x_tick(v, fmt(log_x_ ? std::pow(10.0, v) : v));
    }
  }
  if (log_y_ && ymax - ymin >= 2.0) {
    const int d0 = static_cast<int>(std::ceil(ymin));
    const int d1 = static_cast<int>(std::floor(ymax));
    const int stride = std::max(1, (d1 - d0) / 8);
    for (int d = d0; d <= d1; d += stride) emit_y_tick(d, "1e" + std::to_string(d));
  } else {
    for (int i = 0; i <= 5; ++i) {
      const double v = ymin + (ymax - ymin) * i / 5.0;
      emit_y_tick(v, fmt(log_y_ ? std::pow(10.0, v) : v));
    }
  }

  svg << "<text x=\"" << fmt(ml + pw / 2) << "\" y=\"" << fmt(H - 12)
      << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">"
      << escape_xml(x_label_) << "</text>\n";
  svg << "<text x=\"18\" y=\"" << fmt(mt + ph / 2)
      << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\""
      << " transform=\"rotate(-90 18 " << fmt(mt + ph / 2) << ")\">" << escape_xml(y_label_)
      << "</text>\n";

  for (const auto& s : series_) {
    if (s.scatter) {
      for (std::size_t i = 0; i < s.xs.size(); ++i) {
        if (!usable(s.xs[i], s.ys[i])) continue;
        svg << "<circle cx=\"" << fmt(px(s.xs[i])) << "\" cy=\"" << fmt(py(s.ys[i]))
            << "\" r=\"2.5\" fill=\"" << s.color << "\"/>\n";
      }
    } else {
      std::ostringstream pts;
      bool open = false;
      for (std::size_t i = 0; i < s.xs.size(); ++i) {
        if (!usable(s.xs[i], s.ys[i])) {
          if (open) {
            svg << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\""
                << " points=\"" << pts.str() << "\"/>\n";
            pts.str("");
            open = false;
          }
          continue;
        }
        if (open) pts << ' ';
        pts << fmt(px(s.xs[i])) << ',' << fmt(py(s.ys[i]));
        open = true;
      }
      if (open)
        svg << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\""
            << " points=\"" << pts.str() << "\"/>\n";
    }
  }

  // Legend in the upper-right corner of the plot area.
  double ly = mt + 16.0;
  for (const auto& s : series_) {
    if (s.label.empty()) continue;
    const double lx = ml + pw - 150.0;
    svg << "<line x1=\"" << fmt(lx) << "\" y1=\"" << fmt(ly - 4) << "\" x2=\"" << fmt(lx + 22)
        << "\" y2=\"" << fmt(ly - 4) << "\" stroke=\"" << s.color << "\" stroke-width=\"3\"/>\n";
    svg << "<text x=\"" << fmt(lx + 28) << "\" y=\"" << fmt(ly)
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << escape_xml(s.label)
        << "</text>\n";
    ly += 16.0;
  }

  svg << "</svg>\n";

  std::ofstream out(path);
  if (!out) throw std::runtime_error("SvgPlot: cannot open " + path.string());
  out << svg.str();
}

}  // namespace cpflow
