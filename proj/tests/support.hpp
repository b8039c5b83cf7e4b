#pragma once

// Shared helpers for the test suites: independent numerical oracles
// (quadrature, 1-D minimization), catalog access, and a tiny process runner
// for suites that drive the command-line binary.

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>

#include "cpflow/catalog.hpp"
#include "cpflow/convex_fn.hpp"
#include "cpflow/rng.hpp"
#include "cpflow/types.hpp"

namespace testsupport {

using cpflow::ConvexFn;
using cpflow::Vec;

/// Composite Simpson quadrature (n even panels), independent of any library
/// integral bookkeeping.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  if (n % 2) ++n;
  double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

/// Brute-force 1-D prox oracle: coarse scan of the prox objective followed
/// by ternary refinement. Convexity of the objective makes this reliable.
inline double oracle_prox_1d(const ConvexFn& f, double x, double lambda,
                             double search_radius = 0.0) {
  auto obj = [&](double u) {
    Vec v(1);
    v[0] = u;
    return f.value(v) + (u - x) * (u - x) / (2.0 * lambda);
  };
  double radius = search_radius > 0 ? search_radius : 1.0 + 10.0 * lambda * (1.0 + std::abs(x));
  double lo = x - radius, hi = x + radius;
  const int kScan = 4000;
  double best = lo, best_val = obj(lo);
  for (int i = 1; i <= kScan; ++i) {
    double u = lo + (hi - lo) * i / kScan;
    double v = obj(u);
    if (v < best_val) {
      best_val = v;
      best = u;
    }
  }
  double a = best - (hi - lo) / kScan, b = best + (hi - lo) / kScan;
  for (int it = 0; it < 200; ++it) {
    double m1 = a + (b - a) / 3.0, m2 = b - (b - a) / 3.0;
    if (obj(m1) < obj(m2))
      b = m2;
    else
      a = m1;
  }
  return 0.5 * (a + b);
}

inline Vec vec1(double a) {
  Vec v(1);
  v[0] = a;
  return v;
}

inline Vec vec2(double a, double b) {
  Vec v(2);
  v[0] = a;
  v[1] = b;
  return v;
}

/// The standard catalog, built once per test binary.
inline const cpflow::Catalog& catalog() {
  static cpflow::Catalog cat = cpflow::Catalog::standard();
  return cat;
}

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

/// Runs a shell command, capturing combined stdout/stderr and the exit code.
inline RunResult run_command(const std::string& cmd) {
  RunResult r;
  std::string full = cmd + " 2>&1";
  FILE* pipe = ::popen(full.c_str(), "r");
  if (!pipe) throw std::runtime_error("popen failed for: " + cmd);
  std::array<char, 4096> buf{};
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) r.output.append(buf.data(), n);
  int status = ::pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128;
  return r;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

/// True when `output` contains a line exactly `key=value` (value prefix ok
/// when value ends with '*').
inline bool has_line_with(const std::string& output, const std::string& needle) {
  return output.find(needle) != std::string::npos;
}

}  // namespace testsupport
