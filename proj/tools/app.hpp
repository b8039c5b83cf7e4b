#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpflow/catalog.hpp"
#include "cpflow/constructions.hpp"
#include "cpflow/types.hpp"

namespace cpflow::app {

/// Config-file problem; carries the 1-based line number for diagnostics.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& msg, int line) : std::runtime_error(msg), line(line) {}
  int line;
};

struct KvEntry {
  std::string key;
  std::string value;
  int line;
};

/// Flat key=value config file: one pair per line, '#' comments, blank lines
/// ignored. Later duplicates override earlier ones.
class KvConfig {
 public:
  static KvConfig load(const std::filesystem::path& path);

  /// Last entry with the given key, or nullptr.
  const KvEntry* find(const std::string& key) const;

  /// Rejects keys outside `allowed`, reporting the offending line.
  void require_known(const std::set<std::string>& allowed) const;

  const std::vector<KvEntry>& entries() const { return entries_; }

 private:
  std::vector<KvEntry> entries_;
};

/// Parses "v0,v1,..." into a vector; throws std::invalid_argument on junk.
Vec parse_vec(const std::string& text);

/// Function request assembled from CLI flags / config keys.
struct FnArgs {
  std::string id;
  std::optional<Vec> a;
  double b = 0.0;
  double lambda = 0.5;
  double offset = 0.0;
  int dim = 2;
  int depth = 6;
  double tmax = 100.0;
  std::string alpha = "nsq";  // nsq | geometric
  double alpha_ratio = 2.0;
  double t_budget = 1e30;
};

/// A function instance ready to run, with its sampling box and, for the 2-D
/// construction, the full build metadata.
struct BuiltFn {
  std::shared_ptr<const ConvexFn> fn;
  std::string describe;
  Box sample_box;
  std::optional<Counterexample2D> ce;
};

BuiltFn build_fn(const FnArgs& spec);

/// Output directory precedence: --out flag > config > CPFLOW_OUT > ./out.
std::filesystem::path resolve_out_dir(const std::string& flag_value);

/// Entry point used by main() and by the test harness.
int dispatch(int argc, const char* const* argv);

}  // namespace cpflow::app
