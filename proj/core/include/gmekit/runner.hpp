#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gmekit {

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_draws;
  std::optional<double> alpha;
};

struct RunProduct {
  std::string filename;
  std::string content;
};

struct RunProducts {
  std::vector<RunProduct> files;
  std::string log;  // per-request summary, one line each
};

// Executes a run config (data + schema + model source + requests) and returns
// the rendered output files. Relative paths in the config resolve against
// base_dir. Errors use the ConfigError / NumericError / DataError taxonomy.
RunProducts run_config_text(const std::string& config_json, const std::string& base_dir,
                            const RunOverrides& overrides = {});

// Convenience: read config from disk, write products under out_dir.
RunProducts run_config_file(const std::string& config_path, const std::string& out_dir,
                            const RunOverrides& overrides = {});

}  // namespace gmekit
