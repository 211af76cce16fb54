#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "helprank/datagen/generator.hpp"
#include "helprank/objectives/objectives.hpp"
#include "helprank/trainer/train.hpp"

namespace helprank::cli {

/// Everything a flat JSON config file can set. One seed drives generation,
/// splitting and training of a command.
struct RunConfig {
  std::uint64_t seed = 2023;
  datagen::GenConfig gen;
  std::array<double, 3> split_ratios{4.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0};
  trainer::TrainConfig train;
  objectives::Gain ndcg_gain = objectives::Gain::kExponential;
  std::string out_dir;
};

/// Applies the keys of a JSON object over the defaults. Throws ConfigError
/// naming the key for unknown keys, wrong types or invalid values.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);
/// Every key with its resolved value, pretty-printed.
std::string resolved_config_json(const RunConfig& config);

/// Seed precedence: flag, then HELPRANK_SEED, then the fallback.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::uint64_t fallback);

/// Exit codes: 0 success, 1 invalid input (flags, config, files, schema),
/// 2 runtime failure such as divergence or a failed property.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace helprank::cli
