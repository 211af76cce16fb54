#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>

#include "helprank/trainer/model.hpp"

namespace helprank::trainer {

// {"format": "helprank-checkpoint", "version": 1, "seed": u64,
//  "model": {d, d_tok, d_img, kernel, pooling, regressor, tree_depth,
//            tree_ensemble, fcnn_hidden, listwise_attention},
//  "parameters": [{"name", "rows", "cols", "values": [row-major reals]}]}
// Reals carry 17 significant digits, so a reload is bit-exact.

void write_checkpoint(HelpfulnessModel& model, std::uint64_t seed, std::ostream& out);
void write_checkpoint(HelpfulnessModel& model, std::uint64_t seed, const std::filesystem::path& path);

struct LoadedCheckpoint {
  std::uint64_t seed = 0;
  std::unique_ptr<HelpfulnessModel> model;
};

/// Throws SchemaError on unknown formats, missing or misshaped parameters.
LoadedCheckpoint read_checkpoint(std::istream& in);
LoadedCheckpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace helprank::trainer
