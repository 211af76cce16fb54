#pragma once

#include <array>
#include <cstdint>

#include "helprank/datagen/records.hpp"

namespace helprank::datagen {

struct Splits {
  Dataset train;
  Dataset val;
  Dataset test;
};

/// Product-level partition. Products are shuffled with `seed`, the first
/// two parts take round(ratio * n) products and the test part the rest;
/// each part keeps the original product order. Ratios must be >= 0 and
/// sum to 1 within 1e-9; a part with a positive ratio must end up nonempty.
Splits split(const Dataset& dataset, const std::array<double, 3>& ratios, std::uint64_t seed);

}  // namespace helprank::datagen
