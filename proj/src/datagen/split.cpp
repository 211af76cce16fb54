#include "helprank/datagen/split.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "helprank/errors.hpp"
#include "helprank/numkernel/rng.hpp"

namespace helprank::datagen {

Splits split(const Dataset& dataset, const std::array<double, 3>& ratios, std::uint64_t seed) {
  double sum = 0.0;
  std::size_t positive = 0;
  for (double r : ratios) {
    if (!(r >= 0.0)) throw ConfigError("split ratios must be nonnegative");
    sum += r;
    positive += r > 0.0;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");

  const std::size_t n = dataset.products.size();
  if (n < positive) {
    throw ConfigError("fewer products (" + std::to_string(n) + ") than splits (" + std::to_string(positive) + ")");
  }

  std::array<std::size_t, 3> counts{};
  counts[0] = std::min(n, static_cast<std::size_t>(std::llround(ratios[0] * static_cast<double>(n))));
  counts[1] = std::min(n - counts[0], static_cast<std::size_t>(std::llround(ratios[1] * static_cast<double>(n))));
  counts[2] = n - counts[0] - counts[1];
  if (ratios[2] == 0.0 && counts[2] > 0) {
    // Rounding leftovers go to the last part that was asked for.
    (ratios[1] > 0.0 ? counts[1] : counts[0]) += counts[2];
    counts[2] = 0;
  }
  for (std::size_t k = 0; k < 3; ++k) {
    if (ratios[k] > 0.0 && counts[k] == 0) {
      throw ConfigError("fewer products (" + std::to_string(n) + ") than splits: part " + std::to_string(k) +
                        " would be empty");
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  numkernel::Rng rng(seed);
  rng.shuffle(order.begin(), order.end());

  Splits out;
  Dataset* parts[3] = {&out.train, &out.val, &out.test};
  const SplitTag tags[3] = {SplitTag::kTrain, SplitTag::kVal, SplitTag::kTest};
  std::size_t start = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                 order.begin() + static_cast<std::ptrdiff_t>(start + counts[k]));
    std::sort(idx.begin(), idx.end());
    parts[k]->d_tok = dataset.d_tok;
    parts[k]->d_img = dataset.d_img;
    parts[k]->split_tag = tags[k];
    for (std::size_t i : idx) parts[k]->products.push_back(dataset.products[i]);
    start += counts[k];
  }
  return out;
}

}  // namespace helprank::datagen
