#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

#include "helprank/datagen/records.hpp"

namespace helprank::datagen {

struct GenConfig {
  std::size_t n_products = 300;
  std::size_t reviews_min = 10;
  std::size_t reviews_max = 30;
  std::size_t d_tok = 32;
  std::size_t d_img = 32;
  std::size_t product_tokens = 8;
  std::size_t review_tokens_min = 3;
  std::size_t review_tokens_max = 8;
  std::size_t regions = 4;
  std::size_t latent_dim = 8;
  double noise_level = 1.0;
  std::array<double, kNumLabels> label_distribution{0.35, 0.25, 0.18, 0.12, 0.10};
  std::uint64_t seed = 2023;

  /// Throws ConfigError on empty ranges, zero sizes or a label
  /// distribution that is negative or does not sum to 1 within 1e-9.
  void validate() const;
};

/// Synthetic corpus in which a review's relevance to its product and the
/// agreement between its text and images both grow with its label.
///
/// Each product draws a latent topic t; fixed linear maps send t to a unit
/// text direction u and a unit image direction v. A review with label y
/// gets a quality q inside ((y + 0.05) / 5, (y + 0.95) / 5) and features
///   text row   = q u + sqrt(1 - q^2) o_text + noise
///   image row  = q v + sqrt(1 - q^2) o_img  + noise
/// where o_text is orthogonal to u and o_img to v, drawn per review. With
/// zero noise the cosine between a review's mean token and u equals q.
/// Product rows are u (text) and v (image) plus noise. Noise entries are
/// N(0, noise_level^2 / dim), so the noise vector has norm ~noise_level.
///
/// Product i draws from the child stream split(i + 1) of the seed; the
/// shared maps come from split(0).
Dataset generate(const GenConfig& config);

}  // namespace helprank::datagen
