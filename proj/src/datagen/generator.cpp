#include "helprank/datagen/generator.hpp"

#include <cmath>
#include <cstdio>
#include <vector>

#include "helprank/errors.hpp"
#include "helprank/numkernel/rng.hpp"

namespace helprank::datagen {

using numkernel::Rng;

void GenConfig::validate() const {
  if (reviews_min < 2) throw ConfigError("reviews_min must be at least 2");
  if (reviews_max < reviews_min) throw ConfigError("reviews_max must be >= reviews_min");
  if (review_tokens_min < 1 || review_tokens_max < review_tokens_min)
    throw ConfigError("review token range must be nonempty and start at 1 or more");
  if (product_tokens < 1) throw ConfigError("product_tokens must be positive");
  if (regions < 1) throw ConfigError("regions must be positive");
  if (d_tok < 2 || d_img < 2) throw ConfigError("d_tok and d_img must be at least 2");
  if (latent_dim < 1) throw ConfigError("latent_dim must be positive");
  if (!(noise_level >= 0.0) || !std::isfinite(noise_level)) throw ConfigError("noise_level must be >= 0");
  double sum = 0.0;
  for (double p : label_distribution) {
    if (!(p >= 0.0)) throw ConfigError("label_distribution entries must be nonnegative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("label_distribution must sum to 1 (got " + std::to_string(sum) + ")");
}

namespace {

using Vec = std::vector<double>;

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void normalize(Vec& a) {
  const double n = std::sqrt(dot(a, a));
  for (double& x : a) x /= n;
}

Vec gaussian(std::size_t n, Rng& rng) {
  Vec v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

// Unit vector orthogonal to the unit vector u.
Vec orthogonal_unit(const Vec& u, Rng& rng) {
  for (;;) {
    Vec o = gaussian(u.size(), rng);
    const double proj = dot(o, u);
    for (std::size_t i = 0; i < o.size(); ++i) o[i] -= proj * u[i];
    if (dot(o, o) > 1e-12) {
      normalize(o);
      return o;
    }
  }
}

// Unit image of latent t under the (latent x dim) map.
Vec embed(const Vec& t, const std::vector<Vec>& map) {
  Vec out(map.front().size(), 0.0);
  for (std::size_t k = 0; k < t.size(); ++k)
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += t[k] * map[k][j];
  normalize(out);
  return out;
}

Matrix rows_around(const Vec& signal, double signal_weight, const Vec* distractor, double distractor_weight,
                   std::size_t rows, double noise, Rng& rng) {
  const std::size_t dim = signal.size();
  const double sd = noise / std::sqrt(static_cast<double>(dim));
  Matrix m(rows, dim);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < dim; ++j) {
      double v = signal_weight * signal[j];
      if (distractor) v += distractor_weight * (*distractor)[j];
      if (sd > 0.0) v += sd * rng.normal();
      m(r, j) = v;
    }
  }
  return m;
}

std::uint64_t votes_for_label(int label, Rng& rng) {
  static constexpr std::int64_t lo[kNumLabels] = {0, 2, 4, 8, 16};
  static constexpr std::int64_t hi[kNumLabels] = {1, 3, 7, 15, 63};
  return static_cast<std::uint64_t>(rng.uniform_int(lo[label], hi[label]));
}

std::string product_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "p%05zu", i);
  return buf;
}

}  // namespace

Dataset generate(const GenConfig& config) {
  config.validate();
  const Rng root(config.seed);

  Rng shared = root.split(0);
  std::vector<Vec> text_map, image_map;
  for (std::size_t k = 0; k < config.latent_dim; ++k) text_map.push_back(gaussian(config.d_tok, shared));
  for (std::size_t k = 0; k < config.latent_dim; ++k) image_map.push_back(gaussian(config.d_img, shared));

  Dataset ds;
  ds.d_tok = config.d_tok;
  ds.d_img = config.d_img;
  ds.products.reserve(config.n_products);

  for (std::size_t i = 0; i < config.n_products; ++i) {
    Rng rng = root.split(i + 1);
    Vec topic = gaussian(config.latent_dim, rng);
    normalize(topic);
    const Vec u = embed(topic, text_map);
    const Vec v = embed(topic, image_map);

    ProductRecord p;
    p.product_id = product_id(i);
    p.text_tokens = rows_around(u, 1.0, nullptr, 0.0, config.product_tokens, config.noise_level, rng);
    p.image_regions = rows_around(v, 1.0, nullptr, 0.0, config.regions, config.noise_level, rng);

    const auto n_reviews = static_cast<std::size_t>(rng.uniform_int(
        static_cast<std::int64_t>(config.reviews_min), static_cast<std::int64_t>(config.reviews_max)));
    for (std::size_t j = 0; j < n_reviews; ++j) {
      ReviewRecord r;
      r.review_id = p.product_id + "-r" + std::to_string(j);
      r.label = static_cast<int>(rng.categorical(config.label_distribution));
      r.votes = votes_for_label(r.label, rng);
      const double q = (r.label + rng.uniform(0.05, 0.95)) / kNumLabels;
      const double off = std::sqrt(1.0 - q * q);
      const Vec o_text = orthogonal_unit(u, rng);
      const Vec o_img = orthogonal_unit(v, rng);
      const auto tokens = static_cast<std::size_t>(
          rng.uniform_int(static_cast<std::int64_t>(config.review_tokens_min),
                          static_cast<std::int64_t>(config.review_tokens_max)));
      r.text_tokens = rows_around(u, q, &o_text, off, tokens, config.noise_level, rng);
      r.image_regions = rows_around(v, q, &o_img, off, config.regions, config.noise_level, rng);
      p.reviews.push_back(std::move(r));
    }
    ds.products.push_back(std::move(p));
  }
  return ds;
}

}  // namespace helprank::datagen
