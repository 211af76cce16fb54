#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "helprank/datagen/records.hpp"
#include "helprank/numkernel/matrix.hpp"
#include "helprank/numkernel/rng.hpp"
#include "helprank/trainer/model.hpp"
#include "helprank/trainer/train.hpp"

namespace helprank::theoria {

using numkernel::Matrix;
using numkernel::Rng;
using trainer::LossKind;

inline constexpr double kTolerance = 1e-9;

struct PropertyReport {
  std::string property;
  std::size_t trials = 0;
  std::size_t violations = 0;
  double worst_margin = 0.0;  // smallest slack seen; negative when violated
  bool pass = false;
};

/// Header property,trials,violations,worst_margin,pass
void write_property_csv(const std::vector<PropertyReport>& reports, std::ostream& out);

// Convexity

using PointLoss = std::function<double(std::span<const double>)>;

/// theta L(u) + (1 - theta) L(v) - L(theta u + (1 - theta) v).
double jensen_gap(const PointLoss& loss, std::span<const double> u, std::span<const double> v, double theta);

/// One trial draws a loss and two points; every theta in {0.1, ..., 0.9}
/// must give a gap >= -kTolerance.
struct JensenTrial {
  PointLoss loss;
  std::vector<double> u;
  std::vector<double> v;
};
using JensenSampler = std::function<JensenTrial(Rng&)>;

PropertyReport check_jensen(const std::string& property, const JensenSampler& sampler, std::size_t trials,
                            const Rng& rng);

/// Listwise: -sum y' ln p over interior simplex points p (the softmax
/// domain). Pairwise: the hinge over (f+, f-) with margin 1..4.
PropertyReport check_convexity(LossKind loss, std::size_t trials, const Rng& rng);

// Gradients

/// Per-term listwise derivative within y'_j, listwise gradient components
/// within 1, pairwise subgradient components in {-1, 0, 1}.
PropertyReport check_gradient_bounds(std::size_t trials, const Rng& rng);

struct LipschitzEstimate {
  double listwise = 0.0;  // sup |f'_j - y'_j| seen
  double pairwise = 0.0;  // sup |subgradient component| seen
};
LipschitzEstimate estimate_lipschitz(std::size_t trials, const Rng& rng);

// Loss bounds

double listwise_loss_bound(double f_min, double f_max, std::size_t reviews);
double pairwise_loss_bound(double f_min, double f_max, std::span<const int> labels);

/// Each instance is a set of 1..5 products with 1..30 reviews and scores in
/// [f_min, f_max]. Summed listwise and pairwise losses must stay within the
/// summed bounds, and for every product with ln|R| <= label range the
/// listwise bound may not exceed the pairwise one. Products with equal
/// labels carry no pairwise loss and are left out of the pairwise sum.
PropertyReport check_loss_bounds(std::size_t trials, double f_min, double f_max, const Rng& rng);

// Generalization bound

struct BoundInputs {
  double gamma = 0.0;
  double loss_bound = 0.0;  // L
  std::size_t iterations = 1;  // T
  std::function<double(std::size_t)> rate;  // lambda_t for t = 1..T; constant 1 when empty
  std::size_t samples = 1;  // N
  double delta = 0.05;

  /// Throws ConfigError unless gamma, L >= 0, T, N >= 1, delta in (0, 2]
  /// and every rate is finite and nonnegative.
  void validate() const;
};

struct BoundTerms {
  double concentration = 0.0;  // L sqrt(log(2/delta) / 2N)
  double stability = 0.0;      // 2 gamma^2 sum lambda_t (2 sqrt(log(2/delta)/T) + sqrt(2 log(2/delta)/N) + 1/N)
  double total() const { return concentration + stability; }
};

BoundTerms theorem1_terms(const BoundInputs& in);
double theorem1_bound(const BoundInputs& in);

/// Finite-difference sign checks over sampled inputs: the bound never
/// decreases when gamma or L grows.
PropertyReport check_bound_monotonicity(std::size_t trials, const Rng& rng);
/// Sampled (gamma, L) pairs with list < pair on both: bound(list) < bound(pair).
PropertyReport check_bound_ordering(std::size_t trials, const Rng& rng);

/// Every property above at the given trial count, in a fixed order.
std::vector<PropertyReport> verify_all(std::size_t trials, const Rng& rng);

// Routing

struct RoutingStats {
  Matrix mean;  // labels 0..4 x leaves; a row of NaN for a label with no reviews
  std::array<std::size_t, datagen::kNumLabels> counts{};

  bool has_empty_class() const;
  double total_variation(int label_a, int label_b) const;
};

/// Mean leaf-reach probabilities of tree `tree_index` per helpfulness label.
/// Throws ConfigError when the model has no tree regressor.
RoutingStats leaf_routing_stats(trainer::HelpfulnessModel& model, const datagen::Dataset& data,
                                std::size_t tree_index = 0);

/// Header label,count,leaf0,...; empty classes write "nan".
void write_routing_csv(const RoutingStats& stats, std::ostream& out);

}  // namespace helprank::theoria
