#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "helprank/numkernel/rng.hpp"
#include "helprank/numkernel/tape.hpp"

namespace helprank::objectives {

using numkernel::Rng;
using numkernel::Var;

/// Scores and labels of one product's reviews, in review order.
struct ScoredList {
  std::vector<double> scores;
  std::vector<int> labels;

  std::size_t size() const { return scores.size(); }
  /// Throws DimensionError unless both are nonempty and of equal length.
  void validate() const;
};

struct LossValue {
  double value = 0.0;
  std::vector<double> gradient;  // d value / d scores
};

struct Distributions {
  std::vector<double> f;  // softmax of scores
  std::vector<double> y;  // softmax of labels
};

std::vector<double> softmax(std::span<const double> x);
Distributions to_distributions(const ScoredList& list);

/// -sum_j y'_j ln f'_j, gradient f' - y'.
LossValue listwise_loss(const ScoredList& list);

/// Label range max - min.
double pairwise_margin(std::span<const int> labels);

using IndexPair = std::pair<std::size_t, std::size_t>;  // (positive, negative)

/// Every (r+, r-) with y[r+] > y[r-], in lexicographic order.
std::vector<IndexPair> valid_pairs(std::span<const int> labels);
/// One pair drawn uniformly from valid_pairs; nullopt when labels are all equal.
std::optional<IndexPair> sample_pair(std::span<const int> labels, Rng& rng);

/// max(0, -f+ + f- + alpha) for a fixed pair; subgradient 0 at the kink.
LossValue pairwise_hinge(const ScoredList& list, const IndexPair& pair);
/// Hinge on one uniformly sampled pair; nullopt signals "no valid pair".
std::optional<LossValue> pairwise_loss(const ScoredList& list, Rng& rng);
/// Mean hinge over all valid pairs; nullopt when there are none.
std::optional<LossValue> pairwise_loss_exact(const ScoredList& list);

// Tape forms. `scores` is an (n x 1) column; the result is (1 x 1).
Var listwise_loss(Var scores, std::span<const int> labels);
/// Mean hinge over `pairs` (nonempty).
Var pairwise_loss(Var scores, std::span<const int> labels, const std::vector<IndexPair>& pairs);

// Ranking metrics. Reviews are ranked by descending score, ties broken by
// the original index.

std::vector<std::size_t> rank_order(std::span<const double> scores);

/// Mean of precision@k over relevant positions k; nullopt if nothing is relevant.
std::optional<double> average_precision(const std::vector<bool>& ranked_relevance);
std::optional<double> average_precision(const ScoredList& list, int tau = 1);
/// Mean AP over lists with at least one review labelled >= tau; NaN if none qualify.
double mean_average_precision(std::span<const ScoredList> lists, int tau = 1);

enum class Gain { kExponential, kLinear };  // 2^y - 1 or y

double dcg_at(std::span<const int> ranked_labels, std::size_t n, Gain gain = Gain::kExponential);
/// DCG / IDCG with a log2(k + 1) discount; 1 when IDCG is 0.
double ndcg_at(std::span<const int> ranked_labels, std::size_t n, Gain gain = Gain::kExponential);
double ndcg_at(const ScoredList& list, std::size_t n, Gain gain = Gain::kExponential);
double mean_ndcg_at(std::span<const ScoredList> lists, std::size_t n, Gain gain = Gain::kExponential);

/// P(score of a helpful review > score of an unhelpful one), ties count
/// one half; helpful means label >= tau. nullopt if either class is empty.
std::optional<double> score_separation(std::span<const double> scores, std::span<const int> labels, int tau = 1);

}  // namespace helprank::objectives
