#include "helprank/objectives/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "helprank/errors.hpp"

namespace helprank::objectives {

using numkernel::Matrix;
using numkernel::Tape;

void ScoredList::validate() const {
  if (scores.empty()) throw DimensionError("scored list is empty");
  if (scores.size() != labels.size()) {
    throw DimensionError("scored list has " + std::to_string(scores.size()) + " scores but " +
                         std::to_string(labels.size()) + " labels");
  }
}

std::vector<double> softmax(std::span<const double> x) {
  std::vector<double> out(x.size());
  if (x.empty()) return out;
  const double m = *std::max_element(x.begin(), x.end());
  double sum = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) sum += out[j] = std::exp(x[j] - m);
  for (double& v : out) v /= sum;
  return out;
}

namespace {

std::vector<double> as_reals(std::span<const int> labels) { return {labels.begin(), labels.end()}; }

double log_sum_exp(std::span<const double> x) {
  const double m = *std::max_element(x.begin(), x.end());
  double sum = 0.0;
  for (double v : x) sum += std::exp(v - m);
  return m + std::log(sum);
}

LossValue listwise(std::span<const double> scores, std::span<const int> labels) {
  const auto yp = softmax(as_reals(labels));
  const auto fp = softmax(scores);
  const double lse = log_sum_exp(scores);
  LossValue out;
  out.gradient.resize(scores.size());
  for (std::size_t j = 0; j < scores.size(); ++j) {
    out.value -= yp[j] * (scores[j] - lse);
    out.gradient[j] = fp[j] - yp[j];
  }
  return out;
}

void require_column(Var scores, std::size_t n, const char* op) {
  if (scores.cols() != 1 || scores.rows() != n) {
    throw DimensionError(std::string(op) + ": scores " + scores.value().shape_string() + " for " +
                         std::to_string(n) + " labels");
  }
}

}  // namespace

Distributions to_distributions(const ScoredList& list) {
  list.validate();
  return {softmax(list.scores), softmax(as_reals(list.labels))};
}

LossValue listwise_loss(const ScoredList& list) {
  list.validate();
  return listwise(list.scores, list.labels);
}

double pairwise_margin(std::span<const int> labels) {
  if (labels.empty()) throw DimensionError("pairwise_margin: empty label list");
  const auto [lo, hi] = std::minmax_element(labels.begin(), labels.end());
  return static_cast<double>(*hi - *lo);
}

std::vector<IndexPair> valid_pairs(std::span<const int> labels) {
  std::vector<IndexPair> out;
  for (std::size_t a = 0; a < labels.size(); ++a)
    for (std::size_t b = 0; b < labels.size(); ++b)
      if (labels[a] > labels[b]) out.emplace_back(a, b);
  return out;
}

std::optional<IndexPair> sample_pair(std::span<const int> labels, Rng& rng) {
  const auto pairs = valid_pairs(labels);
  if (pairs.empty()) return std::nullopt;
  return pairs[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(pairs.size()) - 1))];
}

LossValue pairwise_hinge(const ScoredList& list, const IndexPair& pair) {
  list.validate();
  const auto [pos, neg] = pair;
  if (pos >= list.size() || neg >= list.size() || !(list.labels[pos] > list.labels[neg])) {
    throw DimensionError("pairwise_hinge: not a valid (positive, negative) pair");
  }
  const double slack = -list.scores[pos] + list.scores[neg] + pairwise_margin(list.labels);
  LossValue out;
  out.gradient.assign(list.size(), 0.0);
  if (slack > 0.0) {
    out.value = slack;
    out.gradient[pos] = -1.0;
    out.gradient[neg] = 1.0;
  }
  return out;
}

std::optional<LossValue> pairwise_loss(const ScoredList& list, Rng& rng) {
  list.validate();
  const auto pair = sample_pair(list.labels, rng);
  if (!pair) return std::nullopt;
  return pairwise_hinge(list, *pair);
}

std::optional<LossValue> pairwise_loss_exact(const ScoredList& list) {
  list.validate();
  const auto pairs = valid_pairs(list.labels);
  if (pairs.empty()) return std::nullopt;
  LossValue out;
  out.gradient.assign(list.size(), 0.0);
  const double w = 1.0 / static_cast<double>(pairs.size());
  for (const auto& pair : pairs) {
    LossValue h = pairwise_hinge(list, pair);
    out.value += w * h.value;
    for (std::size_t j = 0; j < list.size(); ++j) out.gradient[j] += w * h.gradient[j];
  }
  return out;
}

Var listwise_loss(Var scores, std::span<const int> labels) {
  if (labels.empty()) throw DimensionError("listwise_loss: empty list");
  require_column(scores, labels.size(), "listwise_loss");
  LossValue lv = listwise(scores.value().values(), labels);
  Matrix grad = Matrix::column_vector(lv.gradient);
  return scores.tape().record(Matrix{{lv.value}}, {scores}, [scores, grad = std::move(grad)](Tape& t, std::size_t id) {
    if (Matrix* g = t.grad_target(scores)) numkernel::axpy(t.grad(id)(0, 0), grad, *g);
  });
}

Var pairwise_loss(Var scores, std::span<const int> labels, const std::vector<IndexPair>& pairs) {
  if (pairs.empty()) throw DimensionError("pairwise_loss: no pairs");
  require_column(scores, labels.size(), "pairwise_loss");
  ScoredList list{scores.value().values(), {labels.begin(), labels.end()}};
  LossValue total;
  total.gradient.assign(list.size(), 0.0);
  const double w = 1.0 / static_cast<double>(pairs.size());
  for (const auto& pair : pairs) {
    LossValue h = pairwise_hinge(list, pair);
    total.value += w * h.value;
    for (std::size_t j = 0; j < list.size(); ++j) total.gradient[j] += w * h.gradient[j];
  }
  Matrix grad = Matrix::column_vector(total.gradient);
  return scores.tape().record(Matrix{{total.value}}, {scores},
                              [scores, grad = std::move(grad)](Tape& t, std::size_t id) {
                                if (Matrix* g = t.grad_target(scores)) numkernel::axpy(t.grad(id)(0, 0), grad, *g);
                              });
}

std::vector<std::size_t> rank_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

std::optional<double> average_precision(const std::vector<bool>& ranked_relevance) {
  double hits = 0.0, sum = 0.0;
  for (std::size_t k = 0; k < ranked_relevance.size(); ++k) {
    if (!ranked_relevance[k]) continue;
    hits += 1.0;
    sum += hits / static_cast<double>(k + 1);
  }
  if (hits == 0.0) return std::nullopt;
  return sum / hits;
}

std::optional<double> average_precision(const ScoredList& list, int tau) {
  list.validate();
  std::vector<bool> relevance;
  for (std::size_t j : rank_order(list.scores)) relevance.push_back(list.labels[j] >= tau);
  return average_precision(relevance);
}

double mean_average_precision(std::span<const ScoredList> lists, int tau) {
  double sum = 0.0;
  std::size_t counted = 0;
  for (const auto& list : lists) {
    if (auto ap = average_precision(list, tau)) {
      sum += *ap;
      ++counted;
    }
  }
  return counted == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(counted);
}

double dcg_at(std::span<const int> ranked_labels, std::size_t n, Gain gain) {
  if (n < 1) throw ConfigError("NDCG cutoff must be at least 1");
  double dcg = 0.0;
  for (std::size_t k = 0; k < std::min(n, ranked_labels.size()); ++k) {
    const double y = ranked_labels[k];
    const double g = gain == Gain::kExponential ? std::exp2(y) - 1.0 : y;
    dcg += g / std::log2(static_cast<double>(k) + 2.0);
  }
  return dcg;
}

double ndcg_at(std::span<const int> ranked_labels, std::size_t n, Gain gain) {
  std::vector<int> ideal(ranked_labels.begin(), ranked_labels.end());
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  const double idcg = dcg_at(ideal, n, gain);
  if (idcg == 0.0) return 1.0;
  return dcg_at(ranked_labels, n, gain) / idcg;
}

double ndcg_at(const ScoredList& list, std::size_t n, Gain gain) {
  list.validate();
  std::vector<int> ranked;
  for (std::size_t j : rank_order(list.scores)) ranked.push_back(list.labels[j]);
  return ndcg_at(ranked, n, gain);
}

double mean_ndcg_at(std::span<const ScoredList> lists, std::size_t n, Gain gain) {
  if (lists.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (const auto& list : lists) sum += ndcg_at(list, n, gain);
  return sum / static_cast<double>(lists.size());
}

std::optional<double> score_separation(std::span<const double> scores, std::span<const int> labels, int tau) {
  if (scores.size() != labels.size()) throw DimensionError("score_separation: scores and labels differ in length");
  double correct = 0.0, pairs = 0.0;
  for (std::size_t a = 0; a < scores.size(); ++a) {
    if (labels[a] < tau) continue;
    for (std::size_t b = 0; b < scores.size(); ++b) {
      if (labels[b] >= tau) continue;
      pairs += 1.0;
      correct += scores[a] > scores[b] ? 1.0 : scores[a] == scores[b] ? 0.5 : 0.0;
    }
  }
  if (pairs == 0.0) return std::nullopt;
  return correct / pairs;
}

}  // namespace helprank::objectives
