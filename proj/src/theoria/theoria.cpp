#include "helprank/theoria/theoria.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "helprank/datagen/jsonl.hpp"
#include "helprank/errors.hpp"
#include "helprank/objectives/objectives.hpp"

namespace helprank::theoria {

using datagen::format_real;
using objectives::ScoredList;

namespace {

// Accumulates one property across trials.
class Tally {
 public:
  explicit Tally(std::string property) { report_.property = std::move(property); }

  // Records a slack; the trial is violated when any slack < -tol.
  void slack(double s, double tol = kTolerance) {
    report_.worst_margin = std::min(report_.worst_margin, s);
    if (!(s >= -tol)) violated_ = true;
  }
  void end_trial() {
    ++report_.trials;
    report_.violations += violated_;
    violated_ = false;
  }
  PropertyReport finish() {
    report_.pass = report_.trials > 0 && report_.violations == 0;
    return report_;
  }

 private:
  PropertyReport report_{{}, 0, 0, std::numeric_limits<double>::infinity(), false};
  bool violated_ = false;
};

std::vector<int> random_labels(std::size_t n, Rng& rng) {
  std::vector<int> y(n);
  for (int& v : y) v = static_cast<int>(rng.uniform_int(0, datagen::kNumLabels - 1));
  return y;
}

// Interior point of the probability simplex.
std::vector<double> simplex_point(std::size_t n, Rng& rng) {
  std::vector<double> p(n);
  double sum = 0.0;
  for (double& v : p) {
    v = -std::log(1.0 - rng.uniform()) + 1e-6;
    sum += v;
  }
  for (double& v : p) v /= sum;
  return p;
}

std::vector<double> random_scores(std::size_t n, Rng& rng) {
  const double scale = rng.uniform() < 0.1 ? 100.0 : rng.uniform(0.0, 10.0);
  std::vector<double> f(n);
  for (double& v : f) v = scale * rng.normal();
  return f;
}

BoundInputs random_bound_inputs(Rng& rng) {
  BoundInputs in;
  in.gamma = rng.uniform(0.0, 5.0);
  in.loss_bound = rng.uniform(0.0, 10.0);
  in.iterations = static_cast<std::size_t>(rng.uniform_int(1, 500));
  in.samples = static_cast<std::size_t>(rng.uniform_int(1, 100000));
  in.delta = rng.uniform(1e-3, 1.0);
  const double base = rng.uniform(1e-4, 1e-1);
  if (rng.uniform() < 0.5) {
    in.rate = [base](std::size_t) { return base; };
  } else {
    in.rate = [base](std::size_t t) { return base / static_cast<double>(t); };
  }
  return in;
}

}  // namespace

void write_property_csv(const std::vector<PropertyReport>& reports, std::ostream& out) {
  out << "property,trials,violations,worst_margin,pass\n";
  for (const auto& r : reports) {
    out << r.property << ',' << r.trials << ',' << r.violations << ',' << format_real(r.worst_margin, 10) << ','
        << (r.pass ? "true" : "false") << '\n';
  }
}

double jensen_gap(const PointLoss& loss, std::span<const double> u, std::span<const double> v, double theta) {
  if (u.size() != v.size()) throw DimensionError("jensen_gap: points differ in dimension");
  std::vector<double> mix(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) mix[k] = theta * u[k] + (1.0 - theta) * v[k];
  return theta * loss(u) + (1.0 - theta) * loss(v) - loss(mix);
}

PropertyReport check_jensen(const std::string& property, const JensenSampler& sampler, std::size_t trials,
                            const Rng& rng) {
  if (trials < 1) throw ConfigError("trials must be at least 1");
  Tally tally(property);
  for (std::size_t t = 0; t < trials; ++t) {
    Rng r = rng.split(t);
    const JensenTrial trial = sampler(r);
    for (int k = 1; k <= 9; ++k) tally.slack(jensen_gap(trial.loss, trial.u, trial.v, k / 10.0));
    tally.end_trial();
  }
  return tally.finish();
}

PropertyReport check_convexity(LossKind loss, std::size_t trials, const Rng& rng) {
  if (loss == LossKind::kListwise) {
    // Scores ln p have softmax p, so the library loss evaluates -sum y' ln p.
    return check_jensen(
        "convexity_listwise",
        [](Rng& r) {
          const auto n = static_cast<std::size_t>(r.uniform_int(1, 30));
          auto labels = random_labels(n, r);
          JensenTrial t;
          t.loss = [labels](std::span<const double> p) {
            ScoredList list;
            for (double v : p) list.scores.push_back(std::log(v));
            list.labels = labels;
            return objectives::listwise_loss(list).value;
          };
          t.u = simplex_point(n, r);
          t.v = simplex_point(n, r);
          return t;
        },
        trials, rng);
  }
  return check_jensen(
      "convexity_pairwise",
      [](Rng& r) {
        const int alpha = static_cast<int>(r.uniform_int(1, 4));
        JensenTrial t;
        t.loss = [alpha](std::span<const double> f) {
          return objectives::pairwise_hinge({{f[0], f[1]}, {alpha, 0}}, {0, 1}).value;
        };
        t.u = {r.uniform(-5.0, 5.0), r.uniform(-5.0, 5.0)};
        t.v = {r.uniform(-5.0, 5.0), r.uniform(-5.0, 5.0)};
        return t;
      },
      trials, rng);
}

PropertyReport check_gradient_bounds(std::size_t trials, const Rng& rng) {
  if (trials < 1) throw ConfigError("trials must be at least 1");
  Tally tally("gradient_bounds");
  for (std::size_t t = 0; t < trials; ++t) {
    Rng r = rng.split(t);
    const auto n = static_cast<std::size_t>(r.uniform_int(1, 30));
    const ScoredList list{random_scores(n, r), random_labels(n, r)};
    const auto d = objectives::to_distributions(list);
    const auto grad = objectives::listwise_loss(list).gradient;
    for (std::size_t j = 0; j < n; ++j) {
      const double term = d.y[j] * (1.0 - d.f[j]);
      tally.slack(d.y[j] - std::abs(term));
      tally.slack(1.0 - d.y[j]);
      tally.slack(1.0 - std::abs(grad[j]));
    }
    for (const auto& pair : objectives::valid_pairs(list.labels)) {
      for (double g : objectives::pairwise_hinge(list, pair).gradient) {
        tally.slack(g == 0.0 || g == 1.0 || g == -1.0 ? 0.0 : -std::abs(std::abs(g) - 1.0), 0.0);
      }
    }
    tally.end_trial();
  }
  return tally.finish();
}

LipschitzEstimate estimate_lipschitz(std::size_t trials, const Rng& rng) {
  LipschitzEstimate est;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng r = rng.split(t);
    const auto n = static_cast<std::size_t>(r.uniform_int(1, 30));
    const ScoredList list{random_scores(n, r), random_labels(n, r)};
    for (double g : objectives::listwise_loss(list).gradient) est.listwise = std::max(est.listwise, std::abs(g));
    for (const auto& pair : objectives::valid_pairs(list.labels)) {
      for (double g : objectives::pairwise_hinge(list, pair).gradient) {
        est.pairwise = std::max(est.pairwise, std::abs(g));
      }
    }
  }
  return est;
}

double listwise_loss_bound(double f_min, double f_max, std::size_t reviews) {
  return (f_max - f_min) + std::log(static_cast<double>(reviews));
}

double pairwise_loss_bound(double f_min, double f_max, std::span<const int> labels) {
  return (f_max - f_min) + objectives::pairwise_margin(labels);
}

PropertyReport check_loss_bounds(std::size_t trials, double f_min, double f_max, const Rng& rng) {
  if (trials < 1) throw ConfigError("trials must be at least 1");
  if (!(f_min <= f_max)) throw ConfigError("score box needs f_min <= f_max");
  Tally tally("loss_bounds");
  for (std::size_t t = 0; t < trials; ++t) {
    Rng r = rng.split(t);
    const auto products = r.uniform_int(1, 5);
    double list_loss = 0.0, list_bound = 0.0, pair_loss = 0.0, pair_bound = 0.0;
    for (std::int64_t i = 0; i < products; ++i) {
      const auto n = static_cast<std::size_t>(r.uniform_int(1, 30));
      ScoredList list{std::vector<double>(n), random_labels(n, r)};
      const bool corners = r.uniform() < 0.3;
      for (double& s : list.scores) s = corners ? (r.uniform() < 0.5 ? f_min : f_max) : r.uniform(f_min, f_max);

      list_loss += objectives::listwise_loss(list).value;
      list_bound += listwise_loss_bound(f_min, f_max, n);
      const auto pairs = objectives::valid_pairs(list.labels);
      if (!pairs.empty()) {
        double worst = 0.0;
        for (const auto& pair : pairs) worst = std::max(worst, objectives::pairwise_hinge(list, pair).value);
        pair_loss += worst;
        pair_bound += pairwise_loss_bound(f_min, f_max, list.labels);
      }
      const double range = objectives::pairwise_margin(list.labels);
      if (std::log(static_cast<double>(n)) <= range) {
        tally.slack(pairwise_loss_bound(f_min, f_max, list.labels) - listwise_loss_bound(f_min, f_max, n));
      }
    }
    tally.slack(list_bound - list_loss);
    tally.slack(pair_bound - pair_loss);
    tally.end_trial();
  }
  return tally.finish();
}

void BoundInputs::validate() const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma must be finite and nonnegative");
  if (!(loss_bound >= 0.0) || !std::isfinite(loss_bound)) throw ConfigError("L must be finite and nonnegative");
  if (iterations < 1) throw ConfigError("T must be at least 1");
  if (samples < 1) throw ConfigError("N must be at least 1");
  if (!(delta > 0.0 && delta <= 2.0)) throw ConfigError("delta must lie in (0, 2]");
  if (rate) {
    for (std::size_t t = 1; t <= iterations; ++t) {
      const double l = rate(t);
      if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("lambda_t must be finite and nonnegative");
    }
  }
}

BoundTerms theorem1_terms(const BoundInputs& in) {
  in.validate();
  const double lg = std::log(2.0 / in.delta);
  const auto n = static_cast<double>(in.samples), t = static_cast<double>(in.iterations);
  double rate_sum = 0.0;
  for (std::size_t k = 1; k <= in.iterations; ++k) rate_sum += in.rate ? in.rate(k) : 1.0;
  BoundTerms out;
  out.concentration = in.loss_bound * std::sqrt(lg / (2.0 * n));
  out.stability = 2.0 * in.gamma * in.gamma * rate_sum * (2.0 * std::sqrt(lg / t) + std::sqrt(2.0 * lg / n) + 1.0 / n);
  return out;
}

double theorem1_bound(const BoundInputs& in) { return theorem1_terms(in).total(); }

PropertyReport check_bound_monotonicity(std::size_t trials, const Rng& rng) {
  if (trials < 1) throw ConfigError("trials must be at least 1");
  Tally tally("bound_monotonicity");
  for (std::size_t t = 0; t < trials; ++t) {
    Rng r = rng.split(t);
    BoundInputs in = random_bound_inputs(r);
    const double base = theorem1_bound(in);
    BoundInputs up = in;
    up.gamma += r.uniform(1e-3, 1.0);
    tally.slack(theorem1_bound(up) - base);
    up = in;
    up.loss_bound += r.uniform(1e-3, 1.0);
    tally.slack(theorem1_bound(up) - base);
    tally.end_trial();
  }
  return tally.finish();
}

PropertyReport check_bound_ordering(std::size_t trials, const Rng& rng) {
  if (trials < 1) throw ConfigError("trials must be at least 1");
  Tally tally("bound_ordering");
  for (std::size_t t = 0; t < trials; ++t) {
    Rng r = rng.split(t);
    BoundInputs list = random_bound_inputs(r);
    BoundInputs pair = list;
    pair.gamma = list.gamma + r.uniform(1e-3, 1.0);
    pair.loss_bound = list.loss_bound + r.uniform(1e-3, 1.0);
    const double gap = theorem1_bound(pair) - theorem1_bound(list);
    tally.slack(gap > 0.0 ? gap : -std::numeric_limits<double>::min(), 0.0);
    tally.end_trial();
  }
  return tally.finish();
}

std::vector<PropertyReport> verify_all(std::size_t trials, const Rng& rng) {
  return {check_convexity(LossKind::kListwise, trials, rng.split(0)),
          check_convexity(LossKind::kPairwise, trials, rng.split(1)),
          check_gradient_bounds(trials, rng.split(2)),
          check_loss_bounds(trials, -10.0, 10.0, rng.split(3)),
          check_bound_monotonicity(trials, rng.split(4)),
          check_bound_ordering(trials, rng.split(5))};
}

bool RoutingStats::has_empty_class() const {
  return std::any_of(counts.begin(), counts.end(), [](std::size_t c) { return c == 0; });
}

double RoutingStats::total_variation(int label_a, int label_b) const {
  if (label_a < 0 || label_b < 0 || label_a >= datagen::kNumLabels || label_b >= datagen::kNumLabels) {
    throw ConfigError("labels must lie in 0..4");
  }
  double tv = 0.0;
  for (std::size_t l = 0; l < mean.cols(); ++l) tv += std::abs(mean(label_a, l) - mean(label_b, l));
  return tv / 2.0;
}

RoutingStats leaf_routing_stats(trainer::HelpfulnessModel& model, const datagen::Dataset& data,
                                std::size_t tree_index) {
  regressor::SoftTree* tree = model.tree();
  if (tree == nullptr) throw ConfigError("routing statistics need a tree regressor");
  const std::size_t leaves = tree->shape().leaves;
  RoutingStats stats;
  stats.mean = Matrix(datagen::kNumLabels, leaves);
  for (const auto& product : data.products) {
    const Matrix mu = tree->route_probs(model.context(product), tree_index);
    for (std::size_t j = 0; j < product.reviews.size(); ++j) {
      const auto y = static_cast<std::size_t>(product.reviews[j].label);
      ++stats.counts[y];
      for (std::size_t l = 0; l < leaves; ++l) stats.mean(y, l) += mu(j, l);
    }
  }
  for (std::size_t y = 0; y < stats.mean.rows(); ++y) {
    for (std::size_t l = 0; l < leaves; ++l) {
      stats.mean(y, l) = stats.counts[y] ? stats.mean(y, l) / static_cast<double>(stats.counts[y])
                                         : std::numeric_limits<double>::quiet_NaN();
    }
  }
  return stats;
}

void write_routing_csv(const RoutingStats& stats, std::ostream& out) {
  out << "label,count";
  for (std::size_t l = 0; l < stats.mean.cols(); ++l) out << ",leaf" << l;
  out << '\n';
  for (std::size_t y = 0; y < stats.mean.rows(); ++y) {
    out << y << ',' << stats.counts[y];
    for (std::size_t l = 0; l < stats.mean.cols(); ++l) {
      out << ',' << (stats.counts[y] ? format_real(stats.mean(y, l), 10) : std::string("nan"));
    }
    out << '\n';
  }
}

}  // namespace helprank::theoria
