#include "helprank/trainer/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "helprank/datagen/jsonl.hpp"
#include "helprank/errors.hpp"

namespace helprank::trainer {

using objectives::ScoredList;

std::string to_string(LossKind loss) { return loss == LossKind::kListwise ? "listwise" : "pairwise"; }

void TrainConfig::validate() const {
  model.validate();
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be a finite nonnegative number");
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (map_tau < 0 || map_tau > 4) throw ConfigError("map_tau must lie in 0..4");
}

std::vector<ScoredList> score_dataset(HelpfulnessModel& model, const datagen::Dataset& data) {
  std::vector<ScoredList> out;
  out.reserve(data.products.size());
  for (const auto& p : data.products) out.push_back({model.score(p), p.labels()});
  return out;
}

Metrics evaluate(std::span<const ScoredList> lists, int map_tau) {
  return {objectives::mean_average_precision(lists, map_tau), objectives::mean_ndcg_at(lists, 3),
          objectives::mean_ndcg_at(lists, 5)};
}

Metrics evaluate(HelpfulnessModel& model, const datagen::Dataset& data, int map_tau) {
  const auto lists = score_dataset(model, data);
  return evaluate(lists, map_tau);
}

double mean_loss(std::span<const ScoredList> lists, LossKind loss) {
  double sum = 0.0;
  std::size_t counted = 0;
  for (const auto& l : lists) {
    if (loss == LossKind::kListwise) {
      sum += objectives::listwise_loss(l).value;
      ++counted;
    } else if (auto v = objectives::pairwise_loss_exact(l)) {
      sum += v->value;
      ++counted;
    }
  }
  return counted == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(counted);
}

namespace {

std::vector<objectives::IndexPair> sample_pairs(const std::vector<int>& labels, Rng& rng) {
  std::vector<objectives::IndexPair> pairs;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    auto p = objectives::sample_pair(labels, rng);
    if (!p) break;
    pairs.push_back(*p);
  }
  return pairs;
}

bool has_pair(const std::vector<int>& labels) {
  return std::adjacent_find(labels.begin(), labels.end(), std::not_equal_to<>()) != labels.end();
}

}  // namespace

RunArtifacts train(const datagen::Splits& splits, const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  const auto& train_set = splits.train.products;
  if (train_set.empty()) throw ConfigError("train split is empty");

  ModelConfig mc = config.model;
  mc.encoder.d_tok = splits.train.d_tok;
  mc.encoder.d_img = splits.train.d_img;

  Rng root(config.seed);
  Rng init_rng = root.split(1);
  Rng order_rng = root.split(2);
  Rng pair_rng = root.split(3);

  RunArtifacts out;
  out.model = std::make_unique<HelpfulnessModel>(mc, init_rng);
  HelpfulnessModel& model = *out.model;
  Adam adam(model.parameters(), config.adam);

  std::vector<std::vector<int>> labels;
  for (const auto& p : train_set) labels.push_back(p.labels());
  const bool trainable = config.loss == LossKind::kListwise || std::any_of(labels.begin(), labels.end(), has_pair);

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Matrix> best = model.snapshot();
  double best_map = -std::numeric_limits<double>::infinity();
  std::size_t step = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    order_rng.shuffle(order.begin(), order.end());
    for (std::size_t start = 0, batch = 1; start < order.size(); start += config.batch_size, ++batch) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::size_t contributing = 0;
      for (std::size_t k = start; k < end; ++k) {
        contributing += config.loss == LossKind::kListwise || has_pair(labels[order[k]]);
      }
      if (contributing == 0) continue;

      adam.zero_grad();
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t idx = order[k];
        std::vector<objectives::IndexPair> pairs;
        if (config.loss == LossKind::kPairwise) {
          pairs = sample_pairs(labels[idx], pair_rng);
          if (pairs.empty()) continue;
        }
        Tape tape;
        Var s = model.scores(tape, train_set[idx]);
        Var loss = config.loss == LossKind::kListwise ? objectives::listwise_loss(s, labels[idx])
                                                      : objectives::pairwise_loss(s, labels[idx], pairs);
        if (!std::isfinite(loss.value()(0, 0))) {
          throw DivergenceError(epoch, batch, "non-finite loss on product " + train_set[idx].product_id);
        }
        tape.backward(loss, 1.0 / static_cast<double>(contributing));
      }
      const double lr = config.lr_schedule ? config.lr_schedule(step, config.lr) : config.lr;
      adam.step(lr);
      ++step;
    }

    const auto train_lists = score_dataset(model, splits.train);
    const auto val_lists = score_dataset(model, splits.val);
    EpochReport r;
    r.epoch = epoch;
    r.r_train = mean_loss(train_lists, config.loss);
    r.r_val = mean_loss(val_lists, config.loss);
    r.val = evaluate(val_lists, config.map_tau);
    if (trainable && !std::isfinite(r.r_train)) throw DivergenceError(epoch, 0, "non-finite training loss");
    out.reports.push_back(r);
    if (on_epoch) on_epoch(r);

    if (std::isnan(r.val.map) || r.val.map > best_map) {
      best_map = std::isnan(r.val.map) ? best_map : r.val.map;
      best = model.snapshot();
      out.best_epoch = epoch;
    }
  }

  if (out.reports.size() >= 2) {
    const auto curve = generalization_curve(out.reports);
    for (std::size_t k = 0; k < curve.size(); ++k) out.reports[k].e_hat = curve[k];
  }
  model.restore(best);
  out.train = evaluate(model, splits.train, config.map_tau);
  out.test = evaluate(model, splits.test, config.map_tau);
  out.delta_map = delta_map(out.train.map, out.test.map);
  return out;
}

std::vector<double> generalization_curve(const std::vector<EpochReport>& reports) {
  if (reports.size() < 2) throw ConfigError("generalization curve needs at least 2 epochs");
  auto normalize = [&](auto field) {
    std::vector<double> v;
    for (const auto& r : reports) v.push_back(r.*field);
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double a = *lo, span = *hi - *lo;
    for (double& x : v) x = span > 0.0 ? (x - a) / span : 0.0;
    return v;
  };
  const auto train = normalize(&EpochReport::r_train);
  const auto val = normalize(&EpochReport::r_val);
  std::vector<double> out(reports.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = val[k] - train[k];
  return out;
}

double delta_map(double map_train, double map_test) { return std::abs(map_train - map_test); }

void write_report_csv(const std::vector<EpochReport>& reports, std::ostream& out) {
  using datagen::format_real;
  out << "epoch,R_train,R_val,E_hat,MAP,NDCG3,NDCG5\n";
  for (const auto& r : reports) {
    out << r.epoch << ',' << format_real(r.r_train, 10) << ',' << format_real(r.r_val, 10) << ','
        << format_real(r.e_hat, 10) << ',' << format_real(r.val.map, 10) << ',' << format_real(r.val.ndcg3, 10)
        << ',' << format_real(r.val.ndcg5, 10) << '\n';
  }
}

}  // namespace helprank::trainer
