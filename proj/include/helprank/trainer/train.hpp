#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "helprank/datagen/split.hpp"
#include "helprank/objectives/objectives.hpp"
#include "helprank/trainer/adam.hpp"
#include "helprank/trainer/model.hpp"

namespace helprank::trainer {

enum class LossKind { kListwise, kPairwise };

std::string to_string(LossKind loss);

/// Learning rate at optimizer step t (0-based) given the base rate.
using LrSchedule = std::function<double(std::size_t step, double base_lr)>;

struct TrainConfig {
  ModelConfig model;
  LossKind loss = LossKind::kListwise;
  double lr = 1e-3;
  std::size_t batch_size = 32;
  std::size_t epochs = 30;
  std::uint64_t seed = 2023;
  AdamConfig adam;
  int map_tau = 1;
  LrSchedule lr_schedule;  // empty: constant lr

  void validate() const;
};

struct Metrics {
  double map = 0.0;
  double ndcg3 = 0.0;
  double ndcg5 = 0.0;
};

struct EpochReport {
  std::size_t epoch = 0;  // 1-based
  double r_train = 0.0;
  double r_val = 0.0;
  double e_hat = 0.0;  // filled once the run is complete
  Metrics val;
};

struct RunArtifacts {
  std::unique_ptr<HelpfulnessModel> model;  // best-val-MAP parameters
  std::vector<EpochReport> reports;
  std::size_t best_epoch = 0;  // 0: the initial model
  Metrics train;
  Metrics test;
  double delta_map = 0.0;
};

/// Scores every product of a split.
std::vector<objectives::ScoredList> score_dataset(HelpfulnessModel& model, const datagen::Dataset& data);
Metrics evaluate(HelpfulnessModel& model, const datagen::Dataset& data, int map_tau = 1);
Metrics evaluate(std::span<const objectives::ScoredList> lists, int map_tau = 1);

/// Mean per-product loss of the given kind. Pairwise uses the exact mean
/// hinge over all valid pairs and skips products without one.
double mean_loss(std::span<const objectives::ScoredList> lists, LossKind loss);

using EpochCallback = std::function<void(const EpochReport&)>;

/// Throws DivergenceError when a batch loss is not finite.
RunArtifacts train(const datagen::Splits& splits, const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Independently min-max normalizes R_train and R_val over the run and
/// returns their difference per epoch. A constant series normalizes to 0.
std::vector<double> generalization_curve(const std::vector<EpochReport>& reports);

double delta_map(double map_train, double map_test);

/// Header epoch,R_train,R_val,E_hat,MAP,NDCG3,NDCG5; 10 significant digits.
void write_report_csv(const std::vector<EpochReport>& reports, std::ostream& out);

}  // namespace helprank::trainer
