#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "helprank/trainer/train.hpp"

namespace helprank::trainer {

struct Variant {
  std::string name;
  TrainConfig config;
};

/// fcnn hidden widths of the three baseline regressors.
std::vector<std::vector<std::size_t>> fcnn_baselines();

/// {tree, 3 fcnn} x {listwise, pairwise} x {LAN on, off}: 16 variants,
/// all sharing the base seed and every other setting.
std::vector<Variant> ablation_grid(const TrainConfig& base);
/// The base model plus every variant that differs from it on one axis.
std::vector<Variant> single_axis_variants(const TrainConfig& base);

struct AblationRow {
  std::string name;
  std::string regressor;
  LossKind loss;
  bool listwise_attention;
  Metrics val;
  Metrics test;
  double delta_map;
};

using VariantCallback = std::function<void(const AblationRow&)>;

std::vector<AblationRow> ablate(const datagen::Splits& splits, const std::vector<Variant>& variants,
                                const VariantCallback& on_row = {});

/// Header variant,regressor,loss,lan,MAP,NDCG3,NDCG5,test_MAP,test_NDCG3,test_NDCG5,delta_MAP
void write_ablation_csv(const std::vector<AblationRow>& rows, std::ostream& out);

}  // namespace helprank::trainer
