#include "helprank/trainer/ablate.hpp"

#include <ostream>

#include "helprank/datagen/jsonl.hpp"

namespace helprank::trainer {

std::vector<std::vector<std::size_t>> fcnn_baselines() { return {{8, 4, 2}, {32, 16, 8, 4, 2}, {32, 32, 32, 32}}; }

namespace {

std::string variant_name(const TrainConfig& c) {
  return c.model.regressor_name() + "/" + to_string(c.loss) + "/" + (c.model.listwise_attention ? "lan" : "nolan");
}

Variant make(TrainConfig c) { return {variant_name(c), std::move(c)}; }

std::vector<TrainConfig> regressors(const TrainConfig& base) {
  std::vector<TrainConfig> out;
  TrainConfig tree = base;
  tree.model.regressor = RegressorKind::kTree;
  out.push_back(tree);
  for (const auto& hidden : fcnn_baselines()) {
    TrainConfig f = base;
    f.model.regressor = RegressorKind::kFcnn;
    f.model.fcnn_hidden = hidden;
    out.push_back(f);
  }
  return out;
}

}  // namespace

std::vector<Variant> ablation_grid(const TrainConfig& base) {
  std::vector<Variant> out;
  for (const TrainConfig& r : regressors(base)) {
    for (LossKind loss : {LossKind::kListwise, LossKind::kPairwise}) {
      for (bool lan : {true, false}) {
        TrainConfig c = r;
        c.loss = loss;
        c.model.listwise_attention = lan;
        out.push_back(make(c));
      }
    }
  }
  return out;
}

std::vector<Variant> single_axis_variants(const TrainConfig& base) {
  std::vector<Variant> out;
  TrainConfig full = base;
  full.model.regressor = RegressorKind::kTree;
  full.loss = LossKind::kListwise;
  full.model.listwise_attention = true;
  out.push_back(make(full));
  for (const auto& hidden : fcnn_baselines()) {
    TrainConfig c = full;
    c.model.regressor = RegressorKind::kFcnn;
    c.model.fcnn_hidden = hidden;
    out.push_back(make(c));
  }
  TrainConfig pair = full;
  pair.loss = LossKind::kPairwise;
  out.push_back(make(pair));
  TrainConfig nolan = full;
  nolan.model.listwise_attention = false;
  out.push_back(make(nolan));
  return out;
}

std::vector<AblationRow> ablate(const datagen::Splits& splits, const std::vector<Variant>& variants,
                                const VariantCallback& on_row) {
  std::vector<AblationRow> rows;
  for (const Variant& v : variants) {
    RunArtifacts run = train(splits, v.config);
    const Metrics val = evaluate(*run.model, splits.val, v.config.map_tau);
    rows.push_back({v.name, v.config.model.regressor_name(), v.config.loss, v.config.model.listwise_attention, val,
                    run.test, run.delta_map});
    if (on_row) on_row(rows.back());
  }
  return rows;
}

void write_ablation_csv(const std::vector<AblationRow>& rows, std::ostream& out) {
  using datagen::format_real;
  out << "variant,regressor,loss,lan,MAP,NDCG3,NDCG5,test_MAP,test_NDCG3,test_NDCG5,delta_MAP\n";
  for (const auto& r : rows) {
    out << r.name << ',' << r.regressor << ',' << to_string(r.loss) << ',' << (r.listwise_attention ? "on" : "off")
        << ',' << format_real(r.val.map, 10) << ',' << format_real(r.val.ndcg3, 10) << ','
        << format_real(r.val.ndcg5, 10) << ',' << format_real(r.test.map, 10) << ','
        << format_real(r.test.ndcg3, 10) << ',' << format_real(r.test.ndcg5, 10) << ','
        << format_real(r.delta_map, 10) << '\n';
  }
}

}  // namespace helprank::trainer
