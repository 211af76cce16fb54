#include "helprank/trainer/model.hpp"

#include "helprank/errors.hpp"

namespace helprank::trainer {

void ModelConfig::validate() const {
  encoder.validate();
  if (regressor == RegressorKind::kTree) {
    regressor::tree_shape(tree_depth);
    if (tree_ensemble < 1) throw ConfigError("tree_ensemble must be at least 1");
  }
  for (std::size_t w : fcnn_hidden) {
    if (w < 1) throw ConfigError("fcnn hidden widths must be positive");
  }
}

std::string ModelConfig::regressor_name() const {
  if (regressor == RegressorKind::kTree) {
    std::string s = "tree(" + std::to_string(tree_depth) + ")";
    if (tree_ensemble > 1) s += "x" + std::to_string(tree_ensemble);
    return s;
  }
  std::string s = "fcnn(" + std::to_string(encoder.z_dim());
  for (std::size_t w : fcnn_hidden) s += "-" + std::to_string(w);
  return s + "-1)";
}

HelpfulnessModel::HelpfulnessModel(const ModelConfig& config, Rng& rng) : config_(config) {
  config_.validate();
  Rng encoder_rng = rng.split(0);
  Rng regressor_rng = rng.split(1);
  encoder_ = encoder::Encoder(config_.encoder, encoder_rng);
  if (config_.regressor == RegressorKind::kTree) {
    scorer_ = std::make_unique<regressor::SoftTree>(config_.encoder.z_dim(), config_.tree_depth, regressor_rng,
                                                     config_.tree_ensemble);
  } else {
    std::vector<std::size_t> widths{config_.encoder.z_dim()};
    widths.insert(widths.end(), config_.fcnn_hidden.begin(), config_.fcnn_hidden.end());
    widths.push_back(1);
    scorer_ = std::make_unique<regressor::Fcnn>(widths, regressor_rng);
  }
}

regressor::SoftTree* HelpfulnessModel::tree() { return dynamic_cast<regressor::SoftTree*>(scorer_.get()); }

Var HelpfulnessModel::scores(Tape& tape, const datagen::ProductRecord& product) {
  return scorer_->score(encoder_.encode(tape, product, config_.listwise_attention).context);
}

std::vector<double> HelpfulnessModel::score(const datagen::ProductRecord& product) {
  Tape tape;
  return scores(tape, product).value().values();
}

Matrix HelpfulnessModel::context(const datagen::ProductRecord& product) {
  Tape tape;
  return encoder_.encode(tape, product, config_.listwise_attention).context.value();
}

std::vector<std::pair<std::string, Parameter*>> HelpfulnessModel::named_parameters() {
  auto out = encoder_.params().named_parameters();
  if (!config_.listwise_attention) {
    std::erase_if(out, [](const auto& p) { return p.first.rfind("encoder.listwise.", 0) == 0; });
  }
  for (auto& p : scorer_->named_parameters()) out.emplace_back("regressor." + p.first, p.second);
  return out;
}

std::vector<Parameter*> HelpfulnessModel::parameters() {
  std::vector<Parameter*> out;
  for (auto& [name, p] : named_parameters()) out.push_back(p);
  return out;
}

std::vector<Matrix> HelpfulnessModel::snapshot() {
  std::vector<Matrix> out;
  for (Parameter* p : parameters()) out.push_back(p->value);
  return out;
}

void HelpfulnessModel::restore(const std::vector<Matrix>& values) {
  auto params = parameters();
  if (values.size() != params.size()) throw DimensionError("restore: parameter count mismatch");
  for (std::size_t k = 0; k < params.size(); ++k) {
    numkernel::require_same_shape(params[k]->value, values[k], "restore");
    params[k]->value = values[k];
  }
}

}  // namespace helprank::trainer
