#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "helprank/datagen/records.hpp"
#include "helprank/encoder/encoder.hpp"
#include "helprank/regressor/regressor.hpp"

namespace helprank::trainer {

using numkernel::Matrix;
using numkernel::Parameter;
using numkernel::Rng;
using numkernel::Tape;
using numkernel::Var;

enum class RegressorKind { kTree, kFcnn };

struct ModelConfig {
  encoder::EncoderConfig encoder;
  RegressorKind regressor = RegressorKind::kTree;
  std::size_t tree_depth = 3;
  std::size_t tree_ensemble = 1;
  std::vector<std::size_t> fcnn_hidden{8, 4, 2};  // widths between 5d and 1
  bool listwise_attention = true;

  void validate() const;
  /// e.g. "tree(3)" or "fcnn(80-8-4-2-1)"
  std::string regressor_name() const;
};

/// Encoder, optional listwise attention, and score regressor.
class HelpfulnessModel {
 public:
  HelpfulnessModel(const ModelConfig& config, Rng& rng);

  const ModelConfig& config() const { return config_; }
  encoder::Encoder& encoder() { return encoder_; }
  regressor::Scorer& scorer() { return *scorer_; }
  /// nullptr unless the regressor is a tree.
  regressor::SoftTree* tree();

  /// (|R| x 1) scores, one per review in order.
  Var scores(Tape& tape, const datagen::ProductRecord& product);
  std::vector<double> score(const datagen::ProductRecord& product);
  /// (|R| x 5d) list-contextualized coherence vectors.
  Matrix context(const datagen::ProductRecord& product);

  /// Encoder parameters first, then the regressor's; names are unique.
  std::vector<std::pair<std::string, Parameter*>> named_parameters();
  std::vector<Parameter*> parameters();

  std::vector<Matrix> snapshot();
  void restore(const std::vector<Matrix>& values);

 private:
  ModelConfig config_;
  encoder::Encoder encoder_;
  std::unique_ptr<regressor::Scorer> scorer_;
};

}  // namespace helprank::trainer
