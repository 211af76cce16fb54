#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "helprank/datagen/records.hpp"
#include "helprank/numkernel/attention.hpp"
#include "helprank/numkernel/rng.hpp"
#include "helprank/numkernel/tape.hpp"

namespace helprank::encoder {

using numkernel::AttentionParams;
using numkernel::Parameter;
using numkernel::Rng;
using numkernel::Tape;
using numkernel::Var;

enum class Pooling { kMean, kMax };

struct EncoderConfig {
  std::size_t d = 16;  // hidden size; coherence vectors are 5d wide
  std::size_t d_tok = 32;
  std::size_t d_img = 32;
  std::size_t kernel = 3;
  Pooling pooling = Pooling::kMean;

  std::size_t z_dim() const { return 5 * d; }
  void validate() const;
};

/// Per-token affine map tokens * W + b.
struct Projection {
  Parameter weight;
  Parameter bias;

  Projection() = default;
  Projection(std::size_t d_in, std::size_t d_out, Rng& rng);
};

struct EncoderParams {
  Projection text_product;
  Projection text_review;
  Projection image_product;
  Projection image_review;
  AttentionParams visual_product;
  AttentionParams visual_review;
  AttentionParams intra_text;   // [H^p; H^r]
  AttentionParams intra_image;  // [V^p; V^r]
  Parameter conv_filters;       // (kernel*d x d)
  Parameter conv_bias;          // (1 x d)
  AttentionParams pt_ri;        // [H^p; V^r]
  AttentionParams pi_rt;        // [V^p; H^r]
  AttentionParams pt_pi;        // [H^p; V^p]
  AttentionParams rt_ri;        // [H^r; V^r]
  AttentionParams listwise;     // over the review list, 5d -> 5d

  EncoderParams() = default;
  /// Uniform(+-1/sqrt(fan_in)) weights, zero biases, drawn in member order.
  EncoderParams(const EncoderConfig& config, Rng& rng);

  std::vector<std::pair<std::string, Parameter*>> named_parameters();
};

// Stage functions. All return row-major activations on the input's tape.

/// H = tokens * W + b, one row per token.
Var encode_text(Var tokens, Projection& proj);
/// V = SelfAttn(regions * W + b).
Var encode_image(Var regions, Projection& proj, AttentionParams& attn);

Var pool(Var x, Pooling pooling);

/// Pool(CNN([SelfAttn([Hp; Hr]); SelfAttn([Vp; Vr])])) -> (1 x d)
Var intra_modal(Var hp, Var hr, Var vp, Var vr, EncoderParams& params, const EncoderConfig& config);
/// [Pool(SelfAttn([Hp; Vr])), Pool(SelfAttn([Vp; Hr]))] -> (1 x 2d)
Var inter_modal(Var hp, Var vr, Var vp, Var hr, EncoderParams& params, const EncoderConfig& config);
/// Pool(SelfAttn([Hp; Vp])) -> (1 x d); shared by every review of a product.
Var product_entity(Var hp, Var vp, EncoderParams& params, const EncoderConfig& config);
/// [product branch, Pool(SelfAttn([Hr; Vr]))] -> (1 x 2d)
Var intra_entity(Var z_pt_pi, Var hr, Var vr, EncoderParams& params, const EncoderConfig& config);
Var intra_entity(Var hp, Var vp, Var hr, Var vr, EncoderParams& params, const EncoderConfig& config);
/// [z^intraM, z^interM, z^intraR] -> (1 x 5d)
Var fuse(Var intra_m, Var inter_m, Var intra_r);
/// Self-attention across reviews; rows in and out are in review order.
Var listwise_attention(Var z_rows, EncoderParams& params);
Var listwise_attention(const std::vector<Var>& z, EncoderParams& params);

struct EncodedProduct {
  Var coherence;  // (|R| x 5d), before listwise attention
  Var context;    // (|R| x 5d), after listwise attention (== coherence when off)
};

/// Full encoder for one product and its review list.
class Encoder {
 public:
  Encoder() = default;
  Encoder(const EncoderConfig& config, Rng& rng);

  const EncoderConfig& config() const { return config_; }
  EncoderParams& params() { return params_; }
  const EncoderParams& params() const { return params_; }

  EncodedProduct encode(Tape& tape, const datagen::ProductRecord& product, bool use_listwise_attention);

 private:
  EncoderConfig config_;
  EncoderParams params_;
};

}  // namespace helprank::encoder
