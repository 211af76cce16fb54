#include "helprank/encoder/encoder.hpp"

#include "helprank/errors.hpp"
#include "helprank/numkernel/ops.hpp"

namespace helprank::encoder {

using numkernel::Matrix;
namespace nk = numkernel;

void EncoderConfig::validate() const {
  if (d < 1) throw ConfigError("hidden size d must be positive");
  if (d_tok < 1 || d_img < 1) throw ConfigError("d_tok and d_img must be positive");
  if (kernel < 1 || kernel % 2 == 0) throw ConfigError("conv kernel must be odd");
}

Projection::Projection(std::size_t d_in, std::size_t d_out, Rng& rng)
    : weight(nk::uniform_fan_in(d_in, d_out, rng)), bias(Matrix(1, d_out)) {}

EncoderParams::EncoderParams(const EncoderConfig& c, Rng& rng)
    : text_product(c.d_tok, c.d, rng),
      text_review(c.d_tok, c.d, rng),
      image_product(c.d_img, c.d, rng),
      image_review(c.d_img, c.d, rng),
      visual_product(c.d, c.d, rng),
      visual_review(c.d, c.d, rng),
      intra_text(c.d, c.d, rng),
      intra_image(c.d, c.d, rng),
      conv_filters(nk::uniform_fan_in(c.kernel * c.d, c.d, rng)),
      conv_bias(Matrix(1, c.d)),
      pt_ri(c.d, c.d, rng),
      pi_rt(c.d, c.d, rng),
      pt_pi(c.d, c.d, rng),
      rt_ri(c.d, c.d, rng),
      listwise(c.z_dim(), c.z_dim(), rng) {}

std::vector<std::pair<std::string, Parameter*>> EncoderParams::named_parameters() {
  std::vector<std::pair<std::string, Parameter*>> out;
  auto proj = [&](const std::string& name, Projection& p) {
    out.emplace_back(name + ".weight", &p.weight);
    out.emplace_back(name + ".bias", &p.bias);
  };
  auto attn = [&](const std::string& name, AttentionParams& a) {
    out.emplace_back(name + ".query", &a.query);
    out.emplace_back(name + ".key", &a.key);
    out.emplace_back(name + ".value", &a.value);
  };
  proj("encoder.text_product", text_product);
  proj("encoder.text_review", text_review);
  proj("encoder.image_product", image_product);
  proj("encoder.image_review", image_review);
  attn("encoder.visual_product", visual_product);
  attn("encoder.visual_review", visual_review);
  attn("encoder.intra_text", intra_text);
  attn("encoder.intra_image", intra_image);
  out.emplace_back("encoder.conv.filters", &conv_filters);
  out.emplace_back("encoder.conv.bias", &conv_bias);
  attn("encoder.pt_ri", pt_ri);
  attn("encoder.pi_rt", pi_rt);
  attn("encoder.pt_pi", pt_pi);
  attn("encoder.rt_ri", rt_ri);
  attn("encoder.listwise", listwise);
  return out;
}

Var encode_text(Var tokens, Projection& proj) {
  if (tokens.rows() < 1) throw DimensionError("encode_text: empty token sequence");
  if (tokens.cols() != proj.weight.value.rows()) {
    throw DimensionError("encode_text: tokens " + tokens.value().shape_string() + " vs projection " +
                         proj.weight.value.shape_string());
  }
  Tape& t = tokens.tape();
  return nk::affine(tokens, t.parameter(proj.weight), t.parameter(proj.bias));
}

Var encode_image(Var regions, Projection& proj, AttentionParams& attn) {
  if (regions.rows() < 1) throw DimensionError("encode_image: no regions");
  if (regions.cols() != proj.weight.value.rows()) {
    throw DimensionError("encode_image: regions " + regions.value().shape_string() + " vs projection " +
                         proj.weight.value.shape_string());
  }
  Tape& t = regions.tape();
  return nk::self_attention(nk::affine(regions, t.parameter(proj.weight), t.parameter(proj.bias)), attn);
}

Var pool(Var x, Pooling pooling) {
  return pooling == Pooling::kMax ? nk::max_pool_rows(x) : nk::mean_pool_rows(x);
}

namespace {

void require_width(Var v, std::size_t d, const char* op) {
  if (v.cols() != d) {
    throw DimensionError(std::string(op) + ": expected width " + std::to_string(d) + ", got " +
                         v.value().shape_string());
  }
}

// Pool(SelfAttn([a; b]))
Var pooled_pair(Var a, Var b, AttentionParams& attn, const EncoderConfig& config) {
  return pool(nk::self_attention(nk::concat_rows(a, b), attn), config.pooling);
}

}  // namespace

Var intra_modal(Var hp, Var hr, Var vp, Var vr, EncoderParams& params, const EncoderConfig& config) {
  for (Var v : {hp, hr, vp, vr}) require_width(v, config.d, "intra_modal");
  Tape& t = hp.tape();
  Var h = nk::self_attention(nk::concat_rows(hp, hr), params.intra_text);
  Var v = nk::self_attention(nk::concat_rows(vp, vr), params.intra_image);
  Var conv = nk::conv1d(nk::concat_rows(h, v), t.parameter(params.conv_filters), t.parameter(params.conv_bias),
                        config.kernel);
  return pool(conv, config.pooling);
}

Var inter_modal(Var hp, Var vr, Var vp, Var hr, EncoderParams& params, const EncoderConfig& config) {
  for (Var v : {hp, hr, vp, vr}) require_width(v, config.d, "inter_modal");
  return nk::concat_cols(pooled_pair(hp, vr, params.pt_ri, config), pooled_pair(vp, hr, params.pi_rt, config));
}

Var product_entity(Var hp, Var vp, EncoderParams& params, const EncoderConfig& config) {
  require_width(hp, config.d, "intra_entity");
  require_width(vp, config.d, "intra_entity");
  return pooled_pair(hp, vp, params.pt_pi, config);
}

Var intra_entity(Var z_pt_pi, Var hr, Var vr, EncoderParams& params, const EncoderConfig& config) {
  require_width(z_pt_pi, config.d, "intra_entity");
  require_width(hr, config.d, "intra_entity");
  require_width(vr, config.d, "intra_entity");
  return nk::concat_cols(z_pt_pi, pooled_pair(hr, vr, params.rt_ri, config));
}

Var intra_entity(Var hp, Var vp, Var hr, Var vr, EncoderParams& params, const EncoderConfig& config) {
  return intra_entity(product_entity(hp, vp, params, config), hr, vr, params, config);
}

Var fuse(Var intra_m, Var inter_m, Var intra_r) {
  const std::size_t d = intra_m.cols();
  if (intra_m.rows() != 1 || inter_m.cols() != 2 * d || intra_r.cols() != 2 * d) {
    throw DimensionError("fuse: expected widths d, 2d, 2d; got " + intra_m.value().shape_string() + ", " +
                         inter_m.value().shape_string() + ", " + intra_r.value().shape_string());
  }
  return nk::concat_cols({intra_m, inter_m, intra_r});
}

Var listwise_attention(Var z_rows, EncoderParams& params) {
  if (z_rows.rows() < 1) throw DimensionError("listwise_attention: empty review list");
  return nk::self_attention(z_rows, params.listwise);
}

Var listwise_attention(const std::vector<Var>& z, EncoderParams& params) {
  if (z.empty()) throw DimensionError("listwise_attention: empty review list");
  return listwise_attention(nk::concat_rows(z), params);
}

Encoder::Encoder(const EncoderConfig& config, Rng& rng) : config_(config), params_((config.validate(), config), rng) {}

EncodedProduct Encoder::encode(Tape& tape, const datagen::ProductRecord& product, bool use_listwise_attention) {
  if (product.reviews.empty()) throw DimensionError("encode: product " + product.product_id + " has no reviews");
  Var hp = encode_text(tape.constant(product.text_tokens), params_.text_product);
  Var vp = encode_image(tape.constant(product.image_regions), params_.image_product, params_.visual_product);
  Var z_pt_pi = product_entity(hp, vp, params_, config_);

  std::vector<Var> rows;
  rows.reserve(product.reviews.size());
  for (const auto& review : product.reviews) {
    Var hr = encode_text(tape.constant(review.text_tokens), params_.text_review);
    Var vr = encode_image(tape.constant(review.image_regions), params_.image_review, params_.visual_review);
    rows.push_back(fuse(intra_modal(hp, hr, vp, vr, params_, config_), inter_modal(hp, vr, vp, hr, params_, config_),
                        intra_entity(z_pt_pi, hr, vr, params_, config_)));
  }
  Var coherence = nk::concat_rows(rows);
  return {coherence, use_listwise_attention ? listwise_attention(coherence, params_) : coherence};
}

}  // namespace helprank::encoder
