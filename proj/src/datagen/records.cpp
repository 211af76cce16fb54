#include "helprank/datagen/records.hpp"

#include <set>

#include "helprank/errors.hpp"

namespace helprank::datagen {

int votes_to_label(std::uint64_t votes) {
  if (votes < 2) return 0;
  if (votes < 4) return 1;
  if (votes < 8) return 2;
  if (votes < 16) return 3;
  return 4;
}

std::vector<int> ProductRecord::labels() const {
  std::vector<int> out;
  out.reserve(reviews.size());
  for (const auto& r : reviews) out.push_back(r.label);
  return out;
}

const char* to_string(SplitTag tag) {
  switch (tag) {
    case SplitTag::kTrain: return "train";
    case SplitTag::kVal: return "val";
    case SplitTag::kTest: return "test";
    case SplitTag::kUnsplit: break;
  }
  return "unsplit";
}

std::size_t Dataset::review_count() const {
  std::size_t n = 0;
  for (const auto& p : products) n += p.reviews.size();
  return n;
}

namespace {

void check_sequence(const Matrix& m, std::size_t dim, const std::string& field, const std::string& where) {
  if (m.rows() < 1) throw SchemaError(where + field + ": sequence must have at least one row");
  if (m.cols() != dim) {
    throw SchemaError(where + field + ": width " + std::to_string(m.cols()) + " does not match " +
                      (field.find("text") != std::string::npos ? "d_tok" : "d_img") + " = " +
                      std::to_string(dim));
  }
  if (!m.all_finite()) throw SchemaError(where + field + ": non-finite value");
}

}  // namespace

void validate(const ProductRecord& product, std::size_t d_tok, std::size_t d_img, const std::string& where) {
  const std::string at = where + "product " + product.product_id + ": ";
  check_sequence(product.text_tokens, d_tok, "text_tokens", at);
  check_sequence(product.image_regions, d_img, "image_regions", at);
  if (product.reviews.size() < 2) throw SchemaError(at + "reviews: need at least 2 reviews");
  std::set<std::string> ids;
  for (const auto& r : product.reviews) {
    const std::string rat = at + "review " + r.review_id + ": ";
    if (!ids.insert(r.review_id).second) throw SchemaError(at + "review_id: duplicate " + r.review_id);
    check_sequence(r.text_tokens, d_tok, "text_tokens", rat);
    check_sequence(r.image_regions, d_img, "image_regions", rat);
    if (r.label < 0 || r.label >= kNumLabels) throw SchemaError(rat + "label: outside 0..4");
    if (r.label != votes_to_label(r.votes)) {
      throw SchemaError(rat + "label: " + std::to_string(r.label) + " disagrees with votes " +
                        std::to_string(r.votes));
    }
  }
}

void validate(const Dataset& dataset) {
  for (const auto& p : dataset.products) validate(p, dataset.d_tok, dataset.d_img);
}

}  // namespace helprank::datagen
