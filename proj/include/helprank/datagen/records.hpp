#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "helprank/numkernel/matrix.hpp"

namespace helprank::datagen {

using numkernel::Matrix;

inline constexpr int kNumLabels = 5;

/// Helpfulness bucket of a vote count: [0,2) -> 0, [2,4) -> 1, [4,8) -> 2,
/// [8,16) -> 3, [16, inf) -> 4. Zero votes share the lowest bucket.
int votes_to_label(std::uint64_t votes);

struct ReviewRecord {
  std::string review_id;
  Matrix text_tokens;    // (tokens x d_tok)
  Matrix image_regions;  // (regions x d_img)
  std::uint64_t votes = 0;
  int label = 0;

  friend bool operator==(const ReviewRecord&, const ReviewRecord&) = default;
};

struct ProductRecord {
  std::string product_id;
  Matrix text_tokens;
  Matrix image_regions;
  std::vector<ReviewRecord> reviews;

  std::vector<int> labels() const;

  friend bool operator==(const ProductRecord&, const ProductRecord&) = default;
};

enum class SplitTag { kUnsplit, kTrain, kVal, kTest };

const char* to_string(SplitTag tag);

struct Dataset {
  std::vector<ProductRecord> products;
  std::size_t d_tok = 0;
  std::size_t d_img = 0;
  SplitTag split_tag = SplitTag::kUnsplit;

  std::size_t review_count() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Throws SchemaError naming the violated field. `where` prefixes messages.
void validate(const ProductRecord& product, std::size_t d_tok, std::size_t d_img,
              const std::string& where = "");
void validate(const Dataset& dataset);

}  // namespace helprank::datagen
