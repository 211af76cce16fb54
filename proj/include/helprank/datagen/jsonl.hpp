#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "helprank/datagen/records.hpp"

namespace helprank::datagen {

// One product per line:
// {"product_id": str, "text_tokens": [[f64...]...], "image_regions": [[...]...],
//  "reviews": [{"review_id": str, "text_tokens": [...], "image_regions": [...],
//               "votes": int, "label": int}, ...]}
// Reals are written with 17 significant digits, so reading back is exact.

void write_jsonl(const Dataset& dataset, std::ostream& out);
void write_jsonl(const Dataset& dataset, const std::filesystem::path& path);

/// Throws ParseError (with line number) for malformed JSON and SchemaError
/// for missing fields, wrong types or inconsistent dimensions.
Dataset read_jsonl(std::istream& in, SplitTag tag = SplitTag::kUnsplit);
Dataset read_jsonl(const std::filesystem::path& path, SplitTag tag = SplitTag::kUnsplit);

/// Equivalent of printf("%.*g"), independent of the C locale.
std::string format_real(double v, int significant_digits = 17);

}  // namespace helprank::datagen
