#include "helprank/datagen/jsonl.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "helprank/errors.hpp"

namespace helprank::datagen {

using nlohmann::json;

std::string format_real(double v, int significant_digits) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, significant_digits);
  return std::string(buf, res.ptr);
}

namespace {

void write_string(std::ostream& out, const std::string& s) { out << json(s).dump(); }

void write_rows(std::ostream& out, const Matrix& m) {
  out << '[';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (i) out << ',';
    out << '[';
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_real(m(i, j));
    }
    out << ']';
  }
  out << ']';
}

const json& field(const json& obj, const char* name, std::size_t line) {
  auto it = obj.find(name);
  if (it == obj.end()) throw SchemaError("line " + std::to_string(line) + ": missing field \"" + name + "\"");
  return *it;
}

Matrix read_rows(const json& j, const char* name, std::size_t line) {
  const std::string at = "line " + std::to_string(line) + ": field \"" + name + "\"";
  if (!j.is_array()) throw SchemaError(at + " must be an array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = rows ? j.front().size() : 0;
  std::vector<double> data;
  data.reserve(rows * cols);
  for (const auto& row : j) {
    if (!row.is_array()) throw SchemaError(at + " must be an array of rows");
    if (row.size() != cols) throw SchemaError(at + " has rows of different widths");
    for (const auto& v : row) {
      if (!v.is_number()) throw SchemaError(at + " holds a non-numeric entry");
      data.push_back(v.get<double>());
    }
  }
  return Matrix(rows, cols, std::move(data));
}

std::string read_string(const json& j, const char* name, std::size_t line) {
  if (!j.is_string()) throw SchemaError("line " + std::to_string(line) + ": field \"" + name + "\" must be a string");
  return j.get<std::string>();
}

std::int64_t read_int(const json& j, const char* name, std::size_t line) {
  if (!j.is_number_integer()) {
    throw SchemaError("line " + std::to_string(line) + ": field \"" + name + "\" must be an integer");
  }
  return j.get<std::int64_t>();
}

}  // namespace

void write_jsonl(const Dataset& dataset, std::ostream& out) {
  for (const auto& p : dataset.products) {
    out << "{\"product_id\":";
    write_string(out, p.product_id);
    out << ",\"text_tokens\":";
    write_rows(out, p.text_tokens);
    out << ",\"image_regions\":";
    write_rows(out, p.image_regions);
    out << ",\"reviews\":[";
    for (std::size_t j = 0; j < p.reviews.size(); ++j) {
      const auto& r = p.reviews[j];
      if (j) out << ',';
      out << "{\"review_id\":";
      write_string(out, r.review_id);
      out << ",\"text_tokens\":";
      write_rows(out, r.text_tokens);
      out << ",\"image_regions\":";
      write_rows(out, r.image_regions);
      out << ",\"votes\":" << r.votes << ",\"label\":" << r.label << '}';
    }
    out << "]}\n";
  }
}

void write_jsonl(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_jsonl(dataset, out);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

Dataset read_jsonl(std::istream& in, SplitTag tag) {
  Dataset ds;
  ds.split_tag = tag;
  std::string text;
  std::size_t line = 0;
  bool dims_known = false;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') throw ParseError(line, "CRLF line ending (expected LF)");
    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(line, std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(line, "expected a JSON object");

    ProductRecord p;
    p.product_id = read_string(field(obj, "product_id", line), "product_id", line);
    p.text_tokens = read_rows(field(obj, "text_tokens", line), "text_tokens", line);
    p.image_regions = read_rows(field(obj, "image_regions", line), "image_regions", line);
    const json& reviews = field(obj, "reviews", line);
    if (!reviews.is_array()) throw SchemaError("line " + std::to_string(line) + ": field \"reviews\" must be an array");
    for (const auto& rj : reviews) {
      if (!rj.is_object()) throw SchemaError("line " + std::to_string(line) + ": review must be an object");
      ReviewRecord r;
      r.review_id = read_string(field(rj, "review_id", line), "review_id", line);
      r.text_tokens = read_rows(field(rj, "text_tokens", line), "text_tokens", line);
      r.image_regions = read_rows(field(rj, "image_regions", line), "image_regions", line);
      const auto votes = read_int(field(rj, "votes", line), "votes", line);
      if (votes < 0) throw SchemaError("line " + std::to_string(line) + ": field \"votes\" must be nonnegative");
      r.votes = static_cast<std::uint64_t>(votes);
      r.label = static_cast<int>(read_int(field(rj, "label", line), "label", line));
      p.reviews.push_back(std::move(r));
    }
    if (!dims_known) {
      ds.d_tok = p.text_tokens.cols();
      ds.d_img = p.image_regions.cols();
      dims_known = true;
    }
    validate(p, ds.d_tok, ds.d_img, "line " + std::to_string(line) + ": ");
    ds.products.push_back(std::move(p));
  }
  return ds;
}

Dataset read_jsonl(const std::filesystem::path& path, SplitTag tag) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_jsonl(in, tag);
}

}  // namespace helprank::datagen
