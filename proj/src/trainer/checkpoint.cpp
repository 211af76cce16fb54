#include "helprank/trainer/checkpoint.hpp"

#include <fstream>
#include <iterator>
#include <map>
#include <json.hpp>
#include <ostream>

#include "helprank/datagen/jsonl.hpp"
#include "helprank/errors.hpp"

namespace helprank::trainer {

using datagen::format_real;
using nlohmann::json;

namespace {

const char* kFormat = "helprank-checkpoint";

std::string quoted(const std::string& s) { return json(s).dump(); }

}  // namespace

void write_checkpoint(HelpfulnessModel& model, std::uint64_t seed, std::ostream& out) {
  const ModelConfig& c = model.config();
  out << "{\"format\":" << quoted(kFormat) << ",\"version\":1,\"seed\":" << seed << ",\n";
  out << "\"model\":{\"d\":" << c.encoder.d << ",\"d_tok\":" << c.encoder.d_tok << ",\"d_img\":" << c.encoder.d_img
      << ",\"kernel\":" << c.encoder.kernel << ",\"pooling\":"
      << quoted(c.encoder.pooling == encoder::Pooling::kMax ? "max" : "mean") << ",\"regressor\":"
      << quoted(c.regressor == RegressorKind::kTree ? "tree" : "fcnn") << ",\"tree_depth\":" << c.tree_depth
      << ",\"tree_ensemble\":" << c.tree_ensemble << ",\"fcnn_hidden\":[";
  for (std::size_t k = 0; k < c.fcnn_hidden.size(); ++k) out << (k ? "," : "") << c.fcnn_hidden[k];
  out << "],\"listwise_attention\":" << (c.listwise_attention ? "true" : "false") << "},\n\"parameters\":[";
  bool first = true;
  for (auto& [name, p] : model.named_parameters()) {
    out << (first ? "\n" : ",\n") << "{\"name\":" << quoted(name) << ",\"rows\":" << p->value.rows()
        << ",\"cols\":" << p->value.cols() << ",\"values\":[";
    const auto v = p->value.values();
    for (std::size_t k = 0; k < v.size(); ++k) out << (k ? "," : "") << format_real(v[k]);
    out << "]}";
    first = false;
  }
  out << "\n]}\n";
}

void write_checkpoint(HelpfulnessModel& model, std::uint64_t seed, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_checkpoint(model, seed, out);
}

LoadedCheckpoint read_checkpoint(std::istream& in) {
  json j;
  try {
    j = json::parse(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kFormat || j.at("version").get<int>() != 1) {
      throw SchemaError("unsupported checkpoint format");
    }
    const json& m = j.at("model");
    ModelConfig c;
    c.encoder.d = m.at("d").get<std::size_t>();
    c.encoder.d_tok = m.at("d_tok").get<std::size_t>();
    c.encoder.d_img = m.at("d_img").get<std::size_t>();
    c.encoder.kernel = m.at("kernel").get<std::size_t>();
    const auto pooling = m.at("pooling").get<std::string>();
    if (pooling != "mean" && pooling != "max") throw SchemaError("checkpoint pooling must be mean or max");
    c.encoder.pooling = pooling == "max" ? encoder::Pooling::kMax : encoder::Pooling::kMean;
    const auto reg = m.at("regressor").get<std::string>();
    if (reg != "tree" && reg != "fcnn") throw SchemaError("checkpoint regressor must be tree or fcnn");
    c.regressor = reg == "tree" ? RegressorKind::kTree : RegressorKind::kFcnn;
    c.tree_depth = m.at("tree_depth").get<std::size_t>();
    c.tree_ensemble = m.at("tree_ensemble").get<std::size_t>();
    c.fcnn_hidden = m.at("fcnn_hidden").get<std::vector<std::size_t>>();
    c.listwise_attention = m.at("listwise_attention").get<bool>();

    LoadedCheckpoint out;
    out.seed = j.at("seed").get<std::uint64_t>();
    Rng rng(out.seed);
    out.model = std::make_unique<HelpfulnessModel>(c, rng);

    std::map<std::string, const json*> stored;
    for (const json& p : j.at("parameters")) stored[p.at("name").get<std::string>()] = &p;
    auto params = out.model->named_parameters();
    if (stored.size() != params.size()) {
      throw SchemaError("checkpoint has " + std::to_string(stored.size()) + " parameters, model expects " +
                        std::to_string(params.size()));
    }
    for (auto& [name, param] : params) {
      auto it = stored.find(name);
      if (it == stored.end()) throw SchemaError("checkpoint is missing parameter " + name);
      const json& p = *it->second;
      const auto rows = p.at("rows").get<std::size_t>(), cols = p.at("cols").get<std::size_t>();
      const auto values = p.at("values").get<std::vector<double>>();
      if (rows != param->value.rows() || cols != param->value.cols() || values.size() != rows * cols) {
        throw SchemaError("parameter " + name + " has shape (" + std::to_string(rows) + "x" + std::to_string(cols) +
                          "), model expects " + param->value.shape_string());
      }
      std::copy(values.begin(), values.end(), param->value.data().begin());
    }
    return out;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw SchemaError(std::string("checkpoint model is invalid: ") + e.what());
  }
}

LoadedCheckpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return read_checkpoint(in);
}

}  // namespace helprank::trainer
