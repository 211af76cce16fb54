#include "helprank/cli/cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <json.hpp>
#include <ostream>
#include <set>
#include <sstream>

#include "helprank/datagen/jsonl.hpp"
#include "helprank/datagen/split.hpp"
#include "helprank/errors.hpp"
#include "helprank/theoria/theoria.hpp"
#include "helprank/trainer/ablate.hpp"
#include "helprank/trainer/checkpoint.hpp"

namespace helprank::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

const char* kSeedEnv = "HELPRANK_SEED";

std::uint64_t parse_seed(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    if (text.empty() || text[0] == '-') throw std::invalid_argument(text);
    v = std::stoull(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw ConfigError(what + " must be a nonnegative integer, got '" + text + "'");
  return v;
}

// Reads config values with errors that name the key.
class Reader {
 public:
  explicit Reader(const json& j) : j_(j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
  }

  template <typename T>
  void get(const std::string& key, T& target) {
    known_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
        if (!it->is_number_integer() || (it->is_number_integer() && it->template get<std::int64_t>() < 0 &&
                                         !it->is_number_unsigned())) {
          throw ConfigError("");
        }
      }
      if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
        if (!it->is_array()) throw ConfigError("");
        for (const auto& v : *it) {
          if (!v.is_number_unsigned()) throw ConfigError("");
        }
      }
      target = it->template get<T>();
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "' has the wrong type (" + expected<T>() + " expected)");
    }
  }

  std::string choice(const std::string& key, const std::string& current, std::initializer_list<const char*> allowed) {
    std::string value = current;
    get(key, value);
    for (const char* a : allowed) {
      if (value == a) return value;
    }
    std::string list;
    for (const char* a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
    throw ConfigError("config key '" + key + "' must be one of " + list + ", got '" + value + "'");
  }

  void reject_unknown() const {
    for (const auto& [key, value] : j_.items()) {
      if (!known_.count(key)) throw ConfigError("unknown config key '" + key + "'");
    }
  }

 private:
  template <typename T>
  static std::string expected() {
    if constexpr (std::is_same_v<T, bool>) return "true or false";
    else if constexpr (std::is_same_v<T, std::string>) return "string";
    else if constexpr (std::is_unsigned_v<T>) return "nonnegative integer";
    else if constexpr (std::is_integral_v<T>) return "integer";
    else if constexpr (std::is_floating_point_v<T>) return "number";
    else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) return "array of nonnegative integers";
    else return "array of numbers";
  }

  const json& j_;
  std::set<std::string> known_;
};

fs::path require_file(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw ConfigError("cannot read " + path.string() + ": no such file");
  return path;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

fs::path prepare_out_dir(const std::string& flag, RunConfig* config) {
  std::string dir = flag;
  if (dir.empty() && config) dir = config->out_dir;
  if (dir.empty()) throw ConfigError("no output directory: pass --out or set out_dir in the config");
  if (config) config->out_dir = dir;
  fs::create_directories(dir);
  return dir;
}

datagen::Dataset read_split(const fs::path& dir, const char* name, datagen::SplitTag tag) {
  return datagen::read_jsonl(require_file(dir / (std::string(name) + ".jsonl")), tag);
}

datagen::Splits read_splits(const fs::path& dir) {
  datagen::Splits s;
  s.train = read_split(dir, "train", datagen::SplitTag::kTrain);
  s.val = read_split(dir, "val", datagen::SplitTag::kVal);
  s.test = read_split(dir, "test", datagen::SplitTag::kTest);
  for (const auto* part : {&s.val, &s.test}) {
    if (part->products.empty()) continue;
    if (part->d_tok != s.train.d_tok) {
      throw SchemaError("d_tok: " + std::string(to_string(part->split_tag)) + " split has " +
                        std::to_string(part->d_tok) + ", train split has " + std::to_string(s.train.d_tok));
    }
    if (part->d_img != s.train.d_img) {
      throw SchemaError("d_img: " + std::string(to_string(part->split_tag)) + " split has " +
                        std::to_string(part->d_img) + ", train split has " + std::to_string(s.train.d_img));
    }
  }
  return s;
}

void require_dims(const datagen::Dataset& data, std::size_t d_tok, std::size_t d_img, const std::string& source) {
  if (data.products.empty()) return;
  if (data.d_tok != d_tok) {
    throw SchemaError("d_tok: dataset has " + std::to_string(data.d_tok) + ", " + source + " has " +
                      std::to_string(d_tok));
  }
  if (data.d_img != d_img) {
    throw SchemaError("d_img: dataset has " + std::to_string(data.d_img) + ", " + source + " has " +
                      std::to_string(d_img));
  }
}

void write_config(const RunConfig& config, const fs::path& dir, std::ostream& out) {
  const std::string text = resolved_config_json(config);
  open_out(dir / "config.json") << text << '\n';
  out << "config: " << ordered_json::parse(text).dump() << '\n';
}

// split,products,MAP,NDCG1,NDCG3,NDCG5
void write_metrics(trainer::HelpfulnessModel& model, const datagen::Splits& splits, int tau, objectives::Gain gain,
                   std::ostream& out) {
  using datagen::format_real;
  out << "split,products,MAP,NDCG1,NDCG3,NDCG5\n";
  for (const auto* part : {&splits.train, &splits.val, &splits.test}) {
    if (part->products.empty()) continue;
    const auto lists = trainer::score_dataset(model, *part);
    out << to_string(part->split_tag) << ',' << lists.size() << ','
        << format_real(objectives::mean_average_precision(lists, tau), 10);
    for (std::size_t n : {1, 3, 5}) out << ',' << format_real(objectives::mean_ndcg_at(lists, n, gain), 10);
    out << '\n';
  }
}

struct Flags {
  std::string config;
  std::string data;
  std::string out;
  std::string checkpoint;
  std::string split = "test";
  std::optional<std::uint64_t> seed;
  std::size_t trials = 1000;
  bool single_axis = false;
};

RunConfig config_from(const Flags& f) {
  RunConfig c = f.config.empty() ? RunConfig{} : load_run_config(require_file(f.config));
  c.seed = resolve_seed(f.seed, c.seed);
  c.gen.seed = c.seed;
  c.train.seed = c.seed;
  return c;
}

int cmd_gen(const Flags& f, std::ostream& out) {
  RunConfig c = config_from(f);
  out << "seed: " << c.seed << '\n';
  const fs::path dir = prepare_out_dir(f.out, &c);
  const datagen::Dataset all = datagen::generate(c.gen);
  const datagen::Splits s = datagen::split(all, c.split_ratios, c.seed);
  datagen::write_jsonl(s.train, dir / "train.jsonl");
  datagen::write_jsonl(s.val, dir / "val.jsonl");
  datagen::write_jsonl(s.test, dir / "test.jsonl");
  write_config(c, dir, out);
  out << "wrote " << s.train.products.size() << '/' << s.val.products.size() << '/' << s.test.products.size()
      << " train/val/test products to " << dir.string() << '\n';
  return 0;
}

int cmd_train(const Flags& f, std::ostream& out) {
  RunConfig c = config_from(f);
  out << "seed: " << c.seed << '\n';
  c.train.validate();
  const datagen::Splits s = read_splits(f.data);
  require_dims(s.train, c.gen.d_tok, c.gen.d_img, "config");
  const fs::path dir = prepare_out_dir(f.out, &c);
  write_config(c, dir, out);

  trainer::RunArtifacts run = trainer::train(s, c.train, [&](const trainer::EpochReport& r) {
    out << "epoch " << r.epoch << " R_train " << datagen::format_real(r.r_train, 6) << " R_val "
        << datagen::format_real(r.r_val, 6) << " val MAP " << datagen::format_real(r.val.map, 6) << '\n';
  });
  trainer::write_checkpoint(*run.model, c.seed, dir / "checkpoint.json");
  {
    auto csv = open_out(dir / "report.csv");
    trainer::write_report_csv(run.reports, csv);
  }
  {
    auto csv = open_out(dir / "metrics.csv");
    write_metrics(*run.model, s, c.train.map_tau, c.ndcg_gain, csv);
  }
  ordered_json summary;
  summary["seed"] = c.seed;
  summary["best_epoch"] = run.best_epoch;
  summary["train_map"] = run.train.map;
  summary["test_map"] = run.test.map;
  summary["delta_map"] = run.delta_map;
  open_out(dir / "summary.json") << summary.dump(2) << '\n';
  out << "best epoch " << run.best_epoch << ", test MAP " << datagen::format_real(run.test.map, 6) << ", delta MAP "
      << datagen::format_real(run.delta_map, 6) << '\n';
  return 0;
}

int cmd_eval(const Flags& f, std::ostream& out) {
  RunConfig c = f.config.empty() ? RunConfig{} : load_run_config(require_file(f.config));
  trainer::LoadedCheckpoint ck = trainer::read_checkpoint(require_file(f.checkpoint));
  out << "seed: " << ck.seed << '\n';
  const datagen::Splits s = read_splits(f.data);
  const auto& enc = ck.model->config().encoder;
  require_dims(s.train, enc.d_tok, enc.d_img, "checkpoint");
  const fs::path dir = prepare_out_dir(f.out, &c);
  auto csv = open_out(dir / "metrics.csv");
  write_metrics(*ck.model, s, c.train.map_tau, c.ndcg_gain, csv);
  out << "wrote " << (dir / "metrics.csv").string() << '\n';
  return 0;
}

int cmd_ablate(const Flags& f, std::ostream& out) {
  RunConfig c = config_from(f);
  out << "seed: " << c.seed << '\n';
  c.train.validate();
  const datagen::Splits s = read_splits(f.data);
  require_dims(s.train, c.gen.d_tok, c.gen.d_img, "config");
  const fs::path dir = prepare_out_dir(f.out, &c);
  write_config(c, dir, out);
  const auto variants = f.single_axis ? trainer::single_axis_variants(c.train) : trainer::ablation_grid(c.train);
  const auto rows = trainer::ablate(s, variants, [&](const trainer::AblationRow& r) {
    out << r.name << " val MAP " << datagen::format_real(r.val.map, 6) << '\n';
  });
  auto csv = open_out(dir / "ablation.csv");
  trainer::write_ablation_csv(rows, csv);
  return 0;
}

int cmd_verify(const Flags& f, std::ostream& out, std::ostream& err) {
  const std::uint64_t seed = resolve_seed(f.seed, 2023);
  out << "seed: " << seed << '\n';
  if (f.trials < 1) throw ConfigError("--trials must be at least 1");
  const fs::path dir = prepare_out_dir(f.out, nullptr);
  const auto reports = theoria::verify_all(f.trials, numkernel::Rng(seed));
  auto csv = open_out(dir / "properties.csv");
  theoria::write_property_csv(reports, csv);
  int failed = 0;
  for (const auto& r : reports) {
    out << (r.pass ? "pass " : "FAIL ") << r.property << " (" << r.violations << '/' << r.trials << ")\n";
    failed += !r.pass;
  }
  if (failed) {
    err << "error: " << failed << " properties failed, see " << (dir / "properties.csv").string() << '\n';
    return 2;
  }
  return 0;
}

int cmd_routing(const Flags& f, std::ostream& out) {
  trainer::LoadedCheckpoint ck = trainer::read_checkpoint(require_file(f.checkpoint));
  out << "seed: " << ck.seed << '\n';
  if (f.split != "train" && f.split != "val" && f.split != "test") {
    throw ConfigError("--split must be train, val or test");
  }
  const fs::path data_dir = f.data;
  const auto tag = f.split == "train" ? datagen::SplitTag::kTrain
                   : f.split == "val" ? datagen::SplitTag::kVal
                                      : datagen::SplitTag::kTest;
  const datagen::Dataset data = read_split(data_dir, f.split.c_str(), tag);
  const auto& enc = ck.model->config().encoder;
  require_dims(data, enc.d_tok, enc.d_img, "checkpoint");
  const fs::path dir = prepare_out_dir(f.out, nullptr);
  const theoria::RoutingStats stats = theoria::leaf_routing_stats(*ck.model, data);
  auto csv = open_out(dir / "routing.csv");
  theoria::write_routing_csv(stats, csv);
  if (stats.has_empty_class()) out << "warning: some labels have no reviews; their rows are nan\n";
  out << "total variation between labels 0 and 4: " << datagen::format_real(stats.total_variation(0, 4), 6) << '\n';
  return 0;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  Reader r(j);
  r.get("seed", c.seed);

  auto& g = c.gen;
  r.get("n_products", g.n_products);
  r.get("reviews_min", g.reviews_min);
  r.get("reviews_max", g.reviews_max);
  r.get("d_tok", g.d_tok);
  r.get("d_img", g.d_img);
  r.get("product_tokens", g.product_tokens);
  r.get("review_tokens_min", g.review_tokens_min);
  r.get("review_tokens_max", g.review_tokens_max);
  r.get("regions", g.regions);
  r.get("latent_dim", g.latent_dim);
  r.get("noise_level", g.noise_level);
  r.get("label_distribution", g.label_distribution);
  r.get("split_ratios", c.split_ratios);

  auto& t = c.train;
  auto& m = t.model;
  r.get("d", m.encoder.d);
  r.get("kernel", m.encoder.kernel);
  m.encoder.pooling =
      r.choice("pooling", "mean", {"mean", "max"}) == "max" ? encoder::Pooling::kMax : encoder::Pooling::kMean;
  m.regressor = r.choice("regressor", "tree", {"tree", "fcnn"}) == "tree" ? trainer::RegressorKind::kTree
                                                                         : trainer::RegressorKind::kFcnn;
  r.get("tree_depth", m.tree_depth);
  r.get("tree_ensemble", m.tree_ensemble);
  r.get("fcnn_hidden", m.fcnn_hidden);
  r.get("listwise_attention", m.listwise_attention);
  t.loss = r.choice("loss", "listwise", {"listwise", "pairwise"}) == "listwise" ? trainer::LossKind::kListwise
                                                                              : trainer::LossKind::kPairwise;
  r.get("lr", t.lr);
  r.get("batch_size", t.batch_size);
  r.get("epochs", t.epochs);
  r.get("adam_beta1", t.adam.beta1);
  r.get("adam_beta2", t.adam.beta2);
  r.get("adam_epsilon", t.adam.epsilon);
  r.get("map_tau", t.map_tau);
  c.ndcg_gain = r.choice("ndcg_gain", "exponential", {"exponential", "linear"}) == "linear"
                    ? objectives::Gain::kLinear
                    : objectives::Gain::kExponential;
  r.get("out_dir", c.out_dir);
  r.reject_unknown();

  c.gen.seed = c.seed;
  c.train.seed = c.seed;
  m.encoder.d_tok = g.d_tok;
  m.encoder.d_img = g.d_img;
  g.validate();
  t.validate();
  if (t.epochs < 1) throw ConfigError("config key 'epochs' must be at least 1");
  if (!(t.lr > 0.0)) throw ConfigError("config key 'lr' must be positive");
  double sum = 0.0;
  for (double v : c.split_ratios) {
    if (!(v >= 0.0)) throw ConfigError("config key 'split_ratios' must be nonnegative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("config key 'split_ratios' must sum to 1");
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  return parse_run_config(std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()));
}

std::string resolved_config_json(const RunConfig& c) {
  const auto& g = c.gen;
  const auto& t = c.train;
  const auto& m = t.model;
  ordered_json j;
  j["seed"] = c.seed;
  j["n_products"] = g.n_products;
  j["reviews_min"] = g.reviews_min;
  j["reviews_max"] = g.reviews_max;
  j["d_tok"] = g.d_tok;
  j["d_img"] = g.d_img;
  j["product_tokens"] = g.product_tokens;
  j["review_tokens_min"] = g.review_tokens_min;
  j["review_tokens_max"] = g.review_tokens_max;
  j["regions"] = g.regions;
  j["latent_dim"] = g.latent_dim;
  j["noise_level"] = g.noise_level;
  j["label_distribution"] = g.label_distribution;
  j["split_ratios"] = c.split_ratios;
  j["d"] = m.encoder.d;
  j["kernel"] = m.encoder.kernel;
  j["pooling"] = m.encoder.pooling == encoder::Pooling::kMax ? "max" : "mean";
  j["regressor"] = m.regressor == trainer::RegressorKind::kTree ? "tree" : "fcnn";
  j["tree_depth"] = m.tree_depth;
  j["tree_ensemble"] = m.tree_ensemble;
  j["fcnn_hidden"] = m.fcnn_hidden;
  j["listwise_attention"] = m.listwise_attention;
  j["loss"] = trainer::to_string(t.loss);
  j["lr"] = t.lr;
  j["batch_size"] = t.batch_size;
  j["epochs"] = t.epochs;
  j["adam_beta1"] = t.adam.beta1;
  j["adam_beta2"] = t.adam.beta2;
  j["adam_epsilon"] = t.adam.epsilon;
  j["map_tau"] = t.map_tau;
  j["ndcg_gain"] = c.ndcg_gain == objectives::Gain::kLinear ? "linear" : "exponential";
  j["out_dir"] = c.out_dir;
  return j.dump(2);
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::uint64_t fallback) {
  if (flag) return *flag;
  if (const char* env = std::getenv(kSeedEnv)) return parse_seed(env, kSeedEnv);
  return fallback;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Review helpfulness ranking: data generation, training, evaluation and verification", "helprank"};
  app.require_subcommand(1);
  Flags f;

  auto add_seed = [&](CLI::App* cmd) {
    cmd->add_option("--seed", f.seed, "Seed; overrides HELPRANK_SEED and the config");
  };
  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset and write train/val/test.jsonl");
  gen->add_option("--config", f.config, "Flat JSON config (defaults for absent keys)");
  gen->add_option("--out", f.out, "Output directory (default: out_dir from the config)");
  add_seed(gen);

  auto* train = app.add_subcommand("train", "Train a model; writes checkpoint, report, metrics and summary");
  train->add_option("--config", f.config, "Flat JSON config (defaults for absent keys)");
  train->add_option("--data", f.data, "Directory holding train/val/test.jsonl")->required();
  train->add_option("--out", f.out, "Output directory (default: out_dir from the config)");
  add_seed(train);

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on every split; writes metrics.csv");
  eval->add_option("--checkpoint", f.checkpoint, "Checkpoint JSON written by train")->required();
  eval->add_option("--data", f.data, "Directory holding train/val/test.jsonl")->required();
  eval->add_option("--out", f.out, "Output directory")->required();
  eval->add_option("--config", f.config, "Config supplying map_tau and ndcg_gain");

  auto* ablate = app.add_subcommand("ablate", "Train the regressor x loss x listwise-attention grid");
  ablate->add_option("--config", f.config, "Flat JSON config for the base model");
  ablate->add_option("--data", f.data, "Directory holding train/val/test.jsonl")->required();
  ablate->add_option("--out", f.out, "Output directory (default: out_dir from the config)");
  ablate->add_flag("--single-axis", f.single_axis, "Only the base model and its one-axis variants");
  add_seed(ablate);

  auto* verify = app.add_subcommand("verify", "Check loss convexity, gradient and loss bounds; writes properties.csv");
  verify->add_option("--trials", f.trials, "Trials per property")->capture_default_str();
  verify->add_option("--out", f.out, "Output directory")->required();
  add_seed(verify);

  auto* routing = app.add_subcommand("routing", "Mean leaf routing per label; writes routing.csv");
  routing->add_option("--checkpoint", f.checkpoint, "Checkpoint JSON with a tree regressor")->required();
  routing->add_option("--data", f.data, "Directory holding the split files")->required();
  routing->add_option("--out", f.out, "Output directory")->required();
  routing->add_option("--split", f.split, "Split to analyse: train, val or test")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      std::ostringstream help;
      app.exit(e, help, help);
      out << help.str();
      return 0;
    }
    err << "error: " << e.what() << " (see --help)\n";
    return 1;
  }

  try {
    if (*gen) return cmd_gen(f, out);
    if (*train) return cmd_train(f, out);
    if (*eval) return cmd_eval(f, out);
    if (*ablate) return cmd_ablate(f, out);
    if (*verify) return cmd_verify(f, out, err);
    if (*routing) return cmd_routing(f, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const SchemaError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const DimensionError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const DivergenceError& e) {
    err << "error: training diverged: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace helprank::cli
