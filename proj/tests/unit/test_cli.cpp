#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "helprank/cli/cli.hpp"
#include "helprank/errors.hpp"

using namespace helprank;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "helprank");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Fresh directory under the build tree, removed on destruction.
struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("helprank_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string operator/(const std::string& leaf) const { return (dir / leaf).string(); }
};

const char* kTiny = R"({"n_products": 12, "d_tok": 6, "d_img": 5, "latent_dim": 2, "reviews_min": 3,
  "reviews_max": 6, "d": 3, "epochs": 2, "lr": 0.01})";

std::string write_config(const Scratch& s, const std::string& name, const std::string& text) {
  std::ofstream(s / name) << text;
  return s / name;
}

struct EnvGuard {
  EnvGuard() { unsetenv("HELPRANK_SEED"); }
  ~EnvGuard() { unsetenv("HELPRANK_SEED"); }
};

}  // namespace

TEST_CASE("config parsing applies defaults and rejects bad keys") {
  cli::RunConfig c = cli::parse_run_config("{}");
  CHECK(c.seed == 2023);
  CHECK(c.train.lr == 1e-3);
  CHECK(c.train.batch_size == 32);
  CHECK(c.gen.n_products == 300);

  c = cli::parse_run_config(R"({"seed": 5, "loss": "pairwise", "regressor": "fcnn", "fcnn_hidden": [4, 2],
                                "listwise_attention": false, "ndcg_gain": "linear", "d_tok": 7})");
  CHECK(c.gen.seed == 5);
  CHECK(c.train.seed == 5);
  CHECK(c.train.loss == trainer::LossKind::kPairwise);
  CHECK(c.train.model.regressor == trainer::RegressorKind::kFcnn);
  CHECK(c.train.model.fcnn_hidden == std::vector<std::size_t>{4, 2});
  CHECK_FALSE(c.train.model.listwise_attention);
  CHECK(c.ndcg_gain == objectives::Gain::kLinear);
  CHECK(c.train.model.encoder.d_tok == 7);

  auto message = [](const std::string& text) {
    try {
      cli::parse_run_config(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(message(R"({"learning_rate": 0.1})") == "unknown config key 'learning_rate'");
  CHECK(message(R"({"lr": "fast"})").find("'lr'") != std::string::npos);
  CHECK(message(R"({"epochs": -3})").find("'epochs'") != std::string::npos);
  CHECK(message(R"({"loss": "hinge"})").find("listwise, pairwise") != std::string::npos);
  CHECK(message(R"({"split_ratios": [0.5, 0.5, 0.5]})").find("split_ratios") != std::string::npos);
  CHECK(message("[1, 2]") == "config must be a JSON object");
  CHECK(message("{").find("not valid JSON") != std::string::npos);
}

TEST_CASE("resolved config round-trips") {
  cli::RunConfig c = cli::parse_run_config(R"({"seed": 11, "lr": 0.005, "pooling": "max", "tree_depth": 4})");
  const std::string text = cli::resolved_config_json(c);
  cli::RunConfig back = cli::parse_run_config(text);
  CHECK(cli::resolved_config_json(back) == text);
  CHECK(back.train.model.tree_depth == 4);
}

TEST_CASE("seed precedence is flag, environment, config") {
  EnvGuard guard;
  CHECK(cli::resolve_seed(std::nullopt, 3) == 3);
  setenv("HELPRANK_SEED", "17", 1);
  CHECK(cli::resolve_seed(std::nullopt, 3) == 17);
  CHECK(cli::resolve_seed(9, 3) == 9);
  setenv("HELPRANK_SEED", "seventeen", 1);
  CHECK_THROWS_AS(cli::resolve_seed(std::nullopt, 3), ConfigError);
}

TEST_CASE("gen, train and eval run end to end") {
  EnvGuard guard;
  Scratch s("pipeline");
  const std::string cfg = write_config(s, "c.json", kTiny);

  Result gen = run({"gen", "--config", cfg, "--out", s / "data"});
  REQUIRE(gen.code == 0);
  CHECK(gen.out.rfind("seed: 2023\n", 0) == 0);
  CHECK(gen.out.find("config: {") != std::string::npos);
  for (const char* f : {"train.jsonl", "val.jsonl", "test.jsonl", "config.json"}) CHECK(fs::exists(s.dir / "data" / f));

  Result train = run({"train", "--config", cfg, "--data", s / "data", "--out", s / "run"});
  REQUIRE(train.code == 0);
  CHECK(train.out.rfind("seed: 2023\n", 0) == 0);
  for (const char* f : {"checkpoint.json", "report.csv", "metrics.csv", "summary.json", "config.json"}) {
    CHECK(fs::exists(s.dir / "run" / f));
  }
  CHECK(slurp(s.dir / "run" / "metrics.csv").rfind("split,products,MAP,NDCG1,NDCG3,NDCG5\ntrain,8,", 0) == 0);

  Result eval = run({"eval", "--checkpoint", s / "run/checkpoint.json", "--data", s / "data", "--out", s / "eval"});
  REQUIRE(eval.code == 0);
  CHECK(eval.out.rfind("seed: 2023\n", 0) == 0);
  CHECK(slurp(s.dir / "eval" / "metrics.csv") == slurp(s.dir / "run" / "metrics.csv"));

  Result routing = run({"routing", "--checkpoint", s / "run/checkpoint.json", "--data", s / "data", "--out",
                        s / "routing", "--split", "train"});
  REQUIRE(routing.code == 0);
  CHECK(slurp(s.dir / "routing" / "routing.csv").rfind("label,count,leaf0,leaf1,leaf2,leaf3\n", 0) == 0);

  Result again = run({"train", "--config", cfg, "--data", s / "data", "--out", s / "run2"});
  REQUIRE(again.code == 0);
  for (const char* f : {"checkpoint.json", "report.csv", "metrics.csv", "summary.json"}) {
    CHECK(slurp(s.dir / "run" / f) == slurp(s.dir / "run2" / f));
  }

  Result other = run({"train", "--config", cfg, "--data", s / "data", "--out", s / "run3", "--seed", "4"});
  REQUIRE(other.code == 0);
  CHECK(other.out.rfind("seed: 4\n", 0) == 0);
  CHECK(slurp(s.dir / "run" / "checkpoint.json") != slurp(s.dir / "run3" / "checkpoint.json"));
}

TEST_CASE("environment seed reaches every seeded command") {
  EnvGuard guard;
  Scratch s("envseed");
  const std::string cfg = write_config(s, "c.json", kTiny);
  setenv("HELPRANK_SEED", "31", 1);
  Result gen = run({"gen", "--config", cfg, "--out", s / "data"});
  CHECK(gen.out.rfind("seed: 31\n", 0) == 0);
  CHECK(slurp(s.dir / "data" / "config.json").find("\"seed\": 31") != std::string::npos);
  Result verify = run({"verify", "--trials", "5", "--out", s / "v", "--seed", "8"});
  CHECK(verify.out.rfind("seed: 8\n", 0) == 0);
}

TEST_CASE("verify writes an all-pass property table") {
  EnvGuard guard;
  Scratch s("verify");
  Result r = run({"verify", "--trials", "1000", "--out", s / "v"});
  REQUIRE(r.code == 0);
  std::istringstream csv(slurp(s.dir / "v" / "properties.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "property,trials,violations,worst_margin,pass");
  int rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    CHECK(line.find(",1000,0,") != std::string::npos);
    CHECK(line.substr(line.size() - 5) == ",true");
  }
  CHECK(rows == 6);
}

TEST_CASE("mismatched d_tok is a schema error naming the field") {
  EnvGuard guard;
  Scratch s("mismatch");
  const std::string cfg = write_config(s, "c.json", kTiny);
  REQUIRE(run({"gen", "--config", cfg, "--out", s / "data"}).code == 0);
  const std::string wide = write_config(s, "wide.json", R"({"d_tok": 9, "d_img": 5, "d": 3, "epochs": 1})");
  Result r = run({"train", "--config", wide, "--data", s / "data", "--out", s / "run"});
  CHECK(r.code == 1);
  CHECK(r.err == "error: d_tok: dataset has 6, config has 9\n");
}

TEST_CASE("validation errors exit with 1 and one line") {
  EnvGuard guard;
  Scratch s("errors");
  const std::string bad = write_config(s, "bad.json", R"({"epochs": 2, "colour": "blue"})");
  for (const auto& args : std::vector<std::vector<std::string>>{
           {"gen", "--config", bad, "--out", s / "x"},
           {"gen", "--config", s / "missing.json", "--out", s / "x"},
           {"train", "--data", s / "nowhere", "--out", s / "x"},
           {"eval", "--checkpoint", s / "none.json", "--data", s / "x", "--out", s / "x"},
           {"verify", "--trials", "0", "--out", s / "x"},
           {"verify", "--trials", "many", "--out", s / "x"},
           {"train", "--out", s / "x"},
           {"gen"},
           {"frobnicate"},
           {}}) {
    Result r = run(args);
    CHECK(r.code == 1);
    CHECK(r.err.rfind("error: ", 0) == 0);
    CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
  }
  setenv("HELPRANK_SEED", "-4", 1);
  CHECK(run({"verify", "--out", s / "x"}).code == 1);
}

TEST_CASE("divergence exits with 2") {
  EnvGuard guard;
  Scratch s("diverge");
  const std::string cfg = write_config(s, "c.json", kTiny);
  REQUIRE(run({"gen", "--config", cfg, "--out", s / "data"}).code == 0);
  const std::string wild = write_config(s, "wild.json", R"({"n_products": 12, "d_tok": 6, "d_img": 5, "latent_dim": 2,
    "reviews_min": 3, "reviews_max": 6, "d": 3, "epochs": 3, "lr": 1e300, "batch_size": 1})");
  Result r = run({"train", "--config", wild, "--data", s / "data", "--out", s / "run"});
  CHECK(r.code == 2);
  CHECK(r.err.find("diverged") != std::string::npos);
}

TEST_CASE("help lists every flag with defaults") {
  Result top = run({"--help"});
  CHECK(top.code == 0);
  for (const char* cmd : {"gen", "train", "eval", "ablate", "verify", "routing"}) {
    CHECK(top.out.find(cmd) != std::string::npos);
  }
  Result verify = run({"verify", "--help"});
  CHECK(verify.code == 0);
  CHECK(verify.out.find("--trials") != std::string::npos);
  CHECK(verify.out.find("1000") != std::string::npos);
  Result train = run({"train", "--help"});
  for (const char* flag : {"--config", "--data", "--out", "--seed"}) CHECK(train.out.find(flag) != std::string::npos);
}

TEST_CASE("ablate writes one row per variant") {
  EnvGuard guard;
  Scratch s("ablate");
  const std::string cfg = write_config(s, "c.json", R"({"n_products": 12, "d_tok": 6, "d_img": 5, "latent_dim": 2,
    "reviews_min": 3, "reviews_max": 6, "d": 2, "epochs": 1, "lr": 0.01})");
  REQUIRE(run({"gen", "--config", cfg, "--out", s / "data"}).code == 0);
  Result r = run({"ablate", "--config", cfg, "--data", s / "data", "--out", s / "ab", "--single-axis"});
  REQUIRE(r.code == 0);
  std::istringstream csv(slurp(s.dir / "ab" / "ablation.csv"));
  std::string line;
  int rows = -1;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 6);
}
