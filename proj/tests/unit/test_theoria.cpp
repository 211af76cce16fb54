#include <doctest.h>

#include <cmath>
#include <sstream>

#include "helprank/datagen/generator.hpp"
#include "helprank/errors.hpp"
#include "helprank/objectives/objectives.hpp"
#include "helprank/theoria/theoria.hpp"

using namespace helprank;
using namespace helprank::theoria;

namespace {

BoundInputs inputs(double gamma, double L) {
  BoundInputs in;
  in.gamma = gamma;
  in.loss_bound = L;
  in.iterations = 100;
  in.samples = 1000;
  in.delta = 0.05;
  in.rate = [](std::size_t) { return 0.01; };
  return in;
}

datagen::Dataset small_dataset() {
  datagen::GenConfig g;
  g.n_products = 12;
  g.d_tok = 4;
  g.d_img = 4;
  g.latent_dim = 2;
  g.seed = 5;
  return datagen::generate(g);
}

trainer::ModelConfig small_model() {
  trainer::ModelConfig mc;
  mc.encoder.d = 3;
  mc.encoder.d_tok = 4;
  mc.encoder.d_img = 4;
  return mc;
}

}  // namespace

TEST_CASE("jensen gap is zero at the endpoints") {
  PointLoss list = [](std::span<const double> p) {
    return objectives::listwise_loss({{std::log(p[0]), std::log(p[1]), std::log(p[2])}, {0, 2, 4}}).value;
  };
  std::vector<double> u{0.2, 0.3, 0.5}, v{0.6, 0.1, 0.3};
  CHECK(jensen_gap(list, u, v, 0.0) == 0.0);
  CHECK(jensen_gap(list, u, v, 1.0) == 0.0);
  CHECK(jensen_gap(list, u, v, 0.5) > 0.0);
  CHECK_THROWS_AS(jensen_gap(list, u, std::vector<double>{0.5, 0.5}, 0.5), DimensionError);
}

TEST_CASE("convexity holds for both losses") {
  for (LossKind kind : {LossKind::kListwise, LossKind::kPairwise}) {
    PropertyReport r = check_convexity(kind, 1000, Rng(1));
    CHECK(r.trials == 1000);
    CHECK(r.violations == 0);
    CHECK(r.pass);
    CHECK(r.worst_margin >= -kTolerance);
  }
}

TEST_CASE("concave stand-in is flagged") {
  JensenSampler concave = [](Rng& r) {
    JensenTrial t;
    t.loss = [](std::span<const double> x) { return -x[0] * x[0]; };
    t.u = {r.uniform(-3, 3)};
    t.v = {t.u[0] + r.uniform(0.5, 2.0)};
    return t;
  };
  PropertyReport r = check_jensen("concave", concave, 200, Rng(2));
  CHECK(r.violations == 200);
  CHECK_FALSE(r.pass);
  CHECK(r.worst_margin < 0.0);
  CHECK_THROWS_AS(check_jensen("concave", concave, 0, Rng(2)), ConfigError);
}

TEST_CASE("gradient bounds") {
  PropertyReport r = check_gradient_bounds(10000, Rng(3));
  CHECK(r.trials == 10000);
  CHECK(r.violations == 0);
  CHECK(r.worst_margin >= 0.0);

  auto uniform = objectives::listwise_loss({{1.0, 1.0, 1.0}, {2, 2, 2}});
  for (double g : uniform.gradient) CHECK(std::abs(g) < 1e-15);
  auto extreme = objectives::listwise_loss({{100.0, -100.0}, {0, 4}});
  for (double g : extreme.gradient) CHECK(std::abs(g) <= 1.0);

  LipschitzEstimate est = estimate_lipschitz(10000, Rng(3));
  CHECK(est.listwise < 1.0);
  CHECK(est.listwise > 0.9);
  CHECK(est.pairwise == 1.0);
}

TEST_CASE("loss bounds") {
  PropertyReport r = check_loss_bounds(1000, -5.0, 5.0, Rng(4));
  CHECK(r.violations == 0);
  CHECK(r.pass);
  CHECK(check_loss_bounds(1000, 0.0, 0.0, Rng(5)).pass);

  // A single review carries no listwise loss.
  CHECK(objectives::listwise_loss({{3.0}, {4}}).value == 0.0);
  CHECK(listwise_loss_bound(-1.0, 1.0, 1) == 2.0);
  const std::vector<int> labels{0, 4, 2};
  CHECK(pairwise_loss_bound(-1.0, 1.0, labels) == 6.0);
  CHECK(std::log(30.0) < 4.0);

  CHECK(std::abs(std::log10(2043.0) - 3.31) < 5e-3);
  CHECK(std::log10(2043.0) <= 4.0);
  CHECK_THROWS_AS(check_loss_bounds(10, 1.0, -1.0, Rng(4)), ConfigError);
}

TEST_CASE("theorem1 bound values") {
  CHECK(theorem1_bound(inputs(0.0, 0.0)) == 0.0);

  BoundInputs in = inputs(1.5, 3.0);
  in.delta = 2.0;
  BoundTerms t = theorem1_terms(in);
  CHECK(t.concentration == 0.0);
  // Only the 1/N term survives log(2/delta) = 0.
  CHECK(std::abs(t.stability - 2.0 * 2.25 * 1.0 / 1000.0) < 1e-15);

  in = inputs(2.0, 3.0);
  const double lg = std::log(2.0 / 0.05);
  const double expected = 3.0 * std::sqrt(lg / 2000.0) +
                          2.0 * 4.0 * 1.0 * (2.0 * std::sqrt(lg / 100.0) + std::sqrt(2.0 * lg / 1000.0) + 1e-3);
  CHECK(std::abs(theorem1_bound(in) - expected) < 1e-12);

  in.rate = nullptr;
  CHECK(theorem1_terms(in).stability == doctest::Approx(100.0 * theorem1_terms(inputs(2.0, 3.0)).stability));

  CHECK(theorem1_bound(inputs(0.5, 1.0)) < theorem1_bound(inputs(1.0, 4.0)));
}

TEST_CASE("theorem1 bound input validation") {
  BoundInputs in = inputs(1.0, 1.0);
  in.delta = 0.0;
  CHECK_THROWS_AS(theorem1_bound(in), ConfigError);
  in.delta = -1.0;
  CHECK_THROWS_AS(theorem1_bound(in), ConfigError);
  in = inputs(-1.0, 1.0);
  CHECK_THROWS_AS(theorem1_bound(in), ConfigError);
  in = inputs(1.0, 1.0);
  in.samples = 0;
  CHECK_THROWS_AS(theorem1_bound(in), ConfigError);
  in = inputs(1.0, 1.0);
  in.rate = [](std::size_t) { return -1.0; };
  CHECK_THROWS_AS(theorem1_bound(in), ConfigError);
}

TEST_CASE("bound monotonicity and ordering") {
  PropertyReport mono = check_bound_monotonicity(1000, Rng(6));
  CHECK(mono.pass);
  CHECK(mono.worst_margin >= 0.0);
  PropertyReport order = check_bound_ordering(1000, Rng(7));
  CHECK(order.pass);
  CHECK(order.worst_margin > 0.0);
}

TEST_CASE("verify_all and its csv") {
  auto reports = verify_all(50, Rng(8));
  REQUIRE(reports.size() == 6);
  for (const auto& r : reports) CHECK(r.pass);
  std::ostringstream os;
  write_property_csv(reports, os);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "property,trials,violations,worst_margin,pass");
  std::getline(in, line);
  CHECK(line.rfind("convexity_listwise,50,0,", 0) == 0);
  CHECK(line.substr(line.size() - 5) == ",true");

  std::ostringstream again;
  write_property_csv(verify_all(50, Rng(8)), again);
  CHECK(again.str() == os.str());
}

TEST_CASE("routing stats of a zero-parameter tree are uniform") {
  Rng rng(1);
  trainer::HelpfulnessModel model(small_model(), rng);
  for (auto& [name, p] : model.named_parameters()) {
    if (name.rfind("regressor.", 0) == 0) p->value.fill(0.0);
  }
  auto data = small_dataset();
  RoutingStats stats = leaf_routing_stats(model, data);
  CHECK(stats.mean.rows() == 5);
  CHECK(stats.mean.cols() == 4);
  for (std::size_t y = 0; y < 5; ++y) {
    REQUIRE(stats.counts[y] > 0);
    for (std::size_t l = 0; l < 4; ++l) CHECK(std::abs(stats.mean(y, l) - 0.25) < 1e-12);
  }
  CHECK(stats.total_variation(0, 4) < 1e-12);
}

TEST_CASE("routing rows sum to one and empty classes are flagged") {
  Rng rng(2);
  trainer::HelpfulnessModel model(small_model(), rng);
  auto data = small_dataset();
  for (auto& p : data.products) {
    for (auto& r : p.reviews) {
      if (r.label == 2) r.label = 1;
    }
  }
  RoutingStats stats = leaf_routing_stats(model, data);
  CHECK(stats.has_empty_class());
  CHECK(stats.counts[2] == 0);
  for (std::size_t y = 0; y < 5; ++y) {
    double sum = 0.0;
    for (std::size_t l = 0; l < stats.mean.cols(); ++l) sum += stats.mean(y, l);
    if (y == 2) {
      CHECK(std::isnan(sum));
    } else {
      CHECK(std::abs(sum - 1.0) < 1e-6);
    }
  }
  CHECK(std::isnan(stats.total_variation(0, 2)));
  CHECK_THROWS_AS(stats.total_variation(0, 5), ConfigError);

  std::ostringstream os;
  write_routing_csv(stats, os);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "label,count,leaf0,leaf1,leaf2,leaf3");
  for (int k = 0; k < 3; ++k) std::getline(in, line);
  CHECK(line == "2,0,nan,nan,nan,nan");
}

TEST_CASE("routing stats need a tree") {
  auto mc = small_model();
  mc.regressor = trainer::RegressorKind::kFcnn;
  Rng rng(3);
  trainer::HelpfulnessModel model(mc, rng);
  auto data = small_dataset();
  CHECK_THROWS_AS(leaf_routing_stats(model, data), ConfigError);
}
