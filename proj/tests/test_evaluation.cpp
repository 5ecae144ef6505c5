#include "clickmodel/error.hpp"
#include "clickmodel/estimation.hpp"
#include "clickmodel/evaluation.hpp"
#include "clickmodel/simulation.hpp"

#include <doctest.h>

#include <json.hpp>

#include <algorithm>
#include <cmath>

using namespace clickmodel;

namespace {

// The truth depends only on `truth_seed`; the sessions on `seed`.
ClickLog simulate_pbm(std::int64_t sessions, std::uint64_t seed, ModelInstance* truth_out = nullptr,
                      std::uint64_t truth_seed = 0) {
  SimConfig c;
  c.shape = {1, 3};
  c.sessions = sessions;
  c.seed = seed;
  c.item_universe = 6;
  RandomStream rng(truth_seed, 1ULL << 40);
  const auto truth = random_model(ModelKind::pbm, c.shape, item_universe(c), {}, rng);
  if (truth_out) *truth_out = truth;
  return simulate_log(truth, c);
}

}  // namespace

TEST_CASE("the constant half model has perplexity exactly 2") {
  const auto log = simulate_pbm(1000, 1);
  const auto half = constant_model(ModelKind::rcm, log.shape(), {}, {}, 0.5);
  const auto r = evaluate(half, log);
  for (int j = 0; j < 3; ++j) CHECK(r.per_rank_perplexity(0, j) == 2.0);
  CHECK(r.overall_perplexity == 2.0);
  CHECK(r.n_sessions == 1000);
  CHECK(r.total_ll == doctest::Approx(3000 * std::log(0.5)));
}

TEST_CASE("perfect prediction has perplexity exactly 1") {
  ClickLog log;
  for (int k = 0; k < 10; ++k) log.add(InterfaceKind::single_list, {}, {{"a", "b"}}, {{0, 0}});
  const auto zero = constant_model(ModelKind::rcm, log.shape(), {}, {}, 0.0);
  const auto r = evaluate(zero, log);
  CHECK(r.overall_perplexity == 1.0);
  CHECK(r.per_rank_perplexity(0, 1) == 1.0);
  CHECK(r.infinite.empty());
}

TEST_CASE("impossible observations give a flagged infinite perplexity") {
  ClickLog log;
  log.add(InterfaceKind::single_list, {}, {{"a", "b"}}, {{0, 1}});
  const auto zero = constant_model(ModelKind::rcm, log.shape(), {}, {}, 0.0);
  const auto r = evaluate(zero, log);
  CHECK(std::isinf(r.per_rank_perplexity(0, 1)));
  CHECK(r.per_rank_perplexity(0, 0) == 1.0);
  CHECK(std::isinf(r.overall_perplexity));
  CHECK(r.infinite == std::vector<std::string>{"1,2"});
  const auto j = nlohmann::json::parse(eval_report_to_json(r));
  CHECK(j["per_rank_perplexity"]["1,2"].is_null());
  CHECK(j["overall_perplexity"].is_null());
  CHECK(eval_report_to_text(r).find("inf") != std::string::npos);
}

TEST_CASE("evaluation does not depend on session order or workers") {
  const auto log = simulate_pbm(5000, 2);
  const auto model = fit_em(ModelKind::pbm, log).model;
  ClickLog reversed;
  reversed.items() = log.items();
  for (auto it = log.sessions().rbegin(); it != log.sessions().rend(); ++it) reversed.add(*it);
  const auto a = eval_report_to_json(evaluate(model, log, 1));
  CHECK(eval_report_to_json(evaluate(model, reversed, 1)) == a);
  CHECK(eval_report_to_json(evaluate(model, log, 8)) == a);
  CHECK_THROWS_AS(evaluate(model, ClickLog{}), ValidationError);
}

TEST_CASE("the generating model beats a mismatched one") {
  const auto train = simulate_pbm(20000, 3);
  const auto test = simulate_pbm(20000, 4);
  const auto pbm = fit_em(ModelKind::pbm, train).model;
  const auto rcm = fit_counting(ModelKind::rcm, train).model;
  CHECK(evaluate(pbm, test).overall_perplexity < evaluate(rcm, test).overall_perplexity);
}

TEST_CASE("recovery error") {
  ModelInstance truth;
  const auto log = simulate_pbm(10, 5, &truth);
  CHECK(recovery_error(truth, truth).max_abs == 0.0);

  Eigen::VectorXd theta = truth.parameters();
  theta.head(3) *= 0.5;
  theta.tail(6) *= 2.0;
  theta = theta.cwiseMin(1.0);
  const bool exact = (truth.parameters().tail(6).array() <= 0.5).all();
  const auto scaled = truth.with_parameters(theta);
  if (exact) CHECK(recovery_error(truth, scaled).max_abs < 1e-15);

  const auto rcm = constant_model(ModelKind::rcm, truth.shape(), {}, {}, 0.5);
  CHECK_THROWS_AS(recovery_error(truth, rcm), ValidationError);
  const auto other_shape = constant_model(ModelKind::pbm, {1, 2}, truth.items(), {}, 0.5);
  CHECK_THROWS_AS(recovery_error(truth, other_shape), ValidationError);
  const auto half = constant_model(ModelKind::pbm, truth.shape(), truth.items(), {}, 0.5);
  const auto e = recovery_error(truth, half);
  CHECK(e.max_abs > 0.0);
  CHECK(e.mean_abs <= e.max_abs);
}

TEST_CASE("text table is aligned") {
  const auto log = simulate_pbm(100, 6);
  const auto text = eval_report_to_text(evaluate(constant_model(ModelKind::rcm, log.shape(), {}, {}, 0.5), log));
  CHECK(text.find("position  perplexity") == 0);
  CHECK(text.find("overall     2.000000") != std::string::npos);
}
