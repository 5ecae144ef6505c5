#include "clickmodel/error.hpp"
#include "clickmodel/models.hpp"
#include "clickmodel/random.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace clickmodel;

namespace {

Vocabulary names(const std::string& prefix, int count) {
  Vocabulary v;
  for (int k = 0; k < count; ++k) v.intern(prefix + std::to_string(k));
  return v;
}

InterfaceKind interface_for(ModelKind kind, const LayoutShape& shape) {
  if (uses_topics(kind)) return InterfaceKind::carousel;
  return shape.m == 1 ? InterfaceKind::single_list : InterfaceKind::grid;
}

ModelInstance random_instance(ModelKind kind, const LayoutShape& shape, std::uint64_t seed) {
  RandomStream rng(seed, 0);
  return random_model(kind, shape, names("i", shape.cells()), uses_topics(kind) ? names("t", shape.m) : Vocabulary{},
                      rng);
}

std::vector<int> row_clicks(const SessionRecord& s, int row) {
  std::vector<int> out;
  for (int j = 0; j < s.clicks.cols(); ++j) out.push_back(s.clicks(row, j));
  return out;
}

}  // namespace

TEST_CASE("kind names round-trip") {
  for (auto k : kAllModelKinds) CHECK(parse_model_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_model_kind("pbm2"), ValidationError);
}

TEST_CASE("table layouts") {
  const LayoutShape shape{2, 3};
  auto size_of = [&](ModelKind k, const std::string& table) {
    for (const auto& t : table_layout(k, shape, 5, 2)) {
      if (t.name == table) return t.size;
    }
    return Eigen::Index{-1};
  };
  CHECK(size_of(ModelKind::rcm, "zeta") == 1);
  CHECK(size_of(ModelKind::rctr, "position") == 6);
  CHECK(size_of(ModelKind::pbm, "item") == 5);
  CHECK(size_of(ModelKind::trust_pbm, "trust") == 6);
  CHECK(size_of(ModelKind::ubm, "gamma") == 12);
  CHECK(size_of(ModelKind::dcm, "lambda") == 4);
  CHECK(size_of(ModelKind::dbn, "gamma") == 1);
  CHECK(size_of(ModelKind::cacm, "tau") == 2);
  CHECK(size_of(ModelKind::topics_items_v1, "beta") == 1);
  CHECK(size_of(ModelKind::topics_items_v2, "beta") == 2);
}

TEST_CASE("parameter keys") {
  const auto m = constant_model(ModelKind::ubm, {1, 3}, names("i", 3), {}, 0.5);
  CHECK(m.index_of("gamma", "1,3,2") == m.table("gamma").offset + 5);
  CHECK(m.index_of("gamma", "1,1,0") == m.table("gamma").offset);
  CHECK_THROWS_AS(m.index_of("gamma", "1,2,2"), ValidationError);
  CHECK_THROWS_AS(m.index_of("item", "zz"), ValidationError);
  CHECK_THROWS_AS(m.index_of("sigma", "i0"), ValidationError);
  for (Eigen::Index k = 0; k < m.parameters().size(); ++k) {
    const auto name = m.parameter_name(k);
    const auto colon = name.find(':');
    CHECK(m.index_of(name.substr(0, colon), name.substr(colon + 1)) == k);
  }
}

TEST_CASE("make_model validates tables") {
  const LayoutShape shape{1, 2};
  ParamTables t{{"position", {{"1,1", 1.0}, {"1,2", 0.5}}}, {"item", {{"a", 0.8}, {"b", 0.4}}}};
  Vocabulary items;
  items.intern("a");
  items.intern("b");
  CHECK_NOTHROW(make_model(ModelKind::pbm, shape, items, {}, t));
  SUBCASE("missing key") {
    t["item"].erase("b");
    CHECK_THROWS_WITH_AS(make_model(ModelKind::pbm, shape, items, {}, t), doctest::Contains("missing"),
                         ValidationError);
  }
  SUBCASE("unknown table") {
    t["gamma"] = {{"value", 0.3}};
    CHECK_THROWS_WITH_AS(make_model(ModelKind::pbm, shape, items, {}, t), doctest::Contains("unknown table"),
                         ValidationError);
  }
  SUBCASE("out of range") {
    t["item"]["a"] = 1.2;
    CHECK_THROWS_WITH_AS(make_model(ModelKind::pbm, shape, items, {}, t), doctest::Contains("out of range"),
                         ValidationError);
  }
  SUBCASE("trust bound") {
    t["trust"] = {{"1,1", 0.3}, {"1,2", 0.1}};
    CHECK_THROWS_WITH_AS(make_model(ModelKind::trust_pbm, shape, items, {}, t), doctest::Contains("exceeds 1"),
                         ValidationError);
    t["trust"]["1,1"] = 0.2;
    CHECK_NOTHROW(make_model(ModelKind::trust_pbm, shape, items, {}, t));
  }
}

TEST_CASE("parameter files round-trip for every kind") {
  for (auto kind : kAllModelKinds) {
    const auto m = random_instance(kind, {2, 3}, 11);
    CAPTURE(to_string(kind));
    const auto text = model_to_json(m);
    const auto back = model_from_json(text);
    CHECK(back == m);
    CHECK(model_to_json(back) == text);
  }
  CHECK_THROWS_AS(model_from_json("{"), ValidationError);
  CHECK_THROWS_AS(model_from_json(R"({"kind":"rcm","shape":{"m":1,"n":1}})"), ValidationError);
}

TEST_CASE("closed-form conditionals") {
  const LayoutShape shape{1, 3};
  auto s = oracle::skeleton(shape, InterfaceKind::single_list);
  s.clicks << 0, 1, 0;
  const auto prior = to_assignment(s.clicks);

  SUBCASE("pbm is f times g") {
    const auto m = random_instance(ModelKind::pbm, shape, 3);
    const BoundModel b(m, m.items(), m.topics());
    for (int j = 0; j < 3; ++j) {
      CHECK(b.conditional(s, {0, j}, prior) ==
            m.parameters()[m.table("position").offset + j] * m.parameters()[m.table("item").offset + j]);
    }
  }
  SUBCASE("cascade is zero after a click") {
    const auto m = random_instance(ModelKind::cascade, shape, 4);
    const BoundModel b(m, m.items(), m.topics());
    CHECK(b.conditional(s, {0, 2}, prior) == 0.0);
    CHECK(b.conditional(s, {0, 1}, prior) == m.value("item", "i1"));
  }
  SUBCASE("ubm uses the last click rank") {
    const auto m = random_instance(ModelKind::ubm, shape, 5);
    const BoundModel b(m, m.items(), m.topics());
    CHECK(b.conditional(s, {0, 2}, prior) == m.value("item", "i2") * m.value("gamma", "1,3,2"));
    CHECK(b.conditional(s, {0, 1}, prior) == m.value("item", "i1") * m.value("gamma", "1,2,0"));
  }
  SUBCASE("rcm ignores everything") {
    const auto m = constant_model(ModelKind::rcm, shape, names("i", 3), {}, 0.25);
    const BoundModel b(m, m.items(), m.topics());
    CHECK(b.conditional(s, {0, 1}, unassigned(shape)) == 0.25);
  }
}

TEST_CASE("joint likelihood matches latent-variable recursions") {
  const LayoutShape shape{2, 4};
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    for (auto kind : {ModelKind::cascade, ModelKind::dcm, ModelKind::dbn}) {
      const auto m = random_instance(kind, shape, 100 + seed);
      const BoundModel b(m, m.items(), m.topics());
      auto s = oracle::skeleton(shape, InterfaceKind::grid);
      for (std::uint64_t k = 0; k < 256; ++k) {
        s.clicks = oracle::pattern(shape, k);
        double expected = 1.0;
        for (int i = 0; i < 2; ++i) {
          std::vector<double> alpha, sigma, lambda;
          for (int j = 0; j < 4; ++j) {
            const auto item = "i" + std::to_string(i * 4 + j);
            alpha.push_back(m.value("item", item));
            if (kind == ModelKind::dbn) sigma.push_back(m.value("sigma", item));
            if (kind == ModelKind::dcm && j < 3) lambda.push_back(m.value("lambda", to_string(Position{i, j})));
          }
          const auto c = row_clicks(s, i);
          if (kind == ModelKind::cascade) expected *= oracle::cascade_row(alpha, c);
          if (kind == ModelKind::dcm) expected *= oracle::dcm_row(alpha, lambda, c);
          if (kind == ModelKind::dbn) expected *= oracle::dbn_row(alpha, sigma, m.value("gamma", "value"), c);
        }
        CAPTURE(to_string(kind));
        CAPTURE(k);
        CHECK(std::exp(b.joint_log_likelihood(s)) == doctest::Approx(expected).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("every kind defines a distribution over click matrices") {
  for (auto kind : kAllModelKinds) {
    for (const LayoutShape shape : {LayoutShape{1, 3}, LayoutShape{2, 2}, LayoutShape{3, 2}}) {
      const auto m = random_instance(kind, shape, 7);
      const BoundModel b(m, m.items(), m.topics());
      CAPTURE(to_string(kind));
      CHECK(std::abs(oracle::total_probability(b, oracle::skeleton(shape, interface_for(kind, shape))) - 1.0) <
            1e-12);
    }
  }
}

TEST_CASE("prior requirements") {
  const LayoutShape shape{1, 3};
  const auto m = random_instance(ModelKind::dcm, shape, 8);
  const BoundModel b(m, m.items(), m.topics());
  const auto s = oracle::skeleton(shape, InterfaceKind::single_list);
  auto prior = unassigned(shape);
  CHECK_THROWS_WITH_AS(b.conditional(s, {0, 2}, prior), doctest::Contains("incomplete prior"), ValidationError);
  prior(0, 0) = 1;
  prior(0, 1) = 0;
  const double q = b.conditional(s, {0, 2}, prior);
  prior(0, 2) = 1;
  CHECK(b.conditional(s, {0, 2}, prior) == q);
  CHECK_NOTHROW(b.conditional(s, {0, 0}, unassigned(shape)));
  CHECK_THROWS_AS(b.conditional(s, {0, 3}, prior), ValidationError);
}

TEST_CASE("compatibility checks") {
  const auto m = random_instance(ModelKind::cacm, {2, 2}, 9);
  const BoundModel b(m, m.items(), m.topics());
  auto grid = oracle::skeleton({2, 2}, InterfaceKind::grid);
  CHECK_THROWS_AS(b.joint_log_likelihood(grid), ValidationError);
  const auto pbm = random_instance(ModelKind::pbm, {1, 3}, 9);
  const BoundModel bp(pbm, pbm.items(), pbm.topics());
  CHECK_THROWS_AS(bp.joint_log_likelihood(oracle::skeleton({1, 2}, InterfaceKind::single_list)), ValidationError);
}

TEST_CASE("unseen items fall back to the unseen default") {
  const auto m = constant_model(ModelKind::dctr, {1, 2}, names("i", 2), {}, 0.2);
  Vocabulary other;
  other.intern("i1");
  other.intern("new");
  const BoundModel b(m, other, {});
  auto s = oracle::skeleton({1, 2}, InterfaceKind::single_list);
  CHECK(b.conditional(s, {0, 0}, unassigned({1, 2})) == 0.2);
  CHECK(b.conditional(s, {0, 1}, unassigned({1, 2})) == m.unseen_default());
}

TEST_CASE("click-independent kinds ignore the prior bit for bit") {
  RandomStream rng(42, 0);
  for (auto kind : {ModelKind::rcm, ModelKind::rctr, ModelKind::dctr, ModelKind::pbm, ModelKind::trust_pbm,
                    ModelKind::topics_items_v1, ModelKind::topics_items_v2}) {
    const LayoutShape shape{2, 3};
    const auto m = random_instance(kind, shape, 12);
    const BoundModel b(m, m.items(), m.topics());
    const auto s = oracle::skeleton(shape, interface_for(kind, shape));
    const auto base = b.teacher_forced(s);
    for (int t = 0; t < 50; ++t) {
      ClickAssignment prior(shape.m, shape.n);
      for (Eigen::Index r = 0; r < prior.size(); ++r) prior.data()[r] = static_cast<std::int8_t>(rng.below(3)) - 1;
      for (int i = 0; i < shape.m; ++i) {
        for (int j = 0; j < shape.n; ++j) {
          CAPTURE(to_string(kind));
          CHECK(b.conditional(s, {i, j}, prior) == base(i, j));
        }
      }
    }
  }
}

TEST_CASE("pbm factor rescaling leaves conditionals unchanged") {
  const LayoutShape shape{1, 3};
  const Vocabulary items = names("i", 3);
  Eigen::VectorXd theta(6);
  theta << 1.0, 0.5, 0.25, 0.5, 0.25, 0.125;
  const auto a = make_model_from_vector(ModelKind::pbm, shape, items, {}, theta);
  theta.head(3) *= 0.5;
  theta.tail(3) *= 2.0;
  const auto b = make_model_from_vector(ModelKind::pbm, shape, items, {}, theta);
  const BoundModel ba(a, items, {}), bb(b, items, {});
  auto s = oracle::skeleton(shape, InterfaceKind::single_list);
  for (std::uint64_t k = 0; k < 8; ++k) {
    s.clicks = oracle::pattern(shape, k);
    CHECK(ba.joint_log_likelihood(s) == bb.joint_log_likelihood(s));
  }
}

TEST_CASE("degenerate kinds reduce to dctr") {
  const LayoutShape shape{1, 4};
  const auto dctr = random_instance(ModelKind::dctr, shape, 21);
  Eigen::VectorXd g = dctr.parameters();

  Eigen::VectorXd pbm_theta(4 + 4);
  pbm_theta << Eigen::VectorXd::Ones(4), g;
  const auto pbm = make_model_from_vector(ModelKind::pbm, shape, dctr.items(), {}, pbm_theta);
  Eigen::VectorXd ubm_theta(4 + 10);
  ubm_theta << g, Eigen::VectorXd::Ones(10);
  const auto ubm = make_model_from_vector(ModelKind::ubm, shape, dctr.items(), {}, ubm_theta);

  const BoundModel bd(dctr, dctr.items(), {}), bp(pbm, dctr.items(), {}), bu(ubm, dctr.items(), {});
  auto s = oracle::skeleton(shape, InterfaceKind::single_list);
  for (std::uint64_t k = 0; k < 16; ++k) {
    s.clicks = oracle::pattern(shape, k);
    const auto prior = to_assignment(s.clicks);
    for (int j = 0; j < 4; ++j) {
      CHECK(bp.conditional(s, {0, j}, prior) == bd.conditional(s, {0, j}, prior));
      CHECK(bu.conditional(s, {0, j}, prior) == bd.conditional(s, {0, j}, prior));
    }
  }
}
