#include "clickmodel/error.hpp"
#include "clickmodel/random.hpp"
#include "clickmodel/taxonomy.hpp"

#include "oracles.hpp"

#include <doctest.h>

using namespace clickmodel;

TEST_CASE("every dependency subset maps to its category") {
  CHECK(display_name(classify(parse_deps(""))) == "Random");
  CHECK(display_name(classify(parse_deps("clicks"))) == "Clicks-Only");
  CHECK(display_name(classify(parse_deps("items"))) == "Items-Only");
  CHECK(display_name(classify(parse_deps("items,clicks"))) == "Items-Clicks");
  CHECK(display_name(classify(parse_deps("topics"))) == "Topics-Only");
  CHECK(display_name(classify(parse_deps("topics,clicks"))) == "Topics-Clicks");
  CHECK(display_name(classify(parse_deps("topics,items"))) == "Topics-Items");
  CHECK(display_name(classify(parse_deps("clicks,items,topics"))) == "Fully Dependent");
  CHECK(parse_deps("none") == parse_deps(""));
  CHECK_THROWS_AS(parse_deps("items,positions"), ValidationError);
  CHECK(kAllCategories.size() == 8);
}

TEST_CASE("catalog categories") {
  const std::vector<std::pair<std::string, std::string>> golden = {
      {"rcm", "Random"},           {"rctr", "Random"},          {"dctr", "Items-Only"},
      {"pbm", "Items-Only"},       {"trust_pbm", "Items-Only"}, {"cascade", "Items-Clicks"},
      {"ubm", "Items-Clicks"},     {"dcm", "Items-Clicks"},     {"dbn", "Items-Clicks"},
      {"cacm", "Fully Dependent"}, {"topics_items_v1", "Topics-Items"}, {"topics_items_v2", "Topics-Items"},
      {"csm", "Items-Only"},       {"ncm", "Items-Clicks"},
  };
  for (const auto& [name, category] : golden) {
    CAPTURE(name);
    CHECK(display_name(classify(descriptor_of(name).deps)) == category);
  }
  for (const auto& name : catalog_descriptor_names()) {
    CAPTURE(name);
    CHECK_NOTHROW(validate_descriptor(descriptor_of(name)));
  }
  CHECK_THROWS_AS(descriptor_of("nope"), ValidationError);
}

TEST_CASE("set builders resolve against a position") {
  const LayoutShape shape{2, 3};
  SequentialitySpec seq;
  seq.clicks = SetBuilder::same_row_prefix;
  CHECK(seq.cond_clicks(shape, {1, 2}) == std::vector<Position>{{1, 0}, {1, 1}});
  seq.clicks = SetBuilder::prefix_rows;
  CHECK(seq.cond_clicks(shape, {1, 0}) == std::vector<Position>{{0, 0}, {0, 1}, {0, 2}});
  seq.clicks = SetBuilder::prefix_clicks;
  CHECK(seq.cond_clicks(shape, {1, 1}).size() == 4);
  seq.clicks = SetBuilder::all;
  CHECK(seq.cond_clicks(shape, {0, 0}).size() == 5);
  seq.items = SetBuilder::prefix_items;
  CHECK(seq.cond_items(shape, {1, 1}) == std::vector<Position>{{1, 0}, {1, 1}});
  seq.topics = SetBuilder::prefix_rows;
  CHECK(seq.cond_topics(shape, {1, 2}) == std::vector<int>{0, 1});
  CHECK_FALSE(builder_allowed(Variable::clicks, SetBuilder::self));
  CHECK_FALSE(builder_allowed(Variable::topics, SetBuilder::prefix_items));
}

TEST_CASE("the three-click counterexample is cyclic") {
  ExplicitClickSets sets;
  sets[{0, 1}] = {{0, 0}};
  sets[{0, 2}] = {{0, 1}};
  sets[{0, 0}] = {{0, 2}};
  SequentialitySpec seq;
  seq.explicit_clicks = sets;
  const LayoutShape shape{1, 3};
  try {
    validate_sequentiality(seq, shape);
    FAIL("expected a cycle");
  } catch (const CycleError& e) {
    CHECK(e.cycle() == std::vector<Position>{{0, 0}, {0, 1}, {0, 2}, {0, 0}});
    CHECK(oracle::is_cycle(seq, shape, e.cycle()));
  }
  CHECK_THROWS_AS(validate_sequentiality(seq), CycleError);
  sets.erase({0, 0});
  seq.explicit_clicks = sets;
  CHECK_NOTHROW(validate_sequentiality(seq, shape));
}

TEST_CASE("self-dependency and out-of-layout conditions are rejected") {
  SequentialitySpec seq;
  seq.explicit_clicks = ExplicitClickSets{{{0, 0}, {{0, 0}}}};
  CHECK_THROWS_AS(validate_sequentiality(seq, LayoutShape{1, 2}), ValidationError);
  seq.explicit_clicks = ExplicitClickSets{{{0, 0}, {{0, 5}}}};
  CHECK_THROWS_AS(validate_sequentiality(seq, LayoutShape{1, 2}), ValidationError);
}

TEST_CASE("cycle detection agrees with Kahn on random graphs") {
  RandomStream rng(99, 0);
  for (int trial = 0; trial < 400; ++trial) {
    const LayoutShape shape{1 + static_cast<int>(rng.below(3)), 1 + static_cast<int>(rng.below(4))};
    const int cells = shape.cells();
    ExplicitClickSets sets;
    for (int p = 0; p < cells; ++p) {
      for (int q = 0; q < cells; ++q) {
        if (p != q && rng.uniform() < 0.18) sets[from_flat(shape, p)].push_back(from_flat(shape, q));
      }
    }
    SequentialitySpec seq;
    seq.explicit_clicks = sets;
    const auto cycle = find_click_cycle(seq, shape);
    CAPTURE(trial);
    CHECK(cycle.has_value() == !oracle::acyclic(seq, shape));
    if (cycle) CHECK(oracle::is_cycle(seq, shape, *cycle));
  }
}

TEST_CASE("catalog builders are acyclic on every small layout") {
  for (const auto& name : catalog_descriptor_names()) {
    const auto d = descriptor_of(name);
    for (int m = 1; m <= 3; ++m) {
      for (int n = 1; n <= 4; ++n) {
        CAPTURE(name);
        CHECK(oracle::acyclic(d.seq, LayoutShape{m, n}));
      }
    }
  }
}

TEST_CASE("descriptor validation") {
  auto d = descriptor_of("pbm");
  SUBCASE("conditioning on an excluded tuple") {
    d.deps = parse_deps("");
    CHECK_THROWS_AS(validate_descriptor(d), ValidationError);
  }
  SUBCASE("factor scopes must cover the conditioned tuples") {
    d.fact.factors = {{ScopeElement::position}};
    CHECK_THROWS_AS(validate_descriptor(d), ValidationError);
  }
  SUBCASE("clicks builder self is a self-dependency") {
    d.deps = parse_deps("items,clicks");
    d.seq.clicks = SetBuilder::self;
    CHECK_THROWS_WITH_AS(validate_descriptor(d), doctest::Contains("self"), ValidationError);
  }
  SUBCASE("an additive term needs a product to add to") {
    d.fact.factors = {{ScopeElement::items}};
    d.fact.combine = Combine::product_plus_term;
    CHECK_THROWS_AS(validate_descriptor(d), ValidationError);
  }
}

TEST_CASE("equivalence is syntactic up to factor order") {
  CHECK(equivalent(descriptor_of("pbm"), descriptor_of("trust_bias")));
  CHECK_FALSE(equivalent(descriptor_of("pbm"), descriptor_of("trust_pbm")));
  CHECK_FALSE(equivalent(descriptor_of("cascade"), descriptor_of("dcm")));
  CHECK(equivalent(descriptor_of("cascade"), descriptor_of("ubm")));
  auto swapped = descriptor_of("pbm");
  std::swap(swapped.fact.factors[0], swapped.fact.factors[1]);
  CHECK(equivalent(descriptor_of("pbm"), swapped));
  auto trust = descriptor_of("trust_pbm");
  std::swap(trust.fact.factors[1], trust.fact.factors[2]);
  CHECK_FALSE(equivalent(descriptor_of("trust_pbm"), trust));
}

TEST_CASE("descriptor exchange format round-trips") {
  for (const auto& name : catalog_descriptor_names()) {
    const auto d = descriptor_of(name);
    CAPTURE(name);
    CHECK(descriptor_from_json(descriptor_to_json(d)) == d);
  }
  ModelDescriptor d = descriptor_of("dbn");
  d.seq.explicit_clicks = ExplicitClickSets{{{0, 1}, {{0, 0}}}};
  CHECK(descriptor_from_json(descriptor_to_json(d)) == d);
  CHECK_THROWS_AS(descriptor_from_json("{\"deps\":[\"items\"]}"), ValidationError);
  CHECK_THROWS_AS(descriptor_from_json("not json"), ValidationError);
}
