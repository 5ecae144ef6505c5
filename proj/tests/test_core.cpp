#include "clickmodel/core.hpp"
#include "clickmodel/error.hpp"
#include "clickmodel/log_io.hpp"

#include <doctest.h>

#include <sstream>

using namespace clickmodel;

TEST_CASE("shapes and positions parse and print 1-based") {
  CHECK(parse_shape("2x3") == LayoutShape{2, 3});
  CHECK(to_string(LayoutShape{4, 5}) == "4x5");
  CHECK_THROWS_AS(parse_shape("2by3"), ValidationError);
  CHECK_THROWS_AS(parse_shape("0x3"), ValidationError);
  CHECK(parse_position("1,1") == Position{0, 0});
  CHECK(to_string(Position{1, 2}) == "2,3");
  CHECK_THROWS_AS(parse_position("0,1"), ValidationError);
  CHECK_THROWS_AS(parse_position("x"), ValidationError);
  const LayoutShape s{2, 3};
  CHECK(flat_index(s, {1, 2}) == 5);
  CHECK(from_flat(s, 4) == Position{1, 1});
  CHECK(contains(s, {1, 2}));
  CHECK_FALSE(contains(s, {2, 0}));
}

TEST_CASE("interface kinds round-trip") {
  for (auto k : {InterfaceKind::single_list, InterfaceKind::grid, InterfaceKind::carousel}) {
    CHECK(parse_interface_kind(to_string(k)) == k);
  }
  CHECK_THROWS_AS(parse_interface_kind("list"), ValidationError);
}

TEST_CASE("vocabulary interns in first-seen order") {
  Vocabulary v;
  CHECK(v.intern("b") == 0);
  CHECK(v.intern("a") == 1);
  CHECK(v.intern("b") == 0);
  CHECK(v.find("a") == 1);
  CHECK_FALSE(v.find("c").has_value());
  v.truncate(1);
  CHECK(v.size() == 1);
  CHECK_FALSE(v.find("a").has_value());
}

TEST_CASE("session invariants") {
  ClickLog log;
  log.add(InterfaceKind::single_list, {}, {{"a", "b", "c"}}, {{0, 1, 0}});
  CHECK(log.size() == 1);
  CHECK(log.shape() == LayoutShape{1, 3});

  SUBCASE("duplicate items are rejected and the vocabulary rolls back") {
    CHECK_THROWS_AS(log.add(InterfaceKind::single_list, {}, {{"d", "d", "e"}}, {{0, 0, 0}}), ValidationError);
    CHECK(log.items().size() == 3);
    CHECK(log.size() == 1);
  }
  SUBCASE("shape and kind must match the log") {
    CHECK_THROWS_AS(log.add(InterfaceKind::single_list, {}, {{"a", "b"}}, {{0, 0}}), ValidationError);
    CHECK_THROWS_AS(log.add(InterfaceKind::grid, {}, {{"a", "b", "c"}}, {{0, 0, 0}}), ValidationError);
  }
  SUBCASE("clicks must be binary") {
    CHECK_THROWS_AS(log.add(InterfaceKind::single_list, {}, {{"a", "b", "c"}}, {{0, 2, 0}}), ValidationError);
  }
  SUBCASE("topics only for carousels") {
    CHECK_THROWS_WITH_AS(log.add(InterfaceKind::single_list, {"t"}, {{"a", "b", "c"}}, {{0, 0, 0}}),
                         doctest::Contains("topics forbidden"), ValidationError);
  }
}

TEST_CASE("single lists need one row, carousels one topic per row") {
  ClickLog a;
  CHECK_THROWS_AS(a.add(InterfaceKind::single_list, {}, {{"a"}, {"b"}}, {{0}, {0}}), ValidationError);
  ClickLog b;
  CHECK_THROWS_AS(b.add(InterfaceKind::carousel, {"t"}, {{"a"}, {"b"}}, {{0}, {0}}), ValidationError);
  b.add(InterfaceKind::carousel, {"t", "u"}, {{"a"}, {"b"}}, {{0}, {1}});
  CHECK(b.topics().size() == 2);
  ClickLog empty;
  CHECK_THROWS_AS((void)empty.shape(), ValidationError);
}

TEST_CASE("complement view unassigns exactly one cell") {
  ClickLog log;
  log.add(InterfaceKind::grid, {}, {{"a", "b"}, {"c", "d"}}, {{1, 0}, {0, 1}});
  const auto v = complement_view(log[0], {1, 1});
  CHECK(v(1, 1) == kUnassigned);
  CHECK(v(0, 0) == 1);
  CHECK(v(0, 1) == 0);
  CHECK_THROWS_AS(complement_view(log[0], {2, 0}), ValidationError);
}

TEST_CASE("log round-trips through the line format") {
  ClickLog log;
  log.add(InterfaceKind::carousel, {"t1", "t2"}, {{"a", "b"}, {"c", "d"}}, {{0, 1}, {0, 0}});
  log.add(InterfaceKind::carousel, {"t2", "t1"}, {{"d", "a"}, {"b", "e"}}, {{1, 0}, {0, 1}});
  std::stringstream buf;
  write_log(log, buf);
  const auto text = buf.str();
  CHECK(text.rfind("{\"format\":\"clicklog\",\"version\":1}\n", 0) == 0);
  std::istringstream in(text);
  const auto back = parse_log(in);
  CHECK(back == log);
  std::stringstream again;
  write_log(back, again);
  CHECK(again.str() == text);
}

TEST_CASE("parse errors carry the line number") {
  auto line_of = [](const std::string& text) -> std::size_t {
    std::istringstream in(text);
    try {
      (void)parse_log(in);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  const std::string good = R"({"kind":"single_list","items":[["a","b"]],"clicks":[[0,1]]})";
  CHECK(line_of(good + "\n" + good + "\n{oops\n") == 3);
  CHECK(line_of(good + "\n" + R"({"kind":"single_list","items":[["a","b"]],"clicks":[[0,2]]})") == 2);
  CHECK(line_of(R"({"kind":"carousel","items":[["a","b"]],"clicks":[[0,1]]})") == 1);
  CHECK(line_of(R"({"kind":"single_list","items":[["a","b"]],"clicks":[[0,1]],"extra":1})") == 1);
  CHECK(line_of(R"({"kind":"single_list","items":[["a","a"]],"clicks":[[0,1]]})") == 1);
  CHECK(line_of(good + "\n" + R"({"kind":"single_list","items":[["a","b","c"]],"clicks":[[0,1,0]]})") == 2);
  CHECK(line_of(good + "\n" + good) == 0);
}

TEST_CASE("empty input gives an empty log") {
  std::istringstream in("");
  CHECK(parse_log(in).empty());
  std::istringstream header("{\"format\":\"clicklog\",\"version\":1}\n");
  CHECK(parse_log(header).empty());
}
