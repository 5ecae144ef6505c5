#include "clickmodel/random.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace clickmodel;

// Known-answer vectors of the reference Philox4x32-10 implementation.
TEST_CASE("philox known answers") {
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == PhiloxCounter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        PhiloxCounter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        PhiloxCounter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and distinct") {
  RandomStream a(7, 3), b(7, 3), c(7, 4), d(8, 3);
  std::vector<std::uint32_t> va, vb, vc, vd;
  for (int k = 0; k < 20; ++k) {
    va.push_back(a.next_u32());
    vb.push_back(b.next_u32());
    vc.push_back(c.next_u32());
    vd.push_back(d.next_u32());
  }
  CHECK(va == vb);
  CHECK(va != vc);
  CHECK(va != vd);
}

TEST_CASE("first block of a stream is philox of its first counter") {
  RandomStream s(0x0000000200000001ULL, 0x0000000400000003ULL);
  const auto block = philox4x32_10({3, 4, 0, 0}, {1, 2});
  for (auto w : block) CHECK(s.next_u32() == w);
  const auto next = philox4x32_10({3, 4, 1, 0}, {1, 2});
  CHECK(s.next_u32() == next[0]);
}

TEST_CASE("uniform lies in [0,1) with the right mean") {
  RandomStream s(1, 0);
  double sum = 0.0;
  const int n = 200000;
  for (int k = 0; k < n; ++k) {
    const double u = s.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(std::abs(sum / n - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST_CASE("below is unbiased over a small range") {
  RandomStream s(2, 0);
  std::vector<int> counts(6, 0);
  const int n = 120000;
  for (int k = 0; k < n; ++k) {
    const auto v = s.below(6);
    REQUIRE(v < 6);
    ++counts[v];
  }
  const double p = 1.0 / 6.0;
  for (int c : counts) CHECK(std::abs(c - n * p) < 4.0 * std::sqrt(n * p * (1 - p)));
  CHECK(s.below(1) == 0);
}
