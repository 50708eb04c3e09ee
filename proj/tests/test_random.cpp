#include <doctest.h>

#include <cmath>
#include <set>

#include "freespectra/random.hpp"

using namespace fsp;

TEST_CASE("Philox4x32-10 known-answer vectors") {
  using A4 = std::array<std::uint32_t, 4>;
  CHECK(RandomStream::philox({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  const std::uint32_t f = 0xffffffffu;
  CHECK(RandomStream::philox({f, f, f, f}, {f, f}) == A4{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(RandomStream::philox({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        A4{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("streams are reproducible and distinct") {
  RandomStream a(7, 3);
  RandomStream b(7, 3);
  RandomStream c(7, 4);
  RandomStream d(8, 3);
  std::set<std::uint64_t> seen;
  bool differ_c = false;
  bool differ_d = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    differ_c |= x != c.next_u64();
    differ_d |= x != d.next_u64();
    seen.insert(x);
  }
  CHECK(differ_c);
  CHECK(differ_d);
  CHECK(seen.size() == 100);
}

TEST_CASE("stream ids") {
  CHECK(wigner_stream(0, 0) == 0);
  CHECK(wigner_stream(1, 2) == 0x10002u);
  CHECK(convolution_stream(1, 2) == (0x10002u | (std::uint64_t{1} << 63)));
  CHECK(wigner_stream(5, 1) != wigner_stream(1, 5));
}

TEST_CASE("uniform and normal moments") {
  RandomStream rng(42, 0);
  const int count = 200000;
  double su = 0.0;
  double sn = 0.0;
  double sn2 = 0.0;
  double sn4 = 0.0;
  double lo = 1.0;
  double hi = 0.0;
  for (int i = 0; i < count; ++i) {
    const double u = rng.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    su += u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
    sn4 += z * z * z * z;
  }
  CHECK(lo > 0.0);
  CHECK(hi < 1.0);
  // 5 sigma bands
  CHECK(std::abs(su / count - 0.5) < 5 * std::sqrt(1.0 / 12 / count));
  CHECK(std::abs(sn / count) < 5 / std::sqrt(count));
  CHECK(std::abs(sn2 / count - 1.0) < 5 * std::sqrt(2.0 / count));
  CHECK(std::abs(sn4 / count - 3.0) < 5 * std::sqrt(96.0 / count));
}
