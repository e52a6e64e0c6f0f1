#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <vector>

#include "iib/raster.hpp"
#include "iib/rng.hpp"
#include "support/test_util.hpp"

using iib::Raster;
using iib::errc;

namespace {

void write_bytes(const std::filesystem::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream os(p, std::ios::binary);
  os.write(reinterpret_cast<const char*>(bytes.data()),
           static_cast<std::streamsize>(bytes.size()));
}

std::vector<unsigned char> read_bytes(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const iib::error& e) {
    return e.code();
  }
  throw std::runtime_error("expected an iib::error");
}

}  // namespace

TEST_CASE("raster construction validates geometry and finiteness") {
  CHECK_NOTHROW(Raster(1, 2, 2, {0, 0, 0, 0}));

  CHECK(code_of([] { Raster(2, 2, 2, {1, 2, 3, 4, 5, 6, 7}); }) == errc::dimension_mismatch);
  CHECK(code_of([] { Raster(1, 1, 1, {std::numeric_limits<double>::quiet_NaN()}); }) ==
        errc::non_finite_sample);
  CHECK(code_of([] { Raster(0, 2, 2, {}); }) == errc::dimension_mismatch);
  CHECK(code_of([] { Raster(1, 1, 1, {std::numeric_limits<double>::infinity()}); }) ==
        errc::non_finite_sample);
}

TEST_CASE("band_stats matches hand-evaluated N-1 statistics") {
  const Raster constant = Raster::filled(1, 3, 3, 0.7);
  const auto cs = iib::band_stats(constant, 0);
  CHECK(cs.mean == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(cs.variance == 0.0);

  const Raster r(1, 2, 2, {1, 2, 3, 4});
  const auto s = iib::band_stats(r, 0);
  CHECK(s.mean == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(s.variance == doctest::Approx(5.0 / 3.0).epsilon(1e-15));

  const Raster two(1, 1, 2, {0, 1});
  const auto t = iib::band_stats(two, 0);
  CHECK(t.mean == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(t.variance == doctest::Approx(0.5).epsilon(1e-15));

  const Raster single(1, 1, 1, {0.3});
  CHECK(iib::band_stats(single, 0).variance == 0.0);

  CHECK(code_of([&] { iib::band_stats(r, 1); }) == errc::band_out_of_range);
}

TEST_CASE("covariance: hand value, self-consistency, constants, symmetry") {
  const std::vector<double> x{1, 2, 3, 4};
  const std::vector<double> y{2, 3, 4, 5};
  CHECK(iib::covariance(x, y) == doctest::Approx(5.0 / 3.0).epsilon(1e-15));

  const Raster rx(1, 2, 2, x);
  CHECK(iib::covariance(rx.band(0), rx.band(0)) == iib::band_stats(rx, 0).variance);

  const std::vector<double> c{0.4, 0.4, 0.4, 0.4};
  CHECK(iib::covariance(x, c) == 0.0);

  iib::SplitMix64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(17), b(17);
    for (auto& v : a) v = rng.uniform(-1, 1);
    for (auto& v : b) v = rng.uniform(-1, 1);
    const double ab = iib::covariance(a, b);
    const double ba = iib::covariance(b, a);
    CHECK(std::memcmp(&ab, &ba, sizeof(double)) == 0);
  }

  CHECK(code_of([&] { iib::covariance(x, std::vector<double>{1, 2}); }) == errc::shape_mismatch);
  CHECK(code_of([&] {
    iib::covariance(std::vector<double>{1}, std::vector<double>{2});
  }) == errc::too_few_samples);
}

TEST_CASE("variance is non-negative and zero only for constant bands") {
  iib::SplitMix64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const auto r = testutil::random_raster(rng, 1, 5, 7);
    const auto s = iib::band_stats(r, 0);
    CHECK(s.variance >= 0.0);
    CHECK(s.variance > 0.0);  // random draws are never constant
  }
  CHECK(iib::band_stats(Raster::filled(1, 4, 4, 0.123), 0).variance == 0.0);
}

TEST_CASE("BRF round-trip is bit-identical for binary32 samples") {
  testutil::TempDir dir("brf");
  iib::SplitMix64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int b = 1 + static_cast<int>(rng.next() % 4);
    const int h = 1 + static_cast<int>(rng.next() % 9);
    const int w = 1 + static_cast<int>(rng.next() % 9);
    const Raster r = testutil::random_raster_f32(rng, b, h, w);
    const auto p = dir.path() / ("t" + std::to_string(trial) + ".brf");
    iib::write_brf(p, r);
    const Raster back = iib::read_brf(p);
    CHECK(back == r);
  }
}

TEST_CASE("BRF rejects malformed files") {
  testutil::TempDir dir("brfbad");

  const auto magic = dir.path() / "magic.brf";
  write_bytes(magic, {'X', 'X', 'X', 'X', 1, 0, 1, 0, 1, 0, 0, 0, 1, 0, 0, 0});
  CHECK(code_of([&] { iib::read_brf(magic); }) == errc::bad_magic);

  // Header declares 2x2x2 but only 7 floats follow.
  const auto trunc = dir.path() / "trunc.brf";
  {
    std::vector<unsigned char> bytes = {'I', 'I', 'B', 'R', 1, 0, 2, 0,
                                        2,   0,   0,   0,   2, 0, 0, 0};
    for (int i = 0; i < 7 * 4; ++i) bytes.push_back(0);
    write_bytes(trunc, bytes);
  }
  CHECK(code_of([&] { iib::read_brf(trunc); }) == errc::truncated_file);

  const auto vers = dir.path() / "vers.brf";
  {
    std::vector<unsigned char> bytes = {'I', 'I', 'B', 'R', 9, 0, 1, 0,
                                        1,   0,   0,   0,   1, 0, 0, 0};
    for (int i = 0; i < 4; ++i) bytes.push_back(0);
    write_bytes(vers, bytes);
  }
  CHECK(code_of([&] { iib::read_brf(vers); }) == errc::version_unsupported);

  // 1x1x1 payload of a binary32 NaN (0x7FC00000).
  const auto nan = dir.path() / "nan.brf";
  write_bytes(nan, {'I', 'I', 'B', 'R', 1, 0, 1, 0, 1, 0, 0, 0, 1, 0, 0, 0,
                    0x00, 0x00, 0xC0, 0x7F});
  CHECK(code_of([&] { iib::read_brf(nan); }) == errc::non_finite_sample);

  const auto missing = dir.path() / "missing.brf";
  CHECK(code_of([&] { iib::read_brf(missing); }) == errc::io_error);

  const auto trailing = dir.path() / "trailing.brf";
  {
    std::vector<unsigned char> bytes = {'I', 'I', 'B', 'R', 1, 0, 1, 0,
                                        1,   0,   0,   0,   1, 0, 0, 0};
    for (int i = 0; i < 8; ++i) bytes.push_back(0);  // one float too many
    write_bytes(trailing, bytes);
  }
  CHECK(code_of([&] { iib::read_brf(trailing); }) == errc::io_error);
}

TEST_CASE("BRF writes are deterministic") {
  testutil::TempDir dir("brfdet");
  iib::SplitMix64 rng(5);
  const Raster r = testutil::random_raster_f32(rng, 2, 6, 5);
  const auto p1 = dir.path() / "a.brf";
  const auto p2 = dir.path() / "b.brf";
  iib::write_brf(p1, r);
  iib::write_brf(p2, r);
  CHECK(read_bytes(p1) == read_bytes(p2));
}

TEST_CASE("sample triple validation") {
  const Raster lms(2, 4, 4);
  const Raster pan(1, 4, 4);
  const Raster target(2, 4, 4);
  iib::SampleTriple good{lms, pan, target};
  CHECK_NOTHROW(good.validate());

  iib::SampleTriple bad_pan{lms, Raster(2, 4, 4), target};
  CHECK(code_of([&] { bad_pan.validate(); }) == errc::geometry_mismatch);

  iib::SampleTriple bad_dims{lms, pan, Raster(2, 5, 4)};
  CHECK(code_of([&] { bad_dims.validate(); }) == errc::geometry_mismatch);
}
