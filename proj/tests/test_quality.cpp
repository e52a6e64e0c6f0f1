#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <functional>
#include <vector>

#include "iib/quality.hpp"
#include "iib/raster.hpp"
#include "iib/rng.hpp"
#include "support/test_util.hpp"

using iib::QConfig;
using iib::Raster;
using iib::errc;

namespace {

iib::errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const iib::error& e) {
    return e.code();
  }
  throw std::runtime_error("expected an iib::error");
}

bool bitwise_equal(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

}  // namespace

TEST_CASE("q_local hand anchor: [1,2,3,4] vs [2,3,4,5] equals 175/185") {
  const std::vector<double> x{1, 2, 3, 4};
  const std::vector<double> y{2, 3, 4, 5};
  const double q = iib::q_local(x, y, 0.0);
  CHECK(std::fabs(q - 175.0 / 185.0) <= 1e-12);
}

TEST_CASE("q_local of an image with itself is exactly one") {
  iib::SplitMix64 rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(64);
    for (auto& v : x) v = rng.uniform();
    CHECK(iib::q_local(x, x, 0.0) == 1.0);
  }
}

TEST_CASE("q_local degenerate handling") {
  const std::vector<double> cx(16, 0.25);
  const std::vector<double> cy(16, 0.75);
  CHECK(code_of([&] { iib::q_local(cx, cy, 0.0); }) == errc::degenerate_window);
  // Loss-side epsilon keeps the window defined and scores it 0.
  CHECK(iib::q_local(cx, cy, 1e-8) == 0.0);
  // Both means zero is the other vanishing factor.
  const std::vector<double> zx{ -0.5, 0.5, -0.5, 0.5 };
  const std::vector<double> zy{ 0.5, -0.5, 0.5, -0.5 };
  CHECK(code_of([&] { iib::q_local(zx, zy, 0.0); }) == errc::degenerate_window);
}

TEST_CASE("q_local magnitude never exceeds one") {
  iib::SplitMix64 rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(36), y(36);
    for (auto& v : x) v = rng.uniform(-1, 1);
    for (auto& v : y) v = rng.uniform(-1, 1);
    bool deg = false;
    const double q = iib::q_from_stats(iib::window_stats(x, y), 0.0, &deg);
    if (!deg) CHECK(std::fabs(q) <= 1.0 + 1e-12);
  }
}

TEST_CASE("q_index is symmetric bitwise and one on the diagonal") {
  iib::SplitMix64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const Raster x = testutil::random_raster(rng, 1, 19, 23);
    const Raster y = testutil::random_raster(rng, 1, 19, 23);
    const QConfig cfg{5, 3, 0.0};
    CHECK(bitwise_equal(iib::q_index(x, 0, y, 0, cfg), iib::q_index(y, 0, x, 0, cfg)));
    CHECK(iib::q_index(x, 0, x, 0, cfg) == 1.0);
  }
}

TEST_CASE("q_index over a single window equals q_local of the whole image") {
  iib::SplitMix64 rng(2);
  const Raster x = testutil::random_raster(rng, 1, 6, 6);
  const Raster y = testutil::random_raster(rng, 1, 6, 6);
  const QConfig cfg{6, 1, 0.0};
  std::vector<double> fx(x.band(0).begin(), x.band(0).end());
  std::vector<double> fy(y.band(0).begin(), y.band(0).end());
  CHECK(iib::q_index(x, 0, y, 0, cfg) == iib::q_local(fx, fy, 0.0));
}

TEST_CASE("q_index matches the naive per-window oracle") {
  iib::SplitMix64 rng(3);
  for (int trial = 0; trial < 15; ++trial) {
    const int h = 8 + static_cast<int>(rng.next() % 17);
    const int w = 8 + static_cast<int>(rng.next() % 17);
    const Raster x = testutil::random_raster(rng, 1, h, w);
    const Raster y = testutil::random_raster(rng, 1, h, w);
    const int window = 2 + static_cast<int>(rng.next() % 7);
    const int stride = 1 + static_cast<int>(rng.next() % 4);
    const QConfig cfg{window, stride, 0.0};
    bool all_deg = false;
    const double expected =
        testutil::q_index_naive(x, 0, y, 0, window, stride, 0.0, &all_deg);
    REQUIRE_FALSE(all_deg);
    CHECK(std::fabs(iib::q_index(x, 0, y, 0, cfg) - expected) <= 1e-10);
  }
}

TEST_CASE("q_index excludes degenerate windows and errors when all are") {
  // Left half constant in both images, right half random: with a block
  // stride the left windows are degenerate and must not enter the mean.
  iib::SplitMix64 rng(4);
  Raster x(1, 4, 8);
  Raster y(1, 4, 8);
  for (int yy = 0; yy < 4; ++yy) {
    for (int xx = 0; xx < 8; ++xx) {
      x(0, yy, xx) = xx < 4 ? 0.5 : rng.uniform();
      y(0, yy, xx) = xx < 4 ? 0.25 : rng.uniform();
    }
  }
  const QConfig cfg{4, 4, 0.0};
  bool all_deg = false;
  const double expected = testutil::q_index_naive(x, 0, y, 0, 4, 4, 0.0, &all_deg);
  REQUIRE_FALSE(all_deg);
  CHECK(std::fabs(iib::q_index(x, 0, y, 0, cfg) - expected) <= 1e-10);

  const Raster cx = Raster::filled(1, 4, 4, 0.5);
  const Raster cy = Raster::filled(1, 4, 4, 0.75);
  CHECK(code_of([&] { iib::q_index(cx, 0, cy, 0, QConfig{4, 4, 0.0}); }) ==
        errc::all_windows_degenerate);
}

TEST_CASE("uiqi: identity is exactly one, independent noise scores low") {
  iib::SplitMix64 rng(5);
  const QConfig cfg{8, 1, 0.0};
  const Raster m = testutil::random_raster(rng, 3, 24, 24);
  CHECK(iib::uiqi(m, m, cfg) == 1.0);

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    iib::SplitMix64 noise_rng(seed);
    const Raster a = testutil::random_raster(noise_rng, 2, 32, 32);
    const Raster b = testutil::random_raster(noise_rng, 2, 32, 32);
    CHECK(iib::uiqi(a, b, cfg) < 0.5);
  }

  CHECK(code_of([&] { iib::uiqi(m, Raster(3, 25, 24), cfg); }) == errc::shape_mismatch);
}

TEST_CASE("sam: exact zero on identity, scale invariance, right angles") {
  iib::SplitMix64 rng(6);
  const Raster m = testutil::random_raster(rng, 4, 12, 12, 0.1, 1.0);
  CHECK(iib::sam_degrees(m, m) == 0.0);

  Raster scaled = m;
  for (double& v : scaled.samples()) v *= 2.5;
  CHECK(iib::sam_degrees(scaled, m) <= 1e-5);

  Raster fx(2, 3, 3), mx(2, 3, 3);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x) {
      fx(0, y, x) = 1.0;
      fx(1, y, x) = 0.0;
      mx(0, y, x) = 0.0;
      mx(1, y, x) = 1.0;
    }
  CHECK(iib::sam_degrees(fx, mx) == doctest::Approx(90.0).epsilon(1e-12));

  // A pixel with an all-zero spectral vector is skipped.
  Raster holed = m;
  for (int b = 0; b < holed.bands(); ++b) holed(b, 0, 0) = 0.0;
  CHECK(iib::sam_degrees(holed, m) >= 0.0);

  const Raster zero(3, 4, 4);
  CHECK(code_of([&] { iib::sam_degrees(zero, zero); }) == errc::all_pixels_degenerate);
  CHECK(code_of([&] { iib::sam_degrees(Raster(1, 4, 4), Raster(1, 4, 4)); }) ==
        errc::too_few_bands);
}

TEST_CASE("ergas: zero at identity, closed form, homogeneity") {
  iib::SplitMix64 rng(7);
  const Raster m = testutil::random_raster(rng, 3, 10, 10, 0.2, 0.9);
  CHECK(iib::ergas(m, m, 4) == 0.0);

  // Single band, constant 0.5 reference, uniform +0.1 error, ratio 4:
  // 100/4 * (0.1/0.5) = 5.
  const Raster ref = Raster::filled(1, 8, 8, 0.5);
  Raster off = ref;
  for (double& v : off.samples()) v += 0.1;
  CHECK(iib::ergas(off, ref, 4) == doctest::Approx(5.0).epsilon(1e-12));

  Raster half = ref;
  for (double& v : half.samples()) v += 0.05;
  CHECK(iib::ergas(off, ref, 4) ==
        doctest::Approx(2.0 * iib::ergas(half, ref, 4)).epsilon(1e-12));

  const Raster zero_mean(1, 4, 4);
  CHECK(code_of([&] { iib::ergas(m, Raster(3, 10, 10), 4); }) ==
        errc::zero_mean_reference_band);
  (void)zero_mean;
}

TEST_CASE("d_lambda: zero when pairwise Q matrices coincide, bounded on mild data") {
  iib::SplitMix64 rng(8);
  const Raster f = testutil::random_raster(rng, 4, 16, 16);
  const QConfig cfg{32, 32, 0.0};  // clamps to the 16-pixel image
  CHECK(iib::d_lambda(f, f, cfg) == 0.0);

  const Raster m = testutil::random_raster(rng, 4, 16, 16);
  Raster near = m;
  for (double& v : near.samples()) v += rng.uniform(-0.05, 0.05);
  const double dl = iib::d_lambda(near, m, cfg);
  CHECK(dl >= 0.0);
  CHECK(dl <= 1.0);

  CHECK(code_of([&] { iib::d_lambda(f, Raster(3, 16, 16), cfg); }) == errc::shape_mismatch);
  CHECK(code_of([&] {
    iib::d_lambda(Raster::filled(1, 8, 8, 0.1), Raster::filled(1, 8, 8, 0.1), cfg);
  }) == errc::too_few_bands);
}

TEST_CASE("d_s: zero when every band equals its pan at both scales") {
  iib::SplitMix64 rng(9);
  const Raster pan = testutil::random_raster(rng, 1, 16, 16);
  const Raster pan_lr = testutil::random_raster(rng, 1, 8, 8);
  Raster f(3, 16, 16);
  Raster ms_lr(3, 8, 8);
  for (int b = 0; b < 3; ++b) {
    std::copy(pan.band(0).begin(), pan.band(0).end(), f.band(b).begin());
    std::copy(pan_lr.band(0).begin(), pan_lr.band(0).end(), ms_lr.band(b).begin());
  }
  const QConfig cfg{8, 8, 0.0};
  CHECK(iib::d_s(f, pan, ms_lr, pan_lr, cfg) == 0.0);

  CHECK(code_of([&] { iib::d_s(f, Raster(2, 16, 16), ms_lr, pan_lr, cfg); }) ==
        errc::geometry_mismatch);
}

TEST_CASE("qnr: endpoints and the published PanNet+IIB row") {
  CHECK(iib::qnr(0.0, 0.0) == 1.0);
  CHECK(iib::qnr(1.0, 0.37) == 0.0);
  CHECK(std::fabs(iib::qnr(0.0326, 0.0291) - 0.9392) <= 5e-4);
  CHECK(code_of([] { iib::qnr(-0.1, 0.0); }) == errc::out_of_range);
  CHECK(code_of([] { iib::qnr(0.0, 1.5); }) == errc::out_of_range);
}

TEST_CASE("metric report serializes as name=value with 9 significant digits") {
  iib::MetricReport r{0.123456789123, 1.0 / 3.0, 5.0, 0.0326, 0.0291, 0.93924866};
  const std::string kv = r.to_kv();
  CHECK(kv ==
        "uiqi=0.123456789\n"
        "sam_degrees=0.333333333\n"
        "ergas=5\n"
        "d_lambda=0.0326\n"
        "d_s=0.0291\n"
        "qnr=0.93924866\n");
}
