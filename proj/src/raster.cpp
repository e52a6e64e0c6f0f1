#include "iib/raster.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "le_io.hpp"

namespace iib {

namespace {

constexpr char kMagic[4] = {'I', 'I', 'B', 'R'};
constexpr std::uint16_t kVersion = 1;

void check_dims(int bands, int height, int width) {
  if (bands < 1 || height < 1 || width < 1)
    fail(errc::dimension_mismatch, "bands, height and width must all be >= 1");
}

}  // namespace

Raster::Raster(int bands, int height, int width)
    : bands_(bands), height_(height), width_(width) {
  check_dims(bands, height, width);
  samples_.assign(static_cast<std::size_t>(bands) * height * width, 0.0);
}

Raster::Raster(int bands, int height, int width, std::vector<double> samples)
    : bands_(bands), height_(height), width_(width), samples_(std::move(samples)) {
  check_dims(bands, height, width);
  const std::size_t expected = static_cast<std::size_t>(bands) * height * width;
  if (samples_.size() != expected)
    fail(errc::dimension_mismatch, "expected " + std::to_string(expected) + " samples, got " +
                                       std::to_string(samples_.size()));
  check_finite();
}

Raster Raster::filled(int bands, int height, int width, double value) {
  if (!std::isfinite(value)) fail(errc::non_finite_sample, "fill value must be finite");
  Raster r(bands, height, width);
  for (double& s : r.samples_) s = value;
  return r;
}

std::span<const double> Raster::band(int b) const {
  if (b < 0 || b >= bands_) fail(errc::band_out_of_range, "band " + std::to_string(b));
  const std::size_t n = static_cast<std::size_t>(height_) * width_;
  return {samples_.data() + n * b, n};
}

std::span<double> Raster::band(int b) {
  if (b < 0 || b >= bands_) fail(errc::band_out_of_range, "band " + std::to_string(b));
  const std::size_t n = static_cast<std::size_t>(height_) * width_;
  return {samples_.data() + n * b, n};
}

void Raster::check_finite() const {
  for (double s : samples_)
    if (!std::isfinite(s)) fail(errc::non_finite_sample, "raster contains NaN or infinity");
}

bool operator==(const Raster& a, const Raster& b) {
  if (!a.same_shape(b)) return false;
  if (a.samples_.empty()) return b.samples_.empty();
  return std::memcmp(a.samples_.data(), b.samples_.data(),
                     a.samples_.size() * sizeof(double)) == 0;
}

void SampleTriple::validate() const {
  if (pan.bands() != 1) fail(errc::geometry_mismatch, "pan must have exactly one band");
  if (lms.bands() != target.bands())
    fail(errc::geometry_mismatch, "lms and target band counts differ");
  if (lms.height() != pan.height() || lms.width() != pan.width() ||
      lms.height() != target.height() || lms.width() != target.width())
    fail(errc::geometry_mismatch, "lms, pan and target must share height and width");
}

double exact_mean(std::span<const double> v) {
  // A constant view gets its exact value as mean, so deviations are exactly
  // zero and variance/covariance of constants come out as exact zeros.
  double lo = v[0], hi = v[0], sum = 0.0;
  for (double s : v) {
    sum += s;
    if (s < lo) lo = s;
    if (s > hi) hi = s;
  }
  if (lo == hi) return lo;
  return sum / static_cast<double>(v.size());
}

BandStats band_stats(const Raster& r, int band) {
  const auto v = r.band(band);
  const std::size_t n = v.size();
  const double mean = exact_mean(v);
  if (n < 2) return {mean, 0.0};
  double acc = 0.0;
  for (double s : v) {
    const double d = s - mean;
    acc += d * d;
  }
  return {mean, acc / static_cast<double>(n - 1)};
}

double covariance(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) fail(errc::shape_mismatch, "covariance operands differ in size");
  const std::size_t n = x.size();
  if (n < 2) fail(errc::too_few_samples, "covariance needs at least 2 samples");
  const double mx = exact_mean(x);
  const double my = exact_mean(y);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += (x[i] - mx) * (y[i] - my);
  return acc / static_cast<double>(n - 1);
}

Raster read_brf(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(errc::io_error, "cannot open " + path.string());

  unsigned char magic[4];
  if (!detail::read_exact(is, magic, 4)) fail(errc::truncated_file, "file shorter than header");
  if (std::memcmp(magic, kMagic, 4) != 0) fail(errc::bad_magic, "not a BRF file");

  const std::uint16_t version = detail::read_u16(is);
  if (version != kVersion)
    fail(errc::version_unsupported, "BRF version " + std::to_string(version));

  const std::uint16_t bands = detail::read_u16(is);
  const std::uint32_t height = detail::read_u32(is);
  const std::uint32_t width = detail::read_u32(is);
  if (bands < 1 || height < 1 || width < 1)
    fail(errc::dimension_mismatch, "BRF header declares an empty raster");
  if (height > 1u << 24 || width > 1u << 24)
    fail(errc::dimension_mismatch, "BRF header declares an implausibly large raster");

  const std::size_t n = static_cast<std::size_t>(bands) * height * width;
  std::vector<double> samples(n);
  for (std::size_t i = 0; i < n; ++i) {
    const float f = detail::read_f32(is);
    if (!std::isfinite(f)) fail(errc::non_finite_sample, "payload contains NaN or infinity");
    samples[i] = static_cast<double>(f);
  }
  if (is.peek() != std::char_traits<char>::eof())
    fail(errc::io_error, "trailing bytes after payload");

  return Raster(static_cast<int>(bands), static_cast<int>(height), static_cast<int>(width),
                std::move(samples));
}

void write_brf(const std::filesystem::path& path, const Raster& r) {
  if (r.bands() > std::numeric_limits<std::uint16_t>::max())
    fail(errc::out_of_range, "band count exceeds the BRF limit");
  r.check_finite();

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(errc::io_error, "cannot open " + path.string() + " for writing");

  detail::write_bytes(os, reinterpret_cast<const unsigned char*>(kMagic), 4);
  detail::write_u16(os, kVersion);
  detail::write_u16(os, static_cast<std::uint16_t>(r.bands()));
  detail::write_u32(os, static_cast<std::uint32_t>(r.height()));
  detail::write_u32(os, static_cast<std::uint32_t>(r.width()));
  for (double s : r.samples()) {
    const float f = static_cast<float>(s);
    if (!std::isfinite(f))
      fail(errc::non_finite_sample, "sample is not representable as binary32");
    detail::write_f32(os, f);
  }
  os.flush();
  if (!os) fail(errc::io_error, "write failed for " + path.string());
}

}  // namespace iib
