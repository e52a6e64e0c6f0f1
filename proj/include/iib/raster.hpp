#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "iib/error.hpp"

namespace iib {

/// Planar multiband image: band-major, row-major within a band, 64-bit
/// samples in memory. Values are reflectance-like (nominally [0,1], not
/// enforced); only finiteness is enforced. Also used as the carrier for
/// fused outputs, network feature maps and gradients.
class Raster {
 public:
  Raster() = default;

  /// Zero-filled raster of the given geometry.
  Raster(int bands, int height, int width);

  /// Validating constructor: sample count must equal bands*height*width and
  /// every sample must be finite.
  Raster(int bands, int height, int width, std::vector<double> samples);

  static Raster filled(int bands, int height, int width, double value);

  int bands() const { return bands_; }
  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return samples_.size(); }

  double operator()(int b, int y, int x) const {
    return samples_[(static_cast<std::size_t>(b) * height_ + y) * width_ + x];
  }
  double& operator()(int b, int y, int x) {
    return samples_[(static_cast<std::size_t>(b) * height_ + y) * width_ + x];
  }

  std::span<const double> band(int b) const;
  std::span<double> band(int b);
  std::span<const double> samples() const { return samples_; }
  std::span<double> samples() { return samples_; }

  bool same_shape(const Raster& other) const {
    return bands_ == other.bands_ && height_ == other.height_ && width_ == other.width_;
  }

  /// Throws non-finite-sample if any entry is NaN or infinite.
  void check_finite() const;

  /// Bitwise equality: identical geometry and identical sample bits.
  friend bool operator==(const Raster& a, const Raster& b);

 private:
  int bands_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<double> samples_;
};

/// One training/testing sample: upsampled-degraded MS, reduced PAN and the
/// original MS as target, all at the same scale.
struct SampleTriple {
  Raster lms;
  Raster pan;
  Raster target;

  /// Throws geometry-mismatch unless lms/pan/target share H x W, pan has one
  /// band and lms/target have equal band counts.
  void validate() const;
};

struct BandStats {
  double mean = 0.0;
  double variance = 0.0;
};

/// Arithmetic mean of a view. A constant view returns its value exactly so
/// that downstream deviations (variance, covariance) are exact zeros.
double exact_mean(std::span<const double> v);

/// Mean and unbiased (N-1) variance of one band. A single-pixel band has
/// variance 0 by definition.
BandStats band_stats(const Raster& r, int band);

/// Unbiased (N-1) sample covariance of two equally sized views, accumulated
/// in one fixed left-to-right pass after the means pass.
double covariance(std::span<const double> x, std::span<const double> y);

/// BRF container: magic "IIBR", version u16=1, bands u16, height u32,
/// width u32, then binary32 samples, all little-endian, planar band-major.
Raster read_brf(const std::filesystem::path& path);
void write_brf(const std::filesystem::path& path, const Raster& r);

}  // namespace iib
