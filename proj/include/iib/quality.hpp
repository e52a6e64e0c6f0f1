#pragma once

#include <span>
#include <string>

#include "iib/raster.hpp"

namespace iib {

/// Sliding-window configuration shared by every Q-index evaluation.
/// epsilon stabilises the denominator: metrics use 0 (degenerate windows are
/// excluded), losses use a small positive value (degenerate windows stay
/// differentiable and score 0).
struct QConfig {
  int window = 8;
  int stride = 1;
  double epsilon = 0.0;
};

/// Per-window sufficient statistics with the unbiased N-1 divisor.
struct WindowStats {
  double mean_x = 0.0;
  double mean_y = 0.0;
  double var_x = 0.0;
  double var_y = 0.0;
  double cov = 0.0;
};

/// Two-pass stats over a pair of equally sized views (means first, then one
/// fixed left-to-right pass for the second moments).
WindowStats window_stats(std::span<const double> x, std::span<const double> y);

/// Q from stats with the pinned evaluation order
///   4*(cov*(mx*my)) / ((vx+vy)*(mx*mx + my*my) + epsilon)
/// which makes Q(x,x) == 1.0 exact when epsilon is 0. Sets *degenerate and
/// returns 0 when the denominator is exactly zero (possible only for
/// epsilon == 0).
double q_from_stats(const WindowStats& s, double epsilon, bool* degenerate);

/// Local quality index of one window pair. Throws degenerate-window when
/// epsilon == 0 and the denominator vanishes.
double q_local(std::span<const double> x, std::span<const double> y, double epsilon);

/// Mean of q_local over all window positions at the configured stride.
/// With epsilon == 0, degenerate windows are excluded from the mean; if every
/// window is degenerate, throws all-windows-degenerate.
double q_index(const Raster& x, int band_x, const Raster& y, int band_y, const QConfig& cfg);

/// Band-averaged full-reference Q index.
double uiqi(const Raster& f, const Raster& m, const QConfig& cfg);

/// Mean spectral angle in degrees. Pixels whose spectral vector is all-zero
/// in either image are skipped; if all pixels are skipped, throws
/// all-pixels-degenerate. Requires at least two bands.
double sam_degrees(const Raster& f, const Raster& m);

/// Relative dimensionless global error:
///   100/ratio * sqrt(mean_b (rmse_b / mean(m_b))^2).
double ergas(const Raster& f, const Raster& m, int ratio);

/// Spectral distortion: mean absolute difference of pairwise band Q indices
/// between the fused image and the low-resolution MS, each at its own scale.
/// The window is clamped to fit the smaller image.
double d_lambda(const Raster& f, const Raster& ms_lr, const QConfig& cfg);

/// Spatial distortion: mean absolute difference between band-to-PAN Q at full
/// scale and band-to-PAN Q at reduced scale.
double d_s(const Raster& f, const Raster& pan, const Raster& ms_lr, const Raster& pan_lr,
           const QConfig& cfg);

/// (1 - d_lambda) * (1 - d_s); both inputs must lie in [0, 1].
double qnr(double d_lambda_value, double d_s_value);

/// Scalar with 9 significant digits, the fixed text precision of the toolkit.
std::string format_g9(double v);

struct MetricReport {
  double uiqi = 0.0;
  double sam_degrees = 0.0;
  double ergas = 0.0;
  double d_lambda = 0.0;
  double d_s = 0.0;
  double qnr = 0.0;

  /// Flat name=value serialization, one line per metric, 9 significant digits.
  std::string to_kv() const;
};

}  // namespace iib
