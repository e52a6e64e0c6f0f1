#include "iib/quality.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

namespace iib {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_q_args(const Raster& x, int band_x, const Raster& y, int band_y,
                  const QConfig& cfg) {
  if (x.height() != y.height() || x.width() != y.width())
    fail(errc::shape_mismatch, "q_index operands differ in size");
  if (band_x < 0 || band_x >= x.bands() || band_y < 0 || band_y >= y.bands())
    fail(errc::band_out_of_range, "q_index band selector");
  if (cfg.window < 2) fail(errc::invalid_argument, "window must be >= 2");
  if (cfg.stride < 1) fail(errc::invalid_argument, "stride must be >= 1");
  if (!(cfg.epsilon >= 0.0) || !std::isfinite(cfg.epsilon))
    fail(errc::invalid_argument, "epsilon must be finite and >= 0");
  if (cfg.window > x.height() || cfg.window > x.width())
    fail(errc::invalid_argument, "window exceeds the image");
}

void copy_window(const Raster& r, int band, int y0, int x0, int window,
                 std::vector<double>& out) {
  out.resize(static_cast<std::size_t>(window) * window);
  std::size_t k = 0;
  for (int dy = 0; dy < window; ++dy)
    for (int dx = 0; dx < window; ++dx) out[k++] = r(band, y0 + dy, x0 + dx);
}

/// Window clamp used by the no-reference metrics: images smaller than the
/// configured window get window = min(cfg.window, H, W); a block stride
/// (stride >= window) stays a block stride after clamping.
QConfig clamp_window(const QConfig& cfg, int h, int w) {
  QConfig out = cfg;
  out.window = std::min({cfg.window, h, w});
  if (out.window < 2) out.window = 2;
  out.stride = cfg.stride >= cfg.window ? out.window : std::min(cfg.stride, out.window);
  return out;
}

void check_same_geometry(const Raster& a, const Raster& b, const char* what) {
  if (a.bands() != b.bands() || a.height() != b.height() || a.width() != b.width())
    fail(errc::shape_mismatch, what);
}

}  // namespace

WindowStats window_stats(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) fail(errc::shape_mismatch, "window views differ in size");
  const std::size_t n = x.size();
  if (n < 2) fail(errc::too_few_samples, "windows need at least 2 samples");
  WindowStats s;
  s.mean_x = exact_mean(x);
  s.mean_y = exact_mean(y);
  double vxx = 0.0, vyy = 0.0, vxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - s.mean_x;
    const double dy = y[i] - s.mean_y;
    vxx += dx * dx;
    vyy += dy * dy;
    vxy += dx * dy;
  }
  const double divisor = static_cast<double>(n - 1);
  s.var_x = vxx / divisor;
  s.var_y = vyy / divisor;
  s.cov = vxy / divisor;
  return s;
}

double q_from_stats(const WindowStats& s, double epsilon, bool* degenerate) {
  const double mm = s.mean_x * s.mean_y;
  const double num = 4.0 * (s.cov * mm);
  const double den =
      (s.var_x + s.var_y) * (s.mean_x * s.mean_x + s.mean_y * s.mean_y) + epsilon;
  if (den == 0.0) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  if (degenerate) *degenerate = false;
  return num / den;
}

double q_local(std::span<const double> x, std::span<const double> y, double epsilon) {
  bool degenerate = false;
  const double q = q_from_stats(window_stats(x, y), epsilon, &degenerate);
  if (degenerate) fail(errc::degenerate_window, "denominator vanished with epsilon 0");
  return q;
}

double q_index(const Raster& x, int band_x, const Raster& y, int band_y, const QConfig& cfg) {
  check_q_args(x, band_x, y, band_y, cfg);
  std::vector<double> wx, wy;
  double sum = 0.0;
  long included = 0;
  for (int y0 = 0; y0 + cfg.window <= x.height(); y0 += cfg.stride) {
    for (int x0 = 0; x0 + cfg.window <= x.width(); x0 += cfg.stride) {
      copy_window(x, band_x, y0, x0, cfg.window, wx);
      copy_window(y, band_y, y0, x0, cfg.window, wy);
      bool degenerate = false;
      const double q = q_from_stats(window_stats(wx, wy), cfg.epsilon, &degenerate);
      if (degenerate) continue;
      sum += q;
      ++included;
    }
  }
  if (included == 0) fail(errc::all_windows_degenerate, "no usable window position");
  return sum / static_cast<double>(included);
}

double uiqi(const Raster& f, const Raster& m, const QConfig& cfg) {
  check_same_geometry(f, m, "uiqi operands differ in geometry");
  double sum = 0.0;
  for (int b = 0; b < f.bands(); ++b) sum += q_index(f, b, m, b, cfg);
  return sum / static_cast<double>(f.bands());
}

double sam_degrees(const Raster& f, const Raster& m) {
  check_same_geometry(f, m, "sam operands differ in geometry");
  if (f.bands() < 2) fail(errc::too_few_bands, "sam needs at least 2 bands");
  const int bands = f.bands();
  const int pixels = f.height() * f.width();
  double angle_sum = 0.0;
  long counted = 0;
  for (int p = 0; p < pixels; ++p) {
    double dot = 0.0, nf = 0.0, nm = 0.0;
    for (int b = 0; b < bands; ++b) {
      const double fv = f.band(b)[p];
      const double mv = m.band(b)[p];
      dot += fv * mv;
      nf += fv * fv;
      nm += mv * mv;
    }
    if (nf == 0.0 || nm == 0.0) continue;  // all-zero spectral vector: skipped
    // Exactly collinear vectors must give an exact 0 / pi, so compare the
    // squared cosine before taking any square root.
    const double num2 = dot * dot;
    const double den2 = nf * nm;
    double angle;
    if (num2 >= den2) {
      angle = dot >= 0.0 ? 0.0 : kPi;
    } else {
      angle = std::acos(dot / std::sqrt(den2));
    }
    angle_sum += angle;
    ++counted;
  }
  if (counted == 0) fail(errc::all_pixels_degenerate, "every spectral vector is zero");
  return (angle_sum / static_cast<double>(counted)) * (180.0 / kPi);
}

double ergas(const Raster& f, const Raster& m, int ratio) {
  check_same_geometry(f, m, "ergas operands differ in geometry");
  if (ratio < 1) fail(errc::invalid_argument, "ratio must be >= 1");
  const std::size_t n = static_cast<std::size_t>(f.height()) * f.width();
  double acc = 0.0;
  for (int b = 0; b < f.bands(); ++b) {
    const auto fb = f.band(b);
    const auto mb = m.band(b);
    const double mean = exact_mean(mb);
    if (mean == 0.0) fail(errc::zero_mean_reference_band, "band " + std::to_string(b));
    double se = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = fb[i] - mb[i];
      se += d * d;
    }
    const double rmse = std::sqrt(se / static_cast<double>(n));
    const double rel = rmse / mean;
    acc += rel * rel;
  }
  return 100.0 / static_cast<double>(ratio) * std::sqrt(acc / static_cast<double>(f.bands()));
}

double d_lambda(const Raster& f, const Raster& ms_lr, const QConfig& cfg) {
  if (f.bands() != ms_lr.bands()) fail(errc::shape_mismatch, "band counts differ");
  const int bands = f.bands();
  if (bands < 2) fail(errc::too_few_bands, "d_lambda needs at least 2 bands");
  const QConfig q = clamp_window(cfg, std::min(f.height(), ms_lr.height()),
                                 std::min(f.width(), ms_lr.width()));
  double sum = 0.0;
  for (int l = 0; l < bands - 1; ++l) {
    for (int n = l + 1; n < bands; ++n) {
      const double qf = q_index(f, l, f, n, q);
      const double qm = q_index(ms_lr, l, ms_lr, n, q);
      sum += std::fabs(qf - qm);
    }
  }
  const double pairs = static_cast<double>(bands) * (bands - 1) / 2.0;
  return sum / pairs;
}

double d_s(const Raster& f, const Raster& pan, const Raster& ms_lr, const Raster& pan_lr,
           const QConfig& cfg) {
  if (pan.bands() != 1 || pan_lr.bands() != 1)
    fail(errc::geometry_mismatch, "pan images must have exactly one band");
  if (f.height() != pan.height() || f.width() != pan.width())
    fail(errc::geometry_mismatch, "fused image and pan differ in size");
  if (ms_lr.height() != pan_lr.height() || ms_lr.width() != pan_lr.width())
    fail(errc::geometry_mismatch, "reduced MS and reduced pan differ in size");
  if (f.bands() != ms_lr.bands()) fail(errc::geometry_mismatch, "band counts differ");
  const QConfig q = clamp_window(cfg, std::min(f.height(), ms_lr.height()),
                                 std::min(f.width(), ms_lr.width()));
  double sum = 0.0;
  for (int b = 0; b < f.bands(); ++b) {
    const double q_full = q_index(f, b, pan, 0, q);
    const double q_reduced = q_index(ms_lr, b, pan_lr, 0, q);
    sum += std::fabs(q_full - q_reduced);
  }
  return sum / static_cast<double>(f.bands());
}

double qnr(double d_lambda_value, double d_s_value) {
  if (!(d_lambda_value >= 0.0 && d_lambda_value <= 1.0))
    fail(errc::out_of_range, "d_lambda outside [0,1]");
  if (!(d_s_value >= 0.0 && d_s_value <= 1.0)) fail(errc::out_of_range, "d_s outside [0,1]");
  return (1.0 - d_lambda_value) * (1.0 - d_s_value);
}

std::string format_g9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string MetricReport::to_kv() const {
  std::string out;
  out += "uiqi=" + format_g9(uiqi) + "\n";
  out += "sam_degrees=" + format_g9(sam_degrees) + "\n";
  out += "ergas=" + format_g9(ergas) + "\n";
  out += "d_lambda=" + format_g9(d_lambda) + "\n";
  out += "d_s=" + format_g9(d_s) + "\n";
  out += "qnr=" + format_g9(qnr) + "\n";
  return out;
}

}  // namespace iib
