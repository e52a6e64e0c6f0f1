#include "iib/loss.hpp"

#include <cmath>

namespace iib {

namespace {

void check_loss_q(const QConfig& q, const Raster& f) {
  if (q.window < 2) fail(errc::invalid_argument, "window must be >= 2");
  if (q.stride < 1) fail(errc::invalid_argument, "stride must be >= 1");
  if (!(q.epsilon > 0.0) || !std::isfinite(q.epsilon))
    fail(errc::invalid_argument, "loss-side epsilon must be finite and > 0");
  if (q.window > f.height() || q.window > f.width())
    fail(errc::invalid_argument, "window exceeds the image");
}

void check_same_shape(const Raster& f, const Raster& m) {
  if (!f.same_shape(m)) fail(errc::shape_mismatch, "fused and target images differ in shape");
}

/// dQ/dx for q_from_stats, derived through the five sufficient statistics:
///   d mean_x / dx_i  = 1/n
///   d var_x  / dx_i  = 2 (x_i - mean_x) / (n-1)
///   d cov    / dx_i  = (y_i - mean_y) / (n-1)
/// combined with the quotient rule over N = 4 cov mx my and
/// D = (vx+vy)(mx^2+my^2) + eps.
std::vector<double> grad_wrt_first(std::span<const double> x, std::span<const double> y,
                                   const WindowStats& s, double epsilon) {
  const double n = static_cast<double>(x.size());
  const double nm1 = n - 1.0;
  const double mm = s.mean_x * s.mean_y;
  const double num = 4.0 * (s.cov * mm);
  const double spread = s.var_x + s.var_y;
  const double mass = s.mean_x * s.mean_x + s.mean_y * s.mean_y;
  const double den = spread * mass + epsilon;
  const double inv_den = 1.0 / den;
  const double q = num * inv_den;

  const double kn1 = 4.0 * mm / nm1;
  const double kn2 = 4.0 * s.cov * s.mean_y / n;
  const double kd1 = 2.0 * mass / nm1;
  const double kd2 = 2.0 * spread * s.mean_x / n;

  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dn = kn1 * (y[i] - s.mean_y) + kn2;
    const double dd = kd1 * (x[i] - s.mean_x) + kd2;
    g[i] = inv_den * (dn - q * dd);
  }
  return g;
}

WindowStats swapped(const WindowStats& s) {
  return {s.mean_y, s.mean_x, s.var_y, s.var_x, s.cov};
}

void copy_window(const Raster& r, int band, int y0, int x0, int window,
                 std::vector<double>& out) {
  out.resize(static_cast<std::size_t>(window) * window);
  std::size_t k = 0;
  for (int dy = 0; dy < window; ++dy)
    for (int dx = 0; dx < window; ++dx) out[k++] = r(band, y0 + dy, x0 + dx);
}

struct WindowPos {
  int y0;
  int x0;
};

std::vector<WindowPos> window_positions(int h, int w, const QConfig& q) {
  std::vector<WindowPos> out;
  for (int y0 = 0; y0 + q.window <= h; y0 += q.stride)
    for (int x0 = 0; x0 + q.window <= w; x0 += q.stride) out.push_back({y0, x0});
  return out;
}

}  // namespace

QWindowGrad q_window_grad(std::span<const double> x, std::span<const double> y,
                          double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    fail(errc::invalid_argument, "q_window_grad requires epsilon > 0");
  const WindowStats s = window_stats(x, y);
  QWindowGrad g;
  g.dx = grad_wrt_first(x, y, s, epsilon);
  g.dy = grad_wrt_first(y, x, swapped(s), epsilon);
  return g;
}

LossValue intra_loss(const Raster& f, const Raster& m, const LossConfig& cfg) {
  check_same_shape(f, m);
  const auto fs = f.samples();
  const auto ms = m.samples();
  const double divisor = cfg.normalize ? static_cast<double>(fs.size()) : 1.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const double d = fs[i] - ms[i];
    sum += d * d;
  }
  LossValue out;
  out.value = sum / divisor;
  out.grad = Raster(f.bands(), f.height(), f.width());
  auto gs = out.grad.samples();
  for (std::size_t i = 0; i < fs.size(); ++i) gs[i] = 2.0 * (fs[i] - ms[i]) / divisor;
  return out;
}

LossValue inter_loss(const Raster& f, const Raster& m, const LossConfig& cfg) {
  check_same_shape(f, m);
  if (f.bands() < 2) fail(errc::too_few_bands, "inter_loss needs at least 2 bands");
  check_loss_q(cfg.q, f);

  const auto positions = window_positions(f.height(), f.width(), cfg.q);
  const double k = static_cast<double>(positions.size());
  const int bands = f.bands();
  const double pairs = static_cast<double>(bands) * (bands - 1) / 2.0;
  const double divisor = cfg.normalize ? pairs : 1.0;

  LossValue out;
  out.grad = Raster(f.bands(), f.height(), f.width());
  double value_raw = 0.0;
  std::vector<double> wx, wy;

  for (int l = 0; l < bands - 1; ++l) {
    for (int r = l + 1; r < bands; ++r) {
      double qf_sum = 0.0;
      double qm_sum = 0.0;
      std::vector<WindowStats> fused_stats(positions.size());
      for (std::size_t p = 0; p < positions.size(); ++p) {
        copy_window(f, l, positions[p].y0, positions[p].x0, cfg.q.window, wx);
        copy_window(f, r, positions[p].y0, positions[p].x0, cfg.q.window, wy);
        fused_stats[p] = window_stats(wx, wy);
        qf_sum += q_from_stats(fused_stats[p], cfg.q.epsilon, nullptr);

        copy_window(m, l, positions[p].y0, positions[p].x0, cfg.q.window, wx);
        copy_window(m, r, positions[p].y0, positions[p].x0, cfg.q.window, wy);
        qm_sum += q_from_stats(window_stats(wx, wy), cfg.q.epsilon, nullptr);
      }
      const double diff = qf_sum / k - qm_sum / k;
      value_raw += diff * diff;

      // d(diff^2)/d q_window = 2 diff / K; scatter through both operands.
      const double coeff = 2.0 * diff / k;
      for (std::size_t p = 0; p < positions.size(); ++p) {
        copy_window(f, l, positions[p].y0, positions[p].x0, cfg.q.window, wx);
        copy_window(f, r, positions[p].y0, positions[p].x0, cfg.q.window, wy);
        const auto gl = grad_wrt_first(wx, wy, fused_stats[p], cfg.q.epsilon);
        const auto gr = grad_wrt_first(wy, wx, swapped(fused_stats[p]), cfg.q.epsilon);
        std::size_t idx = 0;
        for (int dy = 0; dy < cfg.q.window; ++dy) {
          for (int dx = 0; dx < cfg.q.window; ++dx, ++idx) {
            out.grad(l, positions[p].y0 + dy, positions[p].x0 + dx) += coeff * gl[idx];
            out.grad(r, positions[p].y0 + dy, positions[p].x0 + dx) += coeff * gr[idx];
          }
        }
      }
    }
  }

  out.value = value_raw / divisor;
  for (double& g : out.grad.samples()) g /= divisor;
  return out;
}

LossReport iib_loss(const Raster& f, const Raster& m, const LossConfig& cfg) {
  if (!(cfg.alpha >= 0.0) || !std::isfinite(cfg.alpha))
    fail(errc::invalid_argument, "alpha must be finite and >= 0");
  LossValue intra = intra_loss(f, m, cfg);
  LossValue inter = inter_loss(f, m, cfg);
  LossReport out;
  out.intra = intra.value;
  out.inter = inter.value;
  out.total = intra.value + cfg.alpha * inter.value;
  out.grad = std::move(intra.grad);
  auto gs = out.grad.samples();
  const auto is = inter.grad.samples();
  for (std::size_t i = 0; i < gs.size(); ++i) gs[i] = gs[i] + cfg.alpha * is[i];
  return out;
}

}  // namespace iib
