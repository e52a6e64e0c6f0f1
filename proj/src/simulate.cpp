#include "iib/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "iib/rng.hpp"

namespace iib {

namespace {

// Catmull-Rom tap weights for fractional offset t in [0, 1).
inline void catmull_weights(double t, double w[4]) {
  w[0] = ((-0.5 * t + 1.0) * t - 0.5) * t;
  w[1] = (1.5 * t - 2.5) * t * t + 1.0;
  w[2] = ((-1.5 * t + 2.0) * t + 0.5) * t;
  w[3] = (0.5 * t - 0.5) * t * t;
}

inline int clamp_index(int i, int n) { return std::clamp(i, 0, n - 1); }

/// Additive Gaussian blobs on an H x W field. Per blob the draw order is
/// pinned: center x, center y, radius, amplitude.
void add_blobs(SplitMix64& rng, std::vector<double>& field, int h, int w, int count,
               double radius_lo, double radius_hi) {
  for (int k = 0; k < count; ++k) {
    const double cx = rng.uniform() * w;
    const double cy = rng.uniform() * h;
    const double radius = rng.uniform(radius_lo, radius_hi);
    const double amp = rng.uniform(-1.0, 1.0);
    const double inv = 1.0 / (2.0 * radius * radius);
    for (int y = 0; y < h; ++y) {
      const double dy = y - cy;
      for (int x = 0; x < w; ++x) {
        const double dx = x - cx;
        field[static_cast<std::size_t>(y) * w + x] += amp * std::exp(-(dx * dx + dy * dy) * inv);
      }
    }
  }
}

void minmax_normalize(std::vector<double>& field) {
  auto [lo_it, hi_it] = std::minmax_element(field.begin(), field.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (lo == hi) {
    std::fill(field.begin(), field.end(), 0.5);
    return;
  }
  const double inv = 1.0 / (hi - lo);
  for (double& v : field) v = (v - lo) * inv;
}

}  // namespace

Raster degrade(const Raster& r, int ratio) {
  if (ratio < 1) fail(errc::invalid_argument, "ratio must be >= 1");
  if (ratio == 1) return r;
  if (r.height() % ratio != 0 || r.width() % ratio != 0)
    fail(errc::non_divisible_dimensions,
         "dimensions " + std::to_string(r.height()) + "x" + std::to_string(r.width()) +
             " not divisible by " + std::to_string(ratio));
  const int oh = r.height() / ratio;
  const int ow = r.width() / ratio;
  Raster out(r.bands(), oh, ow);
  const double inv = 1.0 / (static_cast<double>(ratio) * ratio);
  for (int b = 0; b < r.bands(); ++b) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double sum = 0.0;
        for (int dy = 0; dy < ratio; ++dy)
          for (int dx = 0; dx < ratio; ++dx) sum += r(b, oy * ratio + dy, ox * ratio + dx);
        out(b, oy, ox) = sum * inv;
      }
    }
  }
  return out;
}

Raster upsample(const Raster& r, int ratio) {
  if (ratio < 1) fail(errc::invalid_argument, "ratio must be >= 1");
  if (ratio == 1) return r;
  const int oh = r.height() * ratio;
  const int ow = r.width() * ratio;
  Raster out(r.bands(), oh, ow);

  // The horizontal tap pattern repeats per output column; precompute it.
  std::vector<int> col(static_cast<std::size_t>(ow) * 4);
  std::vector<double> colw(static_cast<std::size_t>(ow) * 4);
  for (int ox = 0; ox < ow; ++ox) {
    const double sx = (ox + 0.5) / ratio - 0.5;
    const double fx = std::floor(sx);
    const int ix = static_cast<int>(fx);
    double w[4];
    catmull_weights(sx - fx, w);
    for (int t = 0; t < 4; ++t) {
      col[static_cast<std::size_t>(ox) * 4 + t] = clamp_index(ix - 1 + t, r.width());
      colw[static_cast<std::size_t>(ox) * 4 + t] = w[t];
    }
  }

  for (int b = 0; b < r.bands(); ++b) {
    for (int oy = 0; oy < oh; ++oy) {
      const double sy = (oy + 0.5) / ratio - 0.5;
      const double fy = std::floor(sy);
      const int iy = static_cast<int>(fy);
      double wy[4];
      catmull_weights(sy - fy, wy);
      int rows[4];
      for (int t = 0; t < 4; ++t) rows[t] = clamp_index(iy - 1 + t, r.height());
      for (int ox = 0; ox < ow; ++ox) {
        const int* cx = &col[static_cast<std::size_t>(ox) * 4];
        const double* wx = &colw[static_cast<std::size_t>(ox) * 4];
        double acc = 0.0;
        for (int j = 0; j < 4; ++j) {
          const double row_val = wx[0] * r(b, rows[j], cx[0]) + wx[1] * r(b, rows[j], cx[1]) +
                                 wx[2] * r(b, rows[j], cx[2]) + wx[3] * r(b, rows[j], cx[3]);
          acc += wy[j] * row_val;
        }
        out(b, oy, ox) = acc;
      }
    }
  }
  return out;
}

Scene synth_scene(const SceneSpec& spec) {
  if (spec.bands < 1) fail(errc::invalid_argument, "bands must be >= 1");
  if (spec.ratio < 2) fail(errc::invalid_argument, "ratio must be >= 2");
  if (spec.height < spec.ratio || spec.width < spec.ratio ||
      spec.height % spec.ratio != 0 || spec.width % spec.ratio != 0)
    fail(errc::non_divisible_dimensions, "scene dimensions must be positive multiples of ratio");
  if (spec.blob_count < 1) fail(errc::invalid_argument, "blob_count must be >= 1");

  const int h = spec.height;
  const int w = spec.width;
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  SplitMix64 rng(spec.seed);

  // (1) shared smooth latent field plus a shared fine-detail field. The fine
  // field doubles as the PAN's high-frequency content and as the structure
  // each band couples to with its own strength, which is what makes the
  // fusion task spectrally non-trivial.
  const double radius_hi = std::max(3.0, h / 4.0);
  std::vector<double> latent(plane, 0.0);
  add_blobs(rng, latent, h, w, spec.blob_count, 3.0, radius_hi);
  std::vector<double> fine(plane, 0.0);
  add_blobs(rng, fine, h, w, spec.blob_count, 1.0, 4.0);
  minmax_normalize(fine);

  // (2) correlated bands: an affine copy of the latent with low-weight
  // band-specific detail, modulated multiplicatively by the fine field with a
  // per-band coupling, then scaled to a per-band dynamic range.
  const int band_blobs = std::max(1, spec.blob_count / 4);
  Raster bands_img(spec.bands, h, w);
  std::vector<double> field(plane);
  for (int b = 0; b < spec.bands; ++b) {
    const double gain = rng.uniform(0.7, 1.3);
    const double offset = rng.uniform(-0.2, 0.2);
    const double coupling = rng.uniform(0.5, 1.2);
    const double range = rng.uniform(0.3, 1.0);
    std::vector<double> detail(plane, 0.0);
    add_blobs(rng, detail, h, w, band_blobs, 3.0, radius_hi);
    for (std::size_t i = 0; i < plane; ++i) field[i] = gain * latent[i] + offset + 0.2 * detail[i];
    minmax_normalize(field);
    for (std::size_t i = 0; i < plane; ++i) field[i] *= 1.0 + coupling * (fine[i] - 0.5);
    minmax_normalize(field);
    for (double& v : field) v *= range;
    std::copy(field.begin(), field.end(), bands_img.band(b).begin());
  }

  // (3) PAN: band average plus the fine detail, re-normalized.
  std::vector<double> pan_field(plane);
  const double inv_bands = 1.0 / spec.bands;
  for (std::size_t i = 0; i < plane; ++i) {
    double avg = 0.0;
    for (int b = 0; b < spec.bands; ++b) avg += bands_img.band(b)[i];
    pan_field[i] = avg * inv_bands + 0.25 * fine[i];
  }
  minmax_normalize(pan_field);

  Scene scene;
  scene.ms = degrade(bands_img, spec.ratio);
  scene.pan = Raster(1, h, w, std::move(pan_field));
  return scene;
}

SampleTriple make_triple(const Raster& ms, const Raster& pan, int ratio) {
  if (ratio < 1) fail(errc::invalid_argument, "ratio must be >= 1");
  if (pan.bands() != 1) fail(errc::geometry_mismatch, "pan must have exactly one band");
  if (pan.height() != ms.height() * ratio || pan.width() != ms.width() * ratio)
    fail(errc::geometry_mismatch, "pan dimensions must be ms dimensions times ratio");
  if (ms.height() % ratio != 0 || ms.width() % ratio != 0)
    fail(errc::geometry_mismatch, "ms dimensions must be divisible by ratio");

  SampleTriple triple;
  triple.lms = upsample(degrade(ms, ratio), ratio);
  triple.pan = degrade(pan, ratio);
  triple.target = ms;
  triple.validate();
  return triple;
}

}  // namespace iib
