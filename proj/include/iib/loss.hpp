#pragma once

#include <span>
#include <vector>

#include "iib/quality.hpp"
#include "iib/raster.hpp"

namespace iib {

/// Configuration of the differentiable objective. The window Q term requires
/// a strictly positive epsilon so constant windows stay differentiable.
/// With normalize set, the band-error sum is divided by the sample count and
/// the pair-discrepancy sum by the pair count, so alpha = 1 weighs terms of
/// comparable magnitude; clearing it keeps the raw sums.
struct LossConfig {
  double alpha = 1.0;
  QConfig q{8, 4, 1e-8};
  bool normalize = true;
};

/// Scalar objective plus its exact gradient with respect to the fused image.
struct LossValue {
  double value = 0.0;
  Raster grad;
};

struct LossReport {
  double intra = 0.0;
  double inter = 0.0;
  double total = 0.0;
  Raster grad;
};

/// Per-band squared error between fused and target images.
LossValue intra_loss(const Raster& f, const Raster& m, const LossConfig& cfg);

/// Squared discrepancy between pairwise band Q indices of the fused image and
/// of the target, averaged over band pairs. The gradient flows through both
/// operand bands of every pair; the target term is constant.
LossValue inter_loss(const Raster& f, const Raster& m, const LossConfig& cfg);

/// Combined objective: total = intra + alpha * inter, gradient composed the
/// same way.
LossReport iib_loss(const Raster& f, const Raster& m, const LossConfig& cfg);

struct QWindowGrad {
  std::vector<double> dx;
  std::vector<double> dy;
};

/// Exact partial derivatives of q_local with respect to every sample of both
/// windows. Requires epsilon > 0. By symmetry of the index, the y-gradient of
/// (x, y) equals the x-gradient of (y, x) bitwise.
QWindowGrad q_window_grad(std::span<const double> x, std::span<const double> y, double epsilon);

}  // namespace iib
