#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "iib/quality.hpp"

namespace iib {

/// Any reported error above this threshold fails the check.
inline constexpr double kGradCheckThreshold = 1e-4;

struct GradCheckConfig {
  std::uint64_t seed = 0;
  int bands = 3;
  int size = 16;
  QConfig q{8, 4, 1e-8};
  /// Test hook: perturbs the analytic gradients so the detector must trip.
  bool corrupt = false;
};

struct GradCheckItem {
  std::string name;
  double max_rel_err = 0.0;
};

/// Central-difference validation (step 1e-5) of every analytic gradient path:
/// the window Q gradient, the inter and combined losses, and full network
/// backpropagation under both training losses. Errors are relative, absolute
/// below |analytic| < 1e-8.
std::vector<GradCheckItem> run_gradcheck(const GradCheckConfig& cfg);

}  // namespace iib
