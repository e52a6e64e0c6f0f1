#pragma once

#include <cstdint>

#include "iib/raster.hpp"

namespace iib {

/// Geometry and seed of one synthetic scene. height/width are at PAN scale
/// and must be divisible by ratio.
struct SceneSpec {
  int bands = 4;
  int height = 256;
  int width = 256;
  int ratio = 4;
  std::uint64_t seed = 0;
  int blob_count = 40;
};

/// ratio x ratio average pooling per band. Exactly mean-preserving; ratio 1
/// is the identity.
Raster degrade(const Raster& r, int ratio);

/// Bicubic (Catmull-Rom, a = -0.5) upsampling with sample-center alignment:
/// output center u maps to input coordinate (u + 0.5)/ratio - 0.5, with edge
/// clamping. ratio 1 is the identity.
Raster upsample(const Raster& r, int ratio);

struct Scene {
  Raster ms;   ///< bands x (H/ratio) x (W/ratio)
  Raster pan;  ///< 1 x H x W
};

/// Deterministic synthetic scene: a shared Gaussian-blob latent field mixed
/// into correlated bands, a PAN built from the band average plus fine detail,
/// and the MS produced by degrading the band stack. Same spec, same bits.
Scene synth_scene(const SceneSpec& spec);

/// Wald's-protocol training sample at MS scale: target = ms,
/// lms = upsample(degrade(ms, ratio), ratio), pan = degrade(pan, ratio).
SampleTriple make_triple(const Raster& ms, const Raster& pan, int ratio);

}  // namespace iib
