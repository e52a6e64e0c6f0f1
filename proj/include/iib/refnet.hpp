#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "iib/loss.hpp"
#include "iib/quality.hpp"
#include "iib/raster.hpp"

namespace iib {

/// One same-padded cross-correlation layer. Weights are laid out
/// [out][in][ky][kx]; rectify selects the hidden-layer rectifier, the output
/// layer uses the identity.
struct ConvLayer {
  int kernel = 0;
  int in_channels = 0;
  int out_channels = 0;
  bool rectify = false;
  std::vector<double> weights;
  std::vector<double> biases;

  std::size_t weight_count() const {
    return static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel;
  }
};

/// Stacked-input fusion network: consumes bands+1 channels (upsampled MS plus
/// PAN), emits bands channels at the same spatial size.
struct Network {
  std::vector<ConvLayer> layers;

  int input_channels() const { return layers.empty() ? 0 : layers.front().in_channels; }
  int output_channels() const { return layers.empty() ? 0 : layers.back().out_channels; }

  /// Structural invariants: >= 1 layer, odd kernels, chained channel counts,
  /// rectifier on hidden layers only. Throws invalid-architecture.
  void validate() const;

  bool bit_equal(const Network& other) const;
};

/// Glorot-uniform initialized network for a bands-band task: layer i maps
/// (i == 0 ? bands+1 : channels[i-1]) -> channels[i] with kernel kernels[i].
/// channels.back() must equal bands. Biases start at zero.
Network init_network(int bands, const std::vector<int>& channels,
                     const std::vector<int>& kernels, std::uint64_t seed);

/// Per-layer activations cached by forward for reuse in backward.
/// activations[0] is the stacked input, activations[i+1] the output of
/// layer i.
struct ForwardTrace {
  std::vector<Raster> activations;
};

/// Fusion pass: stack lms bands then pan, run the layers. Output has
/// lms.bands() bands at the input spatial size.
Raster forward(const Network& net, const Raster& lms, const Raster& pan,
               ForwardTrace* trace = nullptr);

/// Gradients of a scalar objective with respect to every parameter, in the
/// layer layout of the network.
struct ParamGrads {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  void accumulate(const ParamGrads& other);
  void scale(double factor);
};

/// Backpropagation given d(loss)/d(output). Input gradients are discarded.
ParamGrads backward(const Network& net, const Raster& lms, const Raster& pan,
                    const Raster& grad_out);
ParamGrads backward(const Network& net, const ForwardTrace& trace, const Raster& grad_out);

enum class LossKind { l2, iib };

struct TrainConfig {
  LossKind loss_kind = LossKind::iib;
  LossConfig loss;
  int steps = 500;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int batch = 4;
  std::uint64_t seed = 0;
};

struct StepLoss {
  double intra = 0.0;
  double inter = 0.0;
  double total = 0.0;
};

struct TrainResult {
  Network net;
  std::vector<StepLoss> history;
};

/// Adam training over the triples. Batch indices are drawn from the pinned
/// generator seeded with cfg.seed; everything is sequential, so the result is
/// a pure function of (net, data, cfg).
TrainResult train(Network net, std::span<const SampleTriple> data, const TrainConfig& cfg);

struct EvalConfig {
  QConfig uiqi_q{8, 1, 0.0};
  QConfig qnr_q{32, 32, 0.0};
  int ratio = 4;
};

using FuseFn = std::function<Raster(const Raster& lms, const Raster& pan)>;

/// Full evaluation protocol, averaged over the set. Full-reference metrics
/// (UIQI/SAM/ERGAS) compare the fusion of each triple against its target.
/// No-reference metrics (D_lambda/D_s/QNR) use the full-scale protocol when
/// pan_full is given (fuse upsampled target MS with the original PAN);
/// otherwise they are computed at the triple's own scale.
MetricReport evaluate(const FuseFn& fuse, std::span<const SampleTriple> triples,
                      const std::vector<Raster>* pan_full, const EvalConfig& cfg);
MetricReport evaluate(const Network& net, std::span<const SampleTriple> triples,
                      const std::vector<Raster>* pan_full, const EvalConfig& cfg);

/// Network container: magic "IIBN", version u16=1, layer count u16, then per
/// layer kernel/in/out as u16, activation u8, weights and biases as binary64,
/// all little-endian.
void save_network(const std::filesystem::path& path, const Network& net);
Network load_network(const std::filesystem::path& path);

}  // namespace iib
