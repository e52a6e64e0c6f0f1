#include "iib/refnet.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "iib/rng.hpp"
#include "iib/simulate.hpp"
#include "le_io.hpp"

namespace iib {

namespace {

constexpr char kMagic[4] = {'I', 'I', 'B', 'N'};
constexpr std::uint16_t kVersion = 1;

std::size_t weight_index(const ConvLayer& layer, int o, int i, int ky, int kx) {
  return ((static_cast<std::size_t>(o) * layer.in_channels + i) * layer.kernel + ky) *
             layer.kernel +
         kx;
}

/// Same-size zero-padded cross-correlation plus bias.
Raster conv_same(const Raster& in, const ConvLayer& layer) {
  const int h = in.height();
  const int w = in.width();
  const int pad = (layer.kernel - 1) / 2;
  Raster out(layer.out_channels, h, w);
  for (int o = 0; o < layer.out_channels; ++o) {
    auto out_plane = out.band(o);
    const double bias = layer.biases[o];
    for (double& v : out_plane) v = bias;
    for (int i = 0; i < layer.in_channels; ++i) {
      const auto in_plane = in.band(i);
      for (int ky = 0; ky < layer.kernel; ++ky) {
        const int dy = ky - pad;
        const int y0 = std::max(0, -dy);
        const int y1 = std::min(h, h - dy);
        for (int kx = 0; kx < layer.kernel; ++kx) {
          const double wgt = layer.weights[weight_index(layer, o, i, ky, kx)];
          if (wgt == 0.0) continue;
          const int dx = kx - pad;
          const int x0 = std::max(0, -dx);
          const int x1 = std::min(w, w - dx);
          for (int y = y0; y < y1; ++y) {
            double* orow = out_plane.data() + static_cast<std::size_t>(y) * w;
            const double* irow = in_plane.data() + static_cast<std::size_t>(y + dy) * w + dx;
            for (int x = x0; x < x1; ++x) orow[x] += wgt * irow[x];
          }
        }
      }
    }
  }
  return out;
}

Raster stack_input(const Raster& lms, const Raster& pan) {
  if (pan.bands() != 1) fail(errc::geometry_mismatch, "pan must have exactly one band");
  if (lms.height() != pan.height() || lms.width() != pan.width())
    fail(errc::geometry_mismatch, "lms and pan differ in size");
  Raster stacked(lms.bands() + 1, lms.height(), lms.width());
  for (int b = 0; b < lms.bands(); ++b)
    std::copy(lms.band(b).begin(), lms.band(b).end(), stacked.band(b).begin());
  std::copy(pan.band(0).begin(), pan.band(0).end(), stacked.band(lms.bands()).begin());
  return stacked;
}

}  // namespace

void Network::validate() const {
  if (layers.empty()) fail(errc::invalid_architecture, "network has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const ConvLayer& l = layers[i];
    if (l.kernel < 1 || l.kernel % 2 == 0)
      fail(errc::invalid_architecture, "kernel sizes must be odd and positive");
    if (l.in_channels < 1 || l.out_channels < 1)
      fail(errc::invalid_architecture, "channel counts must be positive");
    if (l.weights.size() != l.weight_count() ||
        l.biases.size() != static_cast<std::size_t>(l.out_channels))
      fail(errc::invalid_architecture, "parameter buffers do not match the layer shape");
    if (i + 1 < layers.size() && l.out_channels != layers[i + 1].in_channels)
      fail(errc::invalid_architecture, "layer channel chain is broken");
  }
  if (layers.back().rectify)
    fail(errc::invalid_architecture, "output layer must use the identity activation");
}

bool Network::bit_equal(const Network& other) const {
  if (layers.size() != other.layers.size()) return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const ConvLayer& a = layers[i];
    const ConvLayer& b = other.layers[i];
    if (a.kernel != b.kernel || a.in_channels != b.in_channels ||
        a.out_channels != b.out_channels || a.rectify != b.rectify)
      return false;
    if (std::memcmp(a.weights.data(), b.weights.data(), a.weights.size() * sizeof(double)) !=
        0)
      return false;
    if (std::memcmp(a.biases.data(), b.biases.data(), a.biases.size() * sizeof(double)) != 0)
      return false;
  }
  return true;
}

Network init_network(int bands, const std::vector<int>& channels,
                     const std::vector<int>& kernels, std::uint64_t seed) {
  if (bands < 1) fail(errc::invalid_architecture, "bands must be >= 1");
  if (channels.size() != kernels.size() || channels.size() < 2)
    fail(errc::invalid_architecture, "channels and kernels must have equal length >= 2");
  if (channels.back() != bands)
    fail(errc::invalid_architecture, "last layer must emit one channel per band");

  SplitMix64 rng(seed);
  Network net;
  net.layers.resize(channels.size());
  for (std::size_t i = 0; i < channels.size(); ++i) {
    ConvLayer& l = net.layers[i];
    l.kernel = kernels[i];
    l.in_channels = i == 0 ? bands + 1 : channels[i - 1];
    l.out_channels = channels[i];
    l.rectify = i + 1 < channels.size();
    if (l.kernel < 1 || l.kernel % 2 == 0)
      fail(errc::invalid_architecture, "kernel sizes must be odd and positive");
    if (l.out_channels < 1) fail(errc::invalid_architecture, "channel counts must be positive");
    const double fan_in = static_cast<double>(l.in_channels) * l.kernel * l.kernel;
    const double fan_out = static_cast<double>(l.out_channels) * l.kernel * l.kernel;
    const double scale = std::sqrt(6.0 / (fan_in + fan_out));
    l.weights.resize(l.weight_count());
    for (double& w : l.weights) w = (2.0 * rng.uniform() - 1.0) * scale;
    l.biases.assign(static_cast<std::size_t>(l.out_channels), 0.0);
  }
  net.validate();
  return net;
}

Raster forward(const Network& net, const Raster& lms, const Raster& pan, ForwardTrace* trace) {
  net.validate();
  if (lms.bands() + 1 != net.input_channels())
    fail(errc::architecture_mismatch,
         "network expects " + std::to_string(net.input_channels()) + " input channels, got " +
             std::to_string(lms.bands() + 1));
  if (net.output_channels() != lms.bands())
    fail(errc::architecture_mismatch, "network does not emit one channel per band");

  Raster current = stack_input(lms, pan);
  if (trace) {
    trace->activations.clear();
    trace->activations.push_back(current);
  }
  for (const ConvLayer& layer : net.layers) {
    Raster next = conv_same(current, layer);
    if (layer.rectify)
      for (double& v : next.samples()) v = v > 0.0 ? v : 0.0;
    current = std::move(next);
    if (trace) trace->activations.push_back(current);
  }
  return current;
}

void ParamGrads::accumulate(const ParamGrads& other) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (std::size_t j = 0; j < weights[l].size(); ++j) weights[l][j] += other.weights[l][j];
    for (std::size_t j = 0; j < biases[l].size(); ++j) biases[l][j] += other.biases[l][j];
  }
}

void ParamGrads::scale(double factor) {
  for (auto& w : weights)
    for (double& v : w) v *= factor;
  for (auto& b : biases)
    for (double& v : b) v *= factor;
}

ParamGrads backward(const Network& net, const ForwardTrace& trace, const Raster& grad_out) {
  const int layer_count = static_cast<int>(net.layers.size());
  if (static_cast<int>(trace.activations.size()) != layer_count + 1)
    fail(errc::invalid_argument, "forward trace does not match the network");
  if (!grad_out.same_shape(trace.activations.back()))
    fail(errc::geometry_mismatch, "grad_out does not match the forward output");

  ParamGrads grads;
  grads.weights.resize(layer_count);
  grads.biases.resize(layer_count);

  Raster upstream = grad_out;
  for (int li = layer_count - 1; li >= 0; --li) {
    const ConvLayer& layer = net.layers[li];
    const Raster& input = trace.activations[li];
    const Raster& output = trace.activations[li + 1];
    const int h = input.height();
    const int w = input.width();
    const int pad = (layer.kernel - 1) / 2;

    // Activation backprop: the rectifier passes gradient where it fired.
    if (layer.rectify) {
      auto us = upstream.samples();
      const auto os = output.samples();
      for (std::size_t i = 0; i < us.size(); ++i)
        if (!(os[i] > 0.0)) us[i] = 0.0;
    }

    grads.weights[li].assign(layer.weight_count(), 0.0);
    grads.biases[li].assign(static_cast<std::size_t>(layer.out_channels), 0.0);
    Raster down(layer.in_channels, h, w);

    for (int o = 0; o < layer.out_channels; ++o) {
      const auto dz = upstream.band(o);
      double bias_acc = 0.0;
      for (double v : dz) bias_acc += v;
      grads.biases[li][o] = bias_acc;

      for (int i = 0; i < layer.in_channels; ++i) {
        const auto x_plane = input.band(i);
        auto dx_plane = down.band(i);
        for (int ky = 0; ky < layer.kernel; ++ky) {
          const int dy = ky - pad;
          const int y0 = std::max(0, -dy);
          const int y1 = std::min(h, h - dy);
          for (int kx = 0; kx < layer.kernel; ++kx) {
            const int dxo = kx - pad;
            const int x0 = std::max(0, -dxo);
            const int x1 = std::min(w, w - dxo);
            const double wgt = layer.weights[weight_index(layer, o, i, ky, kx)];
            double w_acc = 0.0;
            for (int y = y0; y < y1; ++y) {
              const double* dzrow = dz.data() + static_cast<std::size_t>(y) * w;
              const double* xrow =
                  x_plane.data() + static_cast<std::size_t>(y + dy) * w + dxo;
              double* dxrow = dx_plane.data() + static_cast<std::size_t>(y + dy) * w + dxo;
              for (int x = x0; x < x1; ++x) {
                w_acc += dzrow[x] * xrow[x];
                dxrow[x] += wgt * dzrow[x];
              }
            }
            grads.weights[li][weight_index(layer, o, i, ky, kx)] = w_acc;
          }
        }
      }
    }
    upstream = std::move(down);
  }
  return grads;
}

ParamGrads backward(const Network& net, const Raster& lms, const Raster& pan,
                    const Raster& grad_out) {
  ForwardTrace trace;
  forward(net, lms, pan, &trace);
  return backward(net, trace, grad_out);
}

TrainResult train(Network net, std::span<const SampleTriple> data, const TrainConfig& cfg) {
  if (data.empty()) fail(errc::invalid_argument, "training set is empty");
  if (cfg.steps < 1) fail(errc::invalid_argument, "steps must be >= 1");
  if (!(cfg.learning_rate > 0.0)) fail(errc::invalid_argument, "learning rate must be > 0");
  if (cfg.batch < 1) fail(errc::invalid_argument, "batch must be >= 1");
  net.validate();
  for (const SampleTriple& t : data) t.validate();

  const int layer_count = static_cast<int>(net.layers.size());
  std::vector<std::vector<double>> m_w(layer_count), v_w(layer_count), m_b(layer_count),
      v_b(layer_count);
  for (int l = 0; l < layer_count; ++l) {
    m_w[l].assign(net.layers[l].weights.size(), 0.0);
    v_w[l].assign(net.layers[l].weights.size(), 0.0);
    m_b[l].assign(net.layers[l].biases.size(), 0.0);
    v_b[l].assign(net.layers[l].biases.size(), 0.0);
  }

  SplitMix64 batch_rng(cfg.seed);
  TrainResult result;
  result.history.reserve(cfg.steps);

  double beta1_t = 1.0;
  double beta2_t = 1.0;
  const double inv_batch = 1.0 / cfg.batch;

  for (int step = 0; step < cfg.steps; ++step) {
    ParamGrads acc;
    acc.weights.resize(layer_count);
    acc.biases.resize(layer_count);
    for (int l = 0; l < layer_count; ++l) {
      acc.weights[l].assign(net.layers[l].weights.size(), 0.0);
      acc.biases[l].assign(net.layers[l].biases.size(), 0.0);
    }

    StepLoss losses;
    for (int j = 0; j < cfg.batch; ++j) {
      const std::size_t idx = static_cast<std::size_t>(batch_rng.next() % data.size());
      const SampleTriple& sample = data[idx];
      ForwardTrace trace;
      const Raster fused = forward(net, sample.lms, sample.pan, &trace);

      Raster grad;
      if (cfg.loss_kind == LossKind::l2) {
        LossValue lv = intra_loss(fused, sample.target, cfg.loss);
        losses.intra += lv.value;
        losses.total += lv.value;
        grad = std::move(lv.grad);
      } else {
        LossReport report = iib_loss(fused, sample.target, cfg.loss);
        losses.intra += report.intra;
        losses.inter += report.inter;
        losses.total += report.total;
        grad = std::move(report.grad);
      }
      acc.accumulate(backward(net, trace, grad));
    }
    acc.scale(inv_batch);
    losses.intra *= inv_batch;
    losses.inter *= inv_batch;
    losses.total *= inv_batch;

    beta1_t *= cfg.beta1;
    beta2_t *= cfg.beta2;
    const double bias1 = 1.0 - beta1_t;
    const double bias2 = 1.0 - beta2_t;
    for (int l = 0; l < layer_count; ++l) {
      auto update = [&](std::vector<double>& params, std::vector<double>& m,
                        std::vector<double>& v, const std::vector<double>& g) {
        for (std::size_t j = 0; j < params.size(); ++j) {
          m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
          v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
          const double m_hat = m[j] / bias1;
          const double v_hat = v[j] / bias2;
          params[j] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_epsilon);
        }
      };
      update(net.layers[l].weights, m_w[l], v_w[l], acc.weights[l]);
      update(net.layers[l].biases, m_b[l], v_b[l], acc.biases[l]);
    }
    result.history.push_back(losses);
  }

  result.net = std::move(net);
  return result;
}

MetricReport evaluate(const FuseFn& fuse, std::span<const SampleTriple> triples,
                      const std::vector<Raster>* pan_full, const EvalConfig& cfg) {
  if (triples.empty()) fail(errc::invalid_argument, "evaluation set is empty");
  if (pan_full && pan_full->size() != triples.size())
    fail(errc::geometry_mismatch, "pan_full size does not match the triple count");
  if (cfg.ratio < 2) fail(errc::invalid_argument, "ratio must be >= 2");

  MetricReport sums;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    const SampleTriple& t = triples[i];
    t.validate();
    const Raster fused = fuse(t.lms, t.pan);
    if (!fused.same_shape(t.target))
      fail(errc::geometry_mismatch, "fusion output does not match the target shape");

    sums.uiqi += uiqi(fused, t.target, cfg.uiqi_q);
    sums.sam_degrees += sam_degrees(fused, t.target);
    sums.ergas += ergas(fused, t.target, cfg.ratio);

    double dl = 0.0, ds = 0.0;
    if (pan_full) {
      const Raster& pan_hi = (*pan_full)[i];
      if (pan_hi.bands() != 1 || pan_hi.height() != t.target.height() * cfg.ratio ||
          pan_hi.width() != t.target.width() * cfg.ratio)
        fail(errc::geometry_mismatch, "pan_full geometry does not match target x ratio");
      const Raster fused_full = fuse(upsample(t.target, cfg.ratio), pan_hi);
      dl = d_lambda(fused_full, t.target, cfg.qnr_q);
      ds = d_s(fused_full, pan_hi, t.target, degrade(pan_hi, cfg.ratio), cfg.qnr_q);
    } else {
      const Raster ms_native = degrade(t.target, cfg.ratio);
      dl = d_lambda(fused, ms_native, cfg.qnr_q);
      ds = d_s(fused, t.pan, ms_native, degrade(t.pan, cfg.ratio), cfg.qnr_q);
    }
    sums.d_lambda += dl;
    sums.d_s += ds;
    sums.qnr += qnr(dl, ds);
  }

  const double inv = 1.0 / static_cast<double>(triples.size());
  MetricReport out;
  out.uiqi = sums.uiqi * inv;
  out.sam_degrees = sums.sam_degrees * inv;
  out.ergas = sums.ergas * inv;
  out.d_lambda = sums.d_lambda * inv;
  out.d_s = sums.d_s * inv;
  out.qnr = sums.qnr * inv;
  return out;
}

MetricReport evaluate(const Network& net, std::span<const SampleTriple> triples,
                      const std::vector<Raster>* pan_full, const EvalConfig& cfg) {
  return evaluate(
      [&net](const Raster& lms, const Raster& pan) { return forward(net, lms, pan); },
      triples, pan_full, cfg);
}

void save_network(const std::filesystem::path& path, const Network& net) {
  net.validate();
  for (const ConvLayer& l : net.layers)
    if (l.kernel > 0xFFFF || l.in_channels > 0xFFFF || l.out_channels > 0xFFFF)
      fail(errc::out_of_range, "layer shape exceeds the container limit");

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(errc::io_error, "cannot open " + path.string() + " for writing");
  detail::write_bytes(os, reinterpret_cast<const unsigned char*>(kMagic), 4);
  detail::write_u16(os, kVersion);
  detail::write_u16(os, static_cast<std::uint16_t>(net.layers.size()));
  for (const ConvLayer& l : net.layers) {
    detail::write_u16(os, static_cast<std::uint16_t>(l.kernel));
    detail::write_u16(os, static_cast<std::uint16_t>(l.in_channels));
    detail::write_u16(os, static_cast<std::uint16_t>(l.out_channels));
    os.put(l.rectify ? '\1' : '\0');
    for (double w : l.weights) detail::write_f64(os, w);
    for (double b : l.biases) detail::write_f64(os, b);
  }
  os.flush();
  if (!os) fail(errc::io_error, "write failed for " + path.string());
}

Network load_network(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(errc::io_error, "cannot open " + path.string());

  unsigned char magic[4];
  if (!detail::read_exact(is, magic, 4)) fail(errc::truncated_file, "file shorter than header");
  if (std::memcmp(magic, kMagic, 4) != 0) fail(errc::bad_magic, "not a network file");
  const std::uint16_t version = detail::read_u16(is);
  if (version != kVersion)
    fail(errc::version_unsupported, "network version " + std::to_string(version));

  const std::uint16_t layer_count = detail::read_u16(is);
  if (layer_count == 0) fail(errc::architecture_mismatch, "network file has no layers");

  Network net;
  net.layers.resize(layer_count);
  for (ConvLayer& l : net.layers) {
    l.kernel = detail::read_u16(is);
    l.in_channels = detail::read_u16(is);
    l.out_channels = detail::read_u16(is);
    unsigned char act = 0;
    if (!detail::read_exact(is, &act, 1)) fail(errc::truncated_file, "short read (activation)");
    if (act > 1) fail(errc::architecture_mismatch, "unknown activation flag");
    l.rectify = act == 1;
    if (l.kernel < 1 || l.kernel % 2 == 0 || l.in_channels < 1 || l.out_channels < 1)
      fail(errc::architecture_mismatch, "layer header is not a valid architecture");
    l.weights.resize(l.weight_count());
    for (double& w : l.weights) {
      w = detail::read_f64(is);
      if (!std::isfinite(w)) fail(errc::non_finite_sample, "weight is not finite");
    }
    l.biases.resize(static_cast<std::size_t>(l.out_channels));
    for (double& b : l.biases) {
      b = detail::read_f64(is);
      if (!std::isfinite(b)) fail(errc::non_finite_sample, "bias is not finite");
    }
  }
  if (is.peek() != std::char_traits<char>::eof())
    fail(errc::io_error, "trailing bytes after the last layer");

  try {
    net.validate();
  } catch (const error&) {
    fail(errc::architecture_mismatch, "stored layers violate the architecture invariants");
  }
  return net;
}

}  // namespace iib
