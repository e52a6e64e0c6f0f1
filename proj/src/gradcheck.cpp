#include "iib/gradcheck.hpp"

#include <cmath>
#include <functional>

#include "iib/loss.hpp"
#include "iib/refnet.hpp"
#include "iib/rng.hpp"

namespace iib {

namespace {

constexpr double kStep = 1e-5;
constexpr int kTrials = 10;

double entry_error(double analytic, double reference) {
  const double diff = std::fabs(analytic - reference);
  return std::fabs(analytic) < 1e-8 ? diff : diff / std::fabs(analytic);
}

double max_error(std::span<const double> analytic, std::span<const double> reference) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i)
    worst = std::max(worst, entry_error(analytic[i], reference[i]));
  return worst;
}

std::vector<double> central_difference(std::vector<double*> slots,
                                       const std::function<double()>& eval) {
  std::vector<double> out(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const double saved = *slots[i];
    *slots[i] = saved + kStep;
    const double up = eval();
    *slots[i] = saved - kStep;
    const double down = eval();
    *slots[i] = saved;
    out[i] = (up - down) / (2.0 * kStep);
  }
  return out;
}

Raster random_raster(SplitMix64& rng, int bands, int h, int w) {
  Raster r(bands, h, w);
  for (double& v : r.samples()) v = rng.uniform();
  return r;
}

double check_q_window(const GradCheckConfig& cfg) {
  double worst = 0.0;
  const int n = cfg.q.window * cfg.q.window;
  for (int trial = 0; trial < kTrials; ++trial) {
    SplitMix64 rng(cfg.seed + 101 * static_cast<std::uint64_t>(trial) + 1);
    std::vector<double> x(n), y(n);
    for (auto& v : x) v = rng.uniform();
    for (auto& v : y) v = rng.uniform();

    auto grads = q_window_grad(x, y, cfg.q.epsilon);
    if (cfg.corrupt) grads.dx[0] += 1e-3;

    std::vector<double*> slots;
    for (auto& v : x) slots.push_back(&v);
    const auto fd_x =
        central_difference(slots, [&] { return q_local(x, y, cfg.q.epsilon); });
    worst = std::max(worst, max_error(grads.dx, fd_x));

    slots.clear();
    for (auto& v : y) slots.push_back(&v);
    const auto fd_y =
        central_difference(slots, [&] { return q_local(x, y, cfg.q.epsilon); });
    worst = std::max(worst, max_error(grads.dy, fd_y));
  }
  return worst;
}

double check_loss(const GradCheckConfig& cfg, bool combined) {
  LossConfig loss_cfg;
  loss_cfg.q = cfg.q;
  double worst = 0.0;
  for (int trial = 0; trial < kTrials; ++trial) {
    SplitMix64 rng(cfg.seed + 211 * static_cast<std::uint64_t>(trial) + 2);
    const Raster m = random_raster(rng, cfg.bands, cfg.size, cfg.size);
    Raster f = random_raster(rng, cfg.bands, cfg.size, cfg.size);

    Raster analytic =
        combined ? iib_loss(f, m, loss_cfg).grad : inter_loss(f, m, loss_cfg).grad;
    if (cfg.corrupt) analytic.samples()[0] += 1e-3;

    std::vector<double*> slots;
    for (double& v : f.samples()) slots.push_back(&v);
    const auto fd = central_difference(slots, [&] {
      return combined ? iib_loss(f, m, loss_cfg).total : inter_loss(f, m, loss_cfg).value;
    });
    worst = std::max(worst, max_error(analytic.samples(), fd));
  }
  return worst;
}

double check_backprop(const GradCheckConfig& cfg, LossKind kind) {
  LossConfig loss_cfg;
  loss_cfg.q = cfg.q;
  // A 2-layer network over an 8x8 sample keeps the sweep over every
  // parameter cheap while exercising both conv layers and the rectifier.
  loss_cfg.q.window = std::min(loss_cfg.q.window, 8);
  double worst = 0.0;
  for (int trial = 0; trial < kTrials; ++trial) {
    SplitMix64 rng(cfg.seed + 307 * static_cast<std::uint64_t>(trial) + 3);
    Network net = init_network(cfg.bands, {4, cfg.bands}, {3, 3},
                               cfg.seed + 7919 * static_cast<std::uint64_t>(trial));
    const Raster lms = random_raster(rng, cfg.bands, 8, 8);
    const Raster pan = random_raster(rng, 1, 8, 8);
    const Raster target = random_raster(rng, cfg.bands, 8, 8);

    const auto objective = [&] {
      const Raster fused = forward(net, lms, pan);
      return kind == LossKind::l2 ? intra_loss(fused, target, loss_cfg).value
                                  : iib_loss(fused, target, loss_cfg).total;
    };

    ForwardTrace trace;
    const Raster fused = forward(net, lms, pan, &trace);
    const Raster grad_out = kind == LossKind::l2 ? intra_loss(fused, target, loss_cfg).grad
                                                 : iib_loss(fused, target, loss_cfg).grad;
    auto analytic = backward(net, trace, grad_out);
    if (cfg.corrupt) analytic.weights[0][0] += 1e-3;

    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      std::vector<double*> slots;
      for (double& w : net.layers[l].weights) slots.push_back(&w);
      for (double& b : net.layers[l].biases) slots.push_back(&b);
      const auto fd = central_difference(slots, objective);
      std::vector<double> got(analytic.weights[l]);
      got.insert(got.end(), analytic.biases[l].begin(), analytic.biases[l].end());
      worst = std::max(worst, max_error(got, fd));
    }
  }
  return worst;
}

}  // namespace

std::vector<GradCheckItem> run_gradcheck(const GradCheckConfig& cfg) {
  if (cfg.bands < 2) fail(errc::invalid_argument, "gradcheck needs at least 2 bands");
  if (cfg.size < cfg.q.window) fail(errc::invalid_argument, "size must fit the window");
  std::vector<GradCheckItem> items;
  items.push_back({"q_window_grad", check_q_window(cfg)});
  items.push_back({"inter_loss", check_loss(cfg, false)});
  items.push_back({"iib_loss", check_loss(cfg, true)});
  items.push_back({"backprop_l2", check_backprop(cfg, LossKind::l2)});
  items.push_back({"backprop_iib", check_backprop(cfg, LossKind::iib)});
  return items;
}

}  // namespace iib
