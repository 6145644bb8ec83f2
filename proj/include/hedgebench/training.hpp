#pragma once

// Training the hedging network: batch loss = sample std of Z_T (summed over
// option specs), gradients from the tape, Adam updates.

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "hedgebench/hedging.hpp"
#include "hedgebench/mlp.hpp"
#include "hedgebench/random.hpp"
#include "hedgebench/simulation.hpp"
#include "hedgebench/tape.hpp"

namespace hedgebench {

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<double> m;
  std::vector<double> v;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// Bias-corrected Adam, same arithmetic as torch.optim.Adam without weight decay.
inline void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size())
    throw std::invalid_argument("adam_step: shape mismatch");
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  const double step_size = state.lr / bc1;
  const double bc2_sqrt = std::sqrt(bc2);
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double g = grads[k];
    state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * g;
    state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * g * g;
    const double denom = std::sqrt(state.v[k]) / bc2_sqrt + state.epsilon;
    params[k] -= step_size * state.m[k] / denom;
  }
}

struct TrainConfig {
  std::size_t batch_size = 64;
  std::size_t epochs = 500;
  std::uint64_t seed = 42;
  /// One spec trains the single-option loss; several sum their stds.
  std::vector<OptionSpec> options{OptionSpec{}};
  CostModel cost;
  double r = 0.0;
  double lr = 1e-3;
};

/// Loss and gradient of one batch.
struct BatchResult {
  double loss = 0.0;
  std::vector<double> grad;
};

namespace detail {

inline void check_batch(const PathSet& paths, std::span<const std::size_t> rows,
                        std::span<const OptionSpec> options) {
  if (rows.size() < 2) throw std::invalid_argument("batch_loss: batch needs at least 2 paths");
  if (options.empty()) throw std::invalid_argument("batch_loss: need at least one option spec");
  if (!paths.t0_normalized()) throw std::invalid_argument("batch_loss: paths must be t0-normalized");
}

}  // namespace detail

/// Records the batch loss on `tape` through `net`. Returns the loss Scalar.
inline Scalar batch_loss(MlpTapeOp& net, Tape& tape, const PathSet& paths, std::span<const std::size_t> rows,
                         std::span<const OptionSpec> options, double r, const CostModel& cost) {
  detail::check_batch(paths, rows, options);
  const Scalar flat = tape.variable(0.0);
  auto policy = [&net](double m, double ttm, const Scalar& prev) {
    const std::array<double, 2> c{m, ttm};
    return net(c, prev);
  };
  std::vector<Scalar> costs(rows.size());
  Scalar loss;
  for (std::size_t o = 0; o < options.size(); ++o) {
    for (std::size_t k = 0; k < rows.size(); ++k)
      costs[k] = hedge_ledger(paths.row(rows[k]), paths.dt(), policy, options[o], r, cost, flat).total;
    const Scalar s = sample_std(costs);
    loss = o == 0 ? s : loss + s;
  }
  return loss;
}

/// Loss and parameter gradient for one batch.
inline BatchResult batch_loss_and_grad(const MlpParams& params, const PathSet& paths,
                                       std::span<const std::size_t> rows, std::span<const OptionSpec> options,
                                       double r, const CostModel& cost) {
  Tape tape;
  tape.reserve(params.size() + rows.size() * paths.n_points() * 10 * options.size());
  MlpTapeOp net(params, tape);
  const Scalar loss = batch_loss(net, tape, paths, rows, options, r, cost);
  return {loss.value(), tape.gradient(loss, net.block())};
}

/// Plain (untaped) batch loss, for finite differences and monitoring.
inline double batch_loss_value(const MlpParams& params, const PathSet& paths, std::span<const std::size_t> rows,
                               std::span<const OptionSpec> options, double r, const CostModel& cost) {
  detail::check_batch(paths, rows, options);
  const Strategy strategy = nn_strategy(params);
  std::vector<double> costs(rows.size());
  double loss = 0.0;
  for (const auto& spec : options) {
    for (std::size_t k = 0; k < rows.size(); ++k)
      costs[k] = compute_zt(paths.row(rows[k]), paths.dt(), strategy, spec, r, cost);
    loss += sample_std(costs);
  }
  return loss;
}

/// Batches for one epoch: consecutive slices of `order`. A trailing short
/// batch is kept if it has at least two paths, otherwise dropped.
inline std::vector<std::span<const std::size_t>> make_batches(std::span<const std::size_t> order,
                                                              std::size_t batch_size) {
  if (batch_size < 2) throw std::invalid_argument("train: batch_size must be >= 2");
  std::vector<std::span<const std::size_t>> out;
  for (std::size_t b = 0; b < order.size(); b += batch_size) {
    const std::size_t len = std::min(batch_size, order.size() - b);
    if (len >= 2) out.push_back(order.subspan(b, len));
  }
  return out;
}

struct LossRecord {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double loss = 0.0;
};

struct TrainResult {
  MlpParams params;
  std::vector<LossRecord> history;
};

/// Called after every optimizer step (progress reporting).
using TrainObserver = std::function<void(const LossRecord&)>;

/// Adam on the batch-std loss. Path order is reshuffled every epoch with a
/// permutation drawn from `config.seed`; the network is initialized from the
/// same seed. Parameters after the final epoch are returned.
inline TrainResult train(const TrainConfig& config, const PathSet& train_paths,
                         const TrainObserver& observer = {}) {
  if (!train_paths.t0_normalized()) throw std::invalid_argument("train: paths must be t0-normalized");
  if (train_paths.n_paths() < 2) throw std::invalid_argument("train: need at least 2 paths");
  config.cost.validate();
  for (const auto& o : config.options) o.validate();

  TrainResult result{kaiming_init(config.seed), {}};
  AdamState adam(result.params.size());
  adam.lr = config.lr;
  NormalStream shuffle_rng(substream_seed(config.seed, 0x73687566ULL));

  Tape tape;
  MlpTapeOp net(result.params, tape);
  std::vector<double> adjoints;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = seeded_permutation(train_paths.n_paths(), shuffle_rng);
    for (const auto batch : make_batches(order, config.batch_size)) {
      tape.clear();
      net.reset();
      const Scalar l = batch_loss(net, tape, train_paths, batch, config.options, config.r, config.cost);
      const double loss = l.value();
      tape.backward(l, adjoints);
      const auto grad = std::span<const double>(adjoints).subspan(net.block().first, net.block().size);
      adam_step(result.params.values(), grad, adam);
      LossRecord rec{++step, epoch, loss};
      result.history.push_back(rec);
      if (observer) observer(rec);
    }
  }
  return result;
}

}  // namespace hedgebench
