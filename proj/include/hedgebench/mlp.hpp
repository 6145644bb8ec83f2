#pragma once

// Fully connected ReLU network: linear -> relu -> ... -> linear, raw output.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hedgebench/random.hpp"
#include "hedgebench/tape.hpp"

namespace hedgebench {

/// Widths of the hedging network: (moneyness, ttm, prev hedge) -> 64 -> 32 -> hedge.
inline const std::vector<std::size_t> kDeltaNetWidths{3, 64, 32, 1};

/// Flat parameter vector with per-layer views. Layer l stores its weight
/// matrix (out x in, row-major) followed by its bias, in layer order.
class MlpParams {
 public:
  MlpParams() : MlpParams(kDeltaNetWidths) {}
  explicit MlpParams(std::vector<std::size_t> widths) : widths_(std::move(widths)) {
    if (widths_.size() < 2) throw std::invalid_argument("MlpParams: need at least 2 widths");
    if (widths_.back() != 1) throw std::invalid_argument("MlpParams: output width must be 1");
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
      if (widths_[l] == 0 || widths_[l + 1] == 0) throw std::invalid_argument("MlpParams: zero width");
      weight_offset_.push_back(off);
      off += widths_[l + 1] * widths_[l];
      bias_offset_.push_back(off);
      off += widths_[l + 1];
    }
    values_.assign(off, 0.0);
  }

  const std::vector<std::size_t>& widths() const { return widths_; }
  std::size_t n_layers() const { return widths_.size() - 1; }
  std::size_t fan_in(std::size_t layer) const { return widths_[layer]; }
  std::size_t fan_out(std::size_t layer) const { return widths_[layer + 1]; }
  std::size_t size() const { return values_.size(); }
  std::size_t max_width() const {
    std::size_t m = 0;
    for (auto w : widths_) m = std::max(m, w);
    return m;
  }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  std::span<double> weights(std::size_t l) { return {values_.data() + weight_offset_[l], fan_out(l) * fan_in(l)}; }
  std::span<const double> weights(std::size_t l) const {
    return {values_.data() + weight_offset_[l], fan_out(l) * fan_in(l)};
  }
  std::span<double> bias(std::size_t l) { return {values_.data() + bias_offset_[l], fan_out(l)}; }
  std::span<const double> bias(std::size_t l) const { return {values_.data() + bias_offset_[l], fan_out(l)}; }
  std::size_t weight_offset(std::size_t l) const { return weight_offset_[l]; }
  std::size_t bias_offset(std::size_t l) const { return bias_offset_[l]; }

  bool operator==(const MlpParams& o) const { return widths_ == o.widths_ && values_ == o.values_; }

 private:
  std::vector<std::size_t> widths_;
  std::vector<std::size_t> weight_offset_;
  std::vector<std::size_t> bias_offset_;
  std::vector<double> values_;
};

/// PyTorch's default nn.Linear initialization: kaiming_uniform_ with a = sqrt(5)
/// gives gain sqrt(2 / (1 + 5)) and bound gain * sqrt(3 / fan_in) = 1 / sqrt(fan_in)
/// for weights; biases are uniform on +-1 / sqrt(fan_in).
inline MlpParams kaiming_init(std::uint64_t seed, const std::vector<std::size_t>& widths = kDeltaNetWidths) {
  MlpParams p(widths);
  NormalStream rng(substream_seed(seed, 0x6E6574ULL));
  for (std::size_t l = 0; l < p.n_layers(); ++l) {
    const double gain = std::sqrt(2.0 / (1.0 + 5.0));
    const double w_bound = gain * std::sqrt(3.0 / static_cast<double>(p.fan_in(l)));
    const double b_bound = 1.0 / std::sqrt(static_cast<double>(p.fan_in(l)));
    for (double& w : p.weights(l)) w = (2.0 * rng.uniform() - 1.0) * w_bound;
    for (double& b : p.bias(l)) b = (2.0 * rng.uniform() - 1.0) * b_bound;
  }
  return p;
}

namespace detail {

/// out = W x + b for one layer.
inline void affine(const MlpParams& p, std::size_t l, const double* x, double* out) {
  const std::size_t in = p.fan_in(l), n_out = p.fan_out(l);
  const double* w = p.weights(l).data();
  const double* b = p.bias(l).data();
  // Four independent partial sums let the compiler vectorize the dot product
  // without reassociating floating-point adds; the order is fixed, so results
  // stay deterministic.
  const std::size_t in4 = in - in % 4;
  for (std::size_t o = 0; o < n_out; ++o) {
    const double* row = w + o * in;
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    for (std::size_t k = 0; k < in4; k += 4)
      for (std::size_t j = 0; j < 4; ++j) acc[j] += row[k + j] * x[k + j];
    double tail = b[o];
    for (std::size_t k = in4; k < in; ++k) tail += row[k] * x[k];
    out[o] = tail + ((acc[0] + acc[1]) + (acc[2] + acc[3]));
  }
}

}  // namespace detail

/// Forward pass. If `activations` is non-null it receives the input followed by
/// every hidden layer's post-relu output (sum of widths except the last).
inline double mlp_forward(const MlpParams& p, std::span<const double> input, double* activations = nullptr) {
  if (input.size() != p.fan_in(0))
    throw std::invalid_argument("mlp_forward: expected " + std::to_string(p.fan_in(0)) + " inputs");
  thread_local std::vector<double> scratch;
  const std::size_t total = std::accumulate(p.widths().begin(), p.widths().end() - 1, std::size_t{0});
  double* act = activations;
  if (act == nullptr) {
    scratch.resize(total);
    act = scratch.data();
  }
  std::copy(input.begin(), input.end(), act);
  double* x = act;
  double out = 0.0;
  for (std::size_t l = 0; l < p.n_layers(); ++l) {
    if (l + 1 == p.n_layers()) {
      detail::affine(p, l, x, &out);
    } else {
      double* h = x + p.fan_in(l);
      detail::affine(p, l, x, h);
      for (std::size_t k = 0; k < p.fan_out(l); ++k) h[k] = h[k] > 0.0 ? h[k] : 0.0;
      x = h;
    }
  }
  return out;
}

inline double mlp_forward(const MlpParams& p, const std::array<double, 3>& input) {
  return mlp_forward(p, std::span<const double>(input));
}

/// Records network evaluations on a tape as custom nodes. The parameters are
/// registered as one ParamBlock; the last input may be an active Scalar (the
/// previous hedge fed back into the network), the others are constants.
///
/// The object must outlive every backward sweep over its tape.
class MlpTapeOp final : public TapeOp {
 public:
  MlpTapeOp(const MlpParams& params, Tape& tape)
      : params_(params), tape_(tape), block_(tape.parameters(params.values())) {
    stride_ = std::accumulate(params.widths().begin(), params.widths().end() - 1, std::size_t{0});
  }
  MlpTapeOp(const MlpTapeOp&) = delete;
  MlpTapeOp& operator=(const MlpTapeOp&) = delete;

  const ParamBlock& block() const { return block_; }

  /// Re-registers the (possibly updated) parameters on a cleared tape and
  /// forgets previous records, keeping buffer capacity.
  void reset() {
    activations_.clear();
    feedback_nodes_.clear();
    block_ = tape_.parameters(params_.values());
  }

  /// Evaluates the network on (constants..., feedback). `feedback` is the last input.
  Scalar operator()(std::span<const double> constants, const Scalar& feedback) {
    if (constants.size() + 1 != params_.fan_in(0))
      throw std::invalid_argument("MlpTapeOp: input width mismatch");
    const std::size_t record = feedback_nodes_.size();
    activations_.resize((record + 1) * stride_);
    double* act = activations_.data() + record * stride_;
    input_.assign(constants.begin(), constants.end());
    input_.push_back(feedback.value());
    const double out = mlp_forward(params_, input_, act);
    feedback_nodes_.push_back(feedback.node());
    return tape_.custom(out, this, record);
  }

  void backward(std::size_t record, double adjoint, std::span<double> adjoints) const override {
    const MlpParams& p = params_;
    const double* act = activations_.data() + record * stride_;
    double* grad = adjoints.data() + block_.first;

    // Layer outputs live at act + offset; the delta buffer runs backward through them.
    thread_local std::vector<double> delta, next;
    const std::size_t L = p.n_layers();
    thread_local std::vector<std::size_t> offs;
    offs.resize(L);
    std::size_t off = 0;
    for (std::size_t l = 0; l < L; ++l) {
      offs[l] = off;  // input of layer l
      off += p.fan_in(l);
    }
    delta.assign(1, adjoint);
    for (std::size_t l = L; l-- > 0;) {
      const std::size_t in = p.fan_in(l), n_out = p.fan_out(l);
      const double* x = act + offs[l];
      const double* w = p.weights(l).data();
      double* gw = grad + p.weight_offset(l);
      double* gb = grad + p.bias_offset(l);
      next.assign(in, 0.0);
      for (std::size_t o = 0; o < n_out; ++o) {
        const double d = delta[o];
        if (d == 0.0) continue;
        gb[o] += d;
        double* gw_row = gw + o * in;
        const double* w_row = w + o * in;
        for (std::size_t k = 0; k < in; ++k) {
          gw_row[k] += d * x[k];
          next[k] += d * w_row[k];
        }
      }
      if (l > 0) {
        // relu mask: the layer input is a post-relu activation.
        for (std::size_t k = 0; k < in; ++k)
          if (!(x[k] > 0.0)) next[k] = 0.0;
      }
      delta.swap(next);
    }
    adjoints[feedback_nodes_[record]] += delta[p.fan_in(0) - 1];
  }

 private:
  const MlpParams& params_;
  Tape& tape_;
  ParamBlock block_;
  std::size_t stride_ = 0;
  std::vector<double> activations_;
  std::vector<std::uint32_t> feedback_nodes_;
  std::vector<double> input_;
};

}  // namespace hedgebench
