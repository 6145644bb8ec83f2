#pragma once

// Scalar reverse-mode automatic differentiation.
//
// A Tape is an append-only list of nodes. Each node stores its forward value
// and up to two (input index, local partial) pairs, so the reverse sweep is a
// single pass from the output down to node 0. Nodes with many inputs (a whole
// network evaluation) are recorded as custom nodes whose vector-Jacobian
// product is supplied by a TapeOp.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace hedgebench {

class Tape;

/// Backward rule for custom nodes. `record` identifies the forward call;
/// the op adds `adjoint * d(node)/d(input)` into `adjoints` for every input,
/// all of which precede the node on the tape.
class TapeOp {
 public:
  virtual ~TapeOp() = default;
  virtual void backward(std::size_t record, double adjoint, std::span<double> adjoints) const = 0;
};

class Scalar {
 public:
  Scalar() = default;
  double value() const { return value_; }
  std::uint32_t node() const { return node_; }
  Tape* tape() const { return tape_; }

 private:
  friend class Tape;
  Scalar(Tape* tape, std::uint32_t node, double value) : tape_(tape), node_(node), value_(value) {}

  Tape* tape_ = nullptr;
  std::uint32_t node_ = 0;
  double value_ = 0.0;
};

/// Contiguous run of leaf nodes holding a parameter vector.
struct ParamBlock {
  std::uint32_t first = 0;
  std::uint32_t size = 0;
};

class Tape {
 public:
  static constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

  void clear() {
    nodes_.clear();
    customs_.clear();
  }
  void reserve(std::size_t n) { nodes_.reserve(n); }
  std::size_t size() const { return nodes_.size(); }
  double value(std::uint32_t node) const { return nodes_.at(node).value; }

  Scalar variable(double v) { return push(v, kNone, 0.0, kNone, 0.0); }

  /// Leaves for a parameter vector; their adjoints form the gradient.
  ParamBlock parameters(std::span<const double> values) {
    ParamBlock block{static_cast<std::uint32_t>(nodes_.size()), static_cast<std::uint32_t>(values.size())};
    for (double v : values) push(v, kNone, 0.0, kNone, 0.0);
    return block;
  }
  Scalar parameter(const ParamBlock& block, std::size_t k) {
    const auto node = block.first + static_cast<std::uint32_t>(k);
    return Scalar(this, node, nodes_[node].value);
  }

  // Primitive records. Each returns the new node as a Scalar.
  Scalar unary(const Scalar& x, double value, double partial) {
    check(x);
    return push(value, x.node_, partial, kNone, 0.0);
  }
  Scalar binary(const Scalar& x, const Scalar& y, double value, double dx, double dy) {
    check(x);
    check(y);
    return push(value, x.node_, dx, y.node_, dy);
  }

  Scalar custom(double value, const TapeOp* op, std::size_t record) {
    customs_.push_back({op, record});
    return push(value, kCustom, 0.0, static_cast<std::uint32_t>(customs_.size() - 1), 0.0);
  }

  /// Adjoints of every node with respect to `output`.
  std::vector<double> backward(const Scalar& output) const {
    std::vector<double> adj;
    backward(output, adj);
    return adj;
  }

  /// As above, reusing `adj`'s storage.
  void backward(const Scalar& output, std::vector<double>& adj) const {
    check(output);
    adj.assign(nodes_.size(), 0.0);
    adj[output.node_] = 1.0;
    for (std::size_t i = output.node_ + 1; i-- > 0;) {
      const double a = adj[i];
      if (a == 0.0) continue;
      const Node& n = nodes_[i];
      if (n.lhs == kCustom) {
        const auto& c = customs_[n.rhs];
        c.op->backward(c.record, a, adj);
        continue;
      }
      if (n.lhs != kNone) adj[n.lhs] += a * n.dlhs;
      if (n.rhs != kNone) adj[n.rhs] += a * n.drhs;
    }
  }

  /// Gradient of `output` with respect to a parameter block.
  std::vector<double> gradient(const Scalar& output, const ParamBlock& block) const {
    const auto adj = backward(output);
    return {adj.begin() + block.first, adj.begin() + block.first + block.size};
  }

 private:
  static constexpr std::uint32_t kCustom = kNone - 1;

  struct Node {
    double value;
    std::uint32_t lhs;
    std::uint32_t rhs;
    double dlhs;
    double drhs;
  };
  struct CustomEntry {
    const TapeOp* op;
    std::size_t record;
  };

  Scalar push(double v, std::uint32_t lhs, double dlhs, std::uint32_t rhs, double drhs) {
    if (nodes_.size() >= kCustom) throw std::length_error("Tape: node limit reached");
    nodes_.push_back({v, lhs, rhs, dlhs, drhs});
    return Scalar(this, static_cast<std::uint32_t>(nodes_.size() - 1), v);
  }
  void check(const Scalar& s) const {
    if (s.tape_ != this) throw std::invalid_argument("Tape: scalar belongs to a different tape");
  }

  std::vector<Node> nodes_;
  std::vector<CustomEntry> customs_;
};

// ---------------------------------------------------------------------------
// Arithmetic on Scalars. Mixed Scalar/double forms record a single unary node.

inline Scalar operator+(const Scalar& x, const Scalar& y) {
  return x.tape()->binary(x, y, x.value() + y.value(), 1.0, 1.0);
}
inline Scalar operator-(const Scalar& x, const Scalar& y) {
  return x.tape()->binary(x, y, x.value() - y.value(), 1.0, -1.0);
}
inline Scalar operator*(const Scalar& x, const Scalar& y) {
  return x.tape()->binary(x, y, x.value() * y.value(), y.value(), x.value());
}
inline Scalar operator/(const Scalar& x, const Scalar& y) {
  if (y.value() == 0.0) throw std::domain_error("Tape: division by zero");
  const double q = x.value() / y.value();
  return x.tape()->binary(x, y, q, 1.0 / y.value(), -q / y.value());
}
inline Scalar operator-(const Scalar& x) { return x.tape()->unary(x, -x.value(), -1.0); }

inline Scalar operator+(const Scalar& x, double c) { return x.tape()->unary(x, x.value() + c, 1.0); }
inline Scalar operator+(double c, const Scalar& x) { return x + c; }
inline Scalar operator-(const Scalar& x, double c) { return x.tape()->unary(x, x.value() - c, 1.0); }
inline Scalar operator-(double c, const Scalar& x) { return x.tape()->unary(x, c - x.value(), -1.0); }
inline Scalar operator*(const Scalar& x, double c) { return x.tape()->unary(x, x.value() * c, c); }
inline Scalar operator*(double c, const Scalar& x) { return x * c; }
inline Scalar operator/(const Scalar& x, double c) {
  if (c == 0.0) throw std::domain_error("Tape: division by zero");
  return x.tape()->unary(x, x.value() / c, 1.0 / c);
}

inline Scalar exp(const Scalar& x) {
  const double e = std::exp(x.value());
  return x.tape()->unary(x, e, e);
}
inline Scalar log(const Scalar& x) {
  if (!(x.value() > 0.0)) throw std::domain_error("Tape: log of non-positive value");
  return x.tape()->unary(x, std::log(x.value()), 1.0 / x.value());
}
/// Subgradient 0 at x == 0.
inline Scalar abs(const Scalar& x) {
  const double v = x.value();
  const double d = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
  return x.tape()->unary(x, std::abs(v), d);
}
/// Partial 0 at x == 0.
inline Scalar relu(const Scalar& x) {
  const double v = x.value();
  return x.tape()->unary(x, v > 0.0 ? v : 0.0, v > 0.0 ? 1.0 : 0.0);
}
/// Square root with a zero partial at 0 instead of an infinite one.
inline Scalar sqrt(const Scalar& x) {
  const double v = x.value();
  if (v < 0.0) throw std::domain_error("Tape: sqrt of negative value");
  const double s = std::sqrt(v);
  return x.tape()->unary(x, s, s > 0.0 ? 0.5 / s : 0.0);
}

inline double relu(double x) { return x > 0.0 ? x : 0.0; }
inline double value_of(double x) { return x; }
inline double value_of(const Scalar& x) { return x.value(); }

/// Sample standard deviation (n-1) of values on a tape. Zero variance yields
/// a zero gradient.
inline Scalar sample_std(std::span<const Scalar> xs) {
  if (xs.size() < 2) throw std::invalid_argument("sample_std: need at least 2 values");
  Scalar sum = xs[0];
  for (std::size_t i = 1; i < xs.size(); ++i) sum = sum + xs[i];
  const Scalar mean = sum / static_cast<double>(xs.size());
  Scalar ss = (xs[0] - mean) * (xs[0] - mean);
  for (std::size_t i = 1; i < xs.size(); ++i) {
    const Scalar d = xs[i] - mean;
    ss = ss + d * d;
  }
  return sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace hedgebench
