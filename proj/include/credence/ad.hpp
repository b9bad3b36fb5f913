#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace credence::ad {

/// Operation-recording tape for reverse-mode differentiation of scalar
/// expressions. Each node stores at most two parents together with the
/// local partial derivatives of the node value with respect to them.
///
/// A tape is owned by a single gradient evaluation; it is never shared
/// between threads.
class Tape {
 public:
  struct Node {
    double w0;
    double w1;
    std::int32_t p0;
    std::int32_t p1;
  };

  std::int32_t emit(double w0, std::int32_t p0, double w1, std::int32_t p1) {
    nodes_.push_back(Node{w0, w1, p0, p1});
    return static_cast<std::int32_t>(nodes_.size()) - 1;
  }

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }
  void reserve(std::size_t n) { nodes_.reserve(n); }

  /// Adjoints of every node with respect to `root`, by a single reverse
  /// sweep. Nodes recorded after `root` do not contribute.
  std::vector<double> adjoints(std::int32_t root) const {
    std::vector<double> adj(nodes_.size(), 0.0);
    if (root < 0) return adj;
    adj[static_cast<std::size_t>(root)] = 1.0;
    for (std::int32_t i = root; i >= 0; --i) {
      const double a = adj[static_cast<std::size_t>(i)];
      if (a == 0.0) continue;
      const Node& n = nodes_[static_cast<std::size_t>(i)];
      if (n.p0 >= 0) adj[static_cast<std::size_t>(n.p0)] += n.w0 * a;
      if (n.p1 >= 0) adj[static_cast<std::size_t>(n.p1)] += n.w1 * a;
    }
    return adj;
  }

 private:
  std::vector<Node> nodes_;
};

/// A scalar value tracked on a tape. Vars without a tape behave as
/// constants and fold arithmetic eagerly.
class Var {
 public:
  Var() : val_(0.0), idx_(-1), tape_(nullptr) {}
  Var(double v) : val_(v), idx_(-1), tape_(nullptr) {}  // NOLINT: implicit by design
  Var(Tape* tape, double v, std::int32_t idx) : val_(v), idx_(idx), tape_(tape) {}

  double value() const { return val_; }
  std::int32_t index() const { return idx_; }
  Tape* tape() const { return tape_; }

 private:
  double val_;
  std::int32_t idx_;
  Tape* tape_;
};

/// Creates an independent (leaf) variable on `tape`.
inline Var leaf(Tape& tape, double v) {
  return Var(&tape, v, tape.emit(0.0, -1, 0.0, -1));
}

inline Tape* tape_of(const Var& a, const Var& b) {
  return a.tape() != nullptr ? a.tape() : b.tape();
}

inline Var binary(const Var& a, const Var& b, double v, double da, double db) {
  Tape* t = tape_of(a, b);
  if (t == nullptr) return Var(v);
  return Var(t, v, t->emit(da, a.index(), db, b.index()));
}

inline Var unary(const Var& a, double v, double da) {
  if (a.tape() == nullptr) return Var(v);
  return Var(a.tape(), v, a.tape()->emit(da, a.index(), 0.0, -1));
}

inline Var operator+(const Var& a, const Var& b) {
  return binary(a, b, a.value() + b.value(), 1.0, 1.0);
}
inline Var operator-(const Var& a, const Var& b) {
  return binary(a, b, a.value() - b.value(), 1.0, -1.0);
}
inline Var operator*(const Var& a, const Var& b) {
  return binary(a, b, a.value() * b.value(), b.value(), a.value());
}
inline Var operator/(const Var& a, const Var& b) {
  const double inv = 1.0 / b.value();
  return binary(a, b, a.value() * inv, inv, -a.value() * inv * inv);
}
inline Var operator-(const Var& a) { return unary(a, -a.value(), -1.0); }
inline Var operator+(const Var& a) { return a; }

inline Var& operator+=(Var& a, const Var& b) { return a = a + b; }
inline Var& operator-=(Var& a, const Var& b) { return a = a - b; }
inline Var& operator*=(Var& a, const Var& b) { return a = a * b; }
inline Var& operator/=(Var& a, const Var& b) { return a = a / b; }

inline bool operator<(const Var& a, const Var& b) { return a.value() < b.value(); }
inline bool operator>(const Var& a, const Var& b) { return a.value() > b.value(); }
inline bool operator<=(const Var& a, const Var& b) { return a.value() <= b.value(); }
inline bool operator>=(const Var& a, const Var& b) { return a.value() >= b.value(); }

inline Var exp(const Var& a) {
  const double e = std::exp(a.value());
  return unary(a, e, e);
}

inline Var log(const Var& a) { return unary(a, std::log(a.value()), 1.0 / a.value()); }

inline Var log1p(const Var& a) {
  return unary(a, std::log1p(a.value()), 1.0 / (1.0 + a.value()));
}

inline Var sqrt(const Var& a) {
  const double s = std::sqrt(a.value());
  return unary(a, s, 0.5 / s);
}

// Derivative reuses the forward value: d tanh = 1 - tanh^2.
inline Var tanh(const Var& a) {
  const double t = std::tanh(a.value());
  return unary(a, t, 1.0 - t * t);
}

inline double logistic_value(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Derivative reuses the forward value: d logistic = s(1 - s).
inline Var logistic(const Var& a) {
  const double s = logistic_value(a.value());
  return unary(a, s, s * (1.0 - s));
}

inline double softplus_value(double x) {
  // log(1 + e^x) without overflow for large |x|.
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

inline Var softplus(const Var& a) {
  return unary(a, softplus_value(a.value()), logistic_value(a.value()));
}

inline double value_of(const Var& a) { return a.value(); }
inline double value_of(double a) { return a; }

}  // namespace credence::ad

namespace credence {

// double overloads so generic model code can call these unqualified on
// either scalar type; the ad::Var overloads are found through ADL.
inline double logistic(double x) { return ad::logistic_value(x); }
inline double softplus(double x) { return ad::softplus_value(x); }

}  // namespace credence
