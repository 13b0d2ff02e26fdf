#pragma once

// Small dense network: ReLU hidden layers, identity output. Forward and
// backward passes are written out by hand over Eigen matrices; inputs are
// batched column-wise (features x batch).

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#if defined(__SSE__)
#include <xmmintrin.h>
#endif

#include "fsodl/error.hpp"
#include "fsodl/rng.hpp"

namespace fsodl {

// Flushes denormals to zero while alive. Adam moments of inactive units
// decay geometrically into the denormal range, which slows training ~5x.
class ScopedFlushDenormals {
 public:
#if defined(__SSE__)
  ScopedFlushDenormals() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040); }
  ~ScopedFlushDenormals() { _mm_setcsr(saved_); }

 private:
  unsigned saved_;
#else
  ScopedFlushDenormals() = default;
#endif
  ScopedFlushDenormals(const ScopedFlushDenormals&) = delete;
  ScopedFlushDenormals& operator=(const ScopedFlushDenormals&) = delete;
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

struct Gradients {
  std::vector<DenseLayer> layers;

  double squared_norm() const {
    double s = 0;
    for (const auto& l : layers) s += l.weight.squaredNorm() + l.bias.squaredNorm();
    return s;
  }

  void scale(double f) {
    for (auto& l : layers) {
      l.weight *= f;
      l.bias *= f;
    }
  }
};

class Mlp {
 public:
  Mlp() = default;

  // He-uniform weights, zero biases.
  Mlp(const std::vector<int>& sizes, Rng& rng) {
    if (sizes.size() < 2) throw ConfigError("network needs input and output sizes");
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
      if (sizes[i] <= 0 || sizes[i + 1] <= 0) throw ConfigError("layer sizes must be positive");
      const double bound = std::sqrt(6.0 / sizes[i]);
      DenseLayer l{Eigen::MatrixXd(sizes[i + 1], sizes[i]), Eigen::VectorXd::Zero(sizes[i + 1])};
      for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
        for (Eigen::Index c = 0; c < l.weight.cols(); ++c)
          l.weight(r, c) = (2.0 * uniform01(rng) - 1.0) * bound;
      layers_.push_back(std::move(l));
    }
  }

  explicit Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      if (layers_[i].weight.rows() != layers_[i].bias.size())
        throw ConfigError("bias size does not match layer output");
      if (i > 0 && layers_[i].weight.cols() != layers_[i - 1].weight.rows())
        throw ConfigError("layer input does not match previous output");
    }
  }

  int input_size() const { return static_cast<int>(layers_.front().weight.cols()); }
  int output_size() const { return static_cast<int>(layers_.back().weight.rows()); }

  std::vector<int> sizes() const {
    std::vector<int> s{input_size()};
    for (const auto& l : layers_) s.push_back(static_cast<int>(l.weight.rows()));
    return s;
  }

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  // Activations per layer, input first; kept for the backward pass.
  struct Tape {
    std::vector<Eigen::MatrixXd> activations;
  };

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Tape* tape = nullptr) const {
    if (x.rows() != input_size())
      throw ConfigError("input has " + std::to_string(x.rows()) + " features, network expects " +
                        std::to_string(input_size()));
    if (tape) {
      tape->activations.clear();
      tape->activations.push_back(x);
    }
    Eigen::MatrixXd a = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      Eigen::MatrixXd z = (layers_[i].weight * a).colwise() + layers_[i].bias;
      a = i + 1 < layers_.size() ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
      if (tape) tape->activations.push_back(a);
    }
    return a;
  }

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const {
    return forward(Eigen::MatrixXd(x)).col(0);
  }

  // Parameter gradients given dLoss/dOutput for the taped batch.
  Gradients backward(const Tape& tape, const Eigen::MatrixXd& d_output) const {
    if (tape.activations.size() != layers_.size() + 1)
      throw ConfigError("tape does not belong to this network");
    if (d_output.rows() != output_size() || d_output.cols() != tape.activations.back().cols())
      throw ConfigError("output gradient has wrong shape");
    Gradients g;
    g.layers.resize(layers_.size());
    Eigen::MatrixXd delta = d_output;
    for (std::size_t i = layers_.size(); i-- > 0;) {
      const auto& in = tape.activations[i];
      g.layers[i].weight = delta * in.transpose();
      g.layers[i].bias = delta.rowwise().sum();
      if (i > 0) {
        delta = layers_[i].weight.transpose() * delta;
        // ReLU derivative from the post-activation value
        delta = delta.cwiseProduct((in.array() > 0.0).cast<double>().matrix());
      }
    }
    return g;
  }

  // Adds l2/2 * ||W||^2 (weights only) to a gradient: g += l2 * W.
  void add_l2(Gradients& g, double l2) const {
    for (std::size_t i = 0; i < layers_.size(); ++i) g.layers[i].weight += l2 * layers_[i].weight;
  }

  double l2_penalty(double l2) const {
    double s = 0;
    for (const auto& l : layers_) s += l.weight.squaredNorm();
    return 0.5 * l2 * s;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
    return n;
  }

  // Polyak averaging toward `source`: this <- (1 - tau) * this + tau * source.
  void soft_update_from(const Mlp& source, double tau) {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      layers_[i].weight = (1.0 - tau) * layers_[i].weight + tau * source.layers_[i].weight;
      layers_[i].bias = (1.0 - tau) * layers_[i].bias + tau * source.layers_[i].bias;
    }
  }

  bool finite() const {
    for (const auto& l : layers_)
      if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    return true;
  }

 private:
  std::vector<DenseLayer> layers_;
};

inline double distance(const Mlp& a, const Mlp& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.layers().size(); ++i)
    s += (a.layers()[i].weight - b.layers()[i].weight).squaredNorm() +
         (a.layers()[i].bias - b.layers()[i].bias).squaredNorm();
  return std::sqrt(s);
}

class Adam {
 public:
  explicit Adam(double learning_rate = 0.01, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(learning_rate), b1_(beta1), b2_(beta2), eps_(eps) {}

  void step(Mlp& net, const Gradients& g) {
    auto& layers = net.layers();
    if (m_.layers.empty()) {
      for (const auto& l : layers) {
        m_.layers.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()),
                             Eigen::VectorXd::Zero(l.bias.size())});
      }
      v_ = m_;
    }
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    auto update = [&](auto& param, auto& m, auto& v, const auto& grad) {
      m = b1_ * m + (1.0 - b1_) * grad;
      v = b2_ * v + (1.0 - b2_) * grad.cwiseProduct(grad);
      param.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
    };
    for (std::size_t i = 0; i < layers.size(); ++i) {
      update(layers[i].weight, m_.layers[i].weight, v_.layers[i].weight, g.layers[i].weight);
      update(layers[i].bias, m_.layers[i].bias, v_.layers[i].bias, g.layers[i].bias);
    }
  }

 private:
  double lr_, b1_, b2_, eps_;
  long t_ = 0;
  Gradients m_, v_;
};

}  // namespace fsodl
