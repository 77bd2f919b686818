#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "hgrade/errors.hpp"
#include "hgrade/rng.hpp"

namespace hgrade {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// A named trainable tensor with its gradient accumulator. Vectors are stored
// as n-by-1 matrices.
struct Param {
  std::string name;
  Mat w;
  Mat g;
};

class ParamStore {
 public:
  Param* add(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
    if (index_.count(name)) throw Error(Err::ConfigInvalid, "duplicate parameter " + name);
    items_.push_back(std::make_unique<Param>(Param{name, Mat::Zero(rows, cols), Mat::Zero(rows, cols)}));
    Param* p = items_.back().get();
    index_[name] = p;
    return p;
  }

  Param* find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : it->second;
  }

  const std::vector<std::unique_ptr<Param>>& items() const { return items_; }

  void zero_grads() {
    for (auto& p : items_) p->g.setZero();
  }

  size_t scalar_count() const {
    size_t n = 0;
    for (const auto& p : items_) n += static_cast<size_t>(p->w.size());
    return n;
  }

  std::vector<Mat> snapshot() const {
    std::vector<Mat> vals;
    vals.reserve(items_.size());
    for (const auto& p : items_) vals.push_back(p->w);
    return vals;
  }

  void restore(const std::vector<Mat>& vals) {
    if (vals.size() != items_.size()) throw Error(Err::ConfigInvalid, "snapshot size mismatch");
    for (size_t i = 0; i < vals.size(); ++i) items_[i]->w = vals[i];
  }

 private:
  std::vector<std::unique_ptr<Param>> items_;
  std::unordered_map<std::string, Param*> index_;
};

// ---------------------------------------------------------------------------
// Elementwise ops

inline double gelu_scalar(double x) {
  return 0.5 * x * (1.0 + std::erf(x * 0.7071067811865475244));
}

inline double gelu_grad_scalar(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * 0.7071067811865475244));
  const double pdf = 0.3989422804014326779 * std::exp(-0.5 * x * x);
  return cdf + x * pdf;
}

inline Mat gelu(const Mat& x) { return x.unaryExpr(&gelu_scalar); }

inline Mat gelu_backward(const Mat& pre, const Mat& dpost) {
  return dpost.cwiseProduct(pre.unaryExpr(&gelu_grad_scalar));
}

// ---------------------------------------------------------------------------
// Layer normalization over the feature (column) dimension, per row.

inline constexpr double kLayerNormEps = 1e-12;

struct LayerNormCache {
  Mat xhat;
  Vec rstd;
};

// y = xhat * gamma + beta, cache filled for backward.
inline Mat layer_norm_forward(const Mat& x, const Vec& gamma, const Vec& beta,
                              LayerNormCache* cache) {
  const auto rows = x.rows();
  const auto cols = x.cols();
  Mat xhat(rows, cols);
  Vec rstd(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double mean = x.row(r).mean();
    const double var = (x.row(r).array() - mean).square().mean();
    const double rs = 1.0 / std::sqrt(var + kLayerNormEps);
    xhat.row(r) = (x.row(r).array() - mean) * rs;
    rstd(r) = rs;
  }
  Mat y = (xhat.array().rowwise() * gamma.transpose().array()).rowwise() +
          beta.transpose().array();
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->rstd = std::move(rstd);
  }
  return y;
}

// Accumulates dgamma/dbeta, returns dx.
inline Mat layer_norm_backward(const Mat& dy, const LayerNormCache& cache, const Vec& gamma,
                               Vec& dgamma, Vec& dbeta) {
  const auto rows = dy.rows();
  const auto cols = dy.cols();
  dgamma.noalias() += (dy.array() * cache.xhat.array()).colwise().sum().matrix().transpose();
  dbeta.noalias() += dy.colwise().sum().transpose();
  Mat dx(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Eigen::Array<double, 1, Eigen::Dynamic> dxhat =
        dy.row(r).array() * gamma.transpose().array();
    const Eigen::Array<double, 1, Eigen::Dynamic> xhat_r = cache.xhat.row(r).array();
    const double m1 = dxhat.mean();
    const double m2 = (dxhat * xhat_r).mean();
    dx.row(r) = (cache.rstd(r) * (dxhat - m1 - xhat_r * m2)).matrix();
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Row softmax with masked key columns. Masked columns get exactly zero
// probability; each row sums to 1 over the allowed columns.

inline Mat masked_row_softmax(const Mat& scores, const std::vector<uint8_t>& key_allowed) {
  Mat a(scores.rows(), scores.cols());
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < scores.cols(); ++c) {
      if (key_allowed[static_cast<size_t>(c)] && scores(r, c) > mx) mx = scores(r, c);
    }
    double sum = 0.0;
    for (Eigen::Index c = 0; c < scores.cols(); ++c) {
      const double e = key_allowed[static_cast<size_t>(c)] ? std::exp(scores(r, c) - mx) : 0.0;
      a(r, c) = e;
      sum += e;
    }
    a.row(r) /= sum;
  }
  return a;
}

// dS given A = softmax(S) rowwise: a .* (da - (da . a)).
inline Mat row_softmax_backward(const Mat& a, const Mat& da) {
  Mat ds(a.rows(), a.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    const double dot = a.row(r).dot(da.row(r));
    ds.row(r) = a.row(r).cwiseProduct(da.row(r).array().matrix() -
                                      Mat::Constant(1, a.cols(), dot));
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Adam optimizer over a ParamStore, with optional linear learning-rate decay.

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // When > 0, the learning rate decays linearly to zero over this many steps.
  int64_t linear_decay_steps = 0;
};

class Adam {
 public:
  Adam(const ParamStore& params, AdamConfig config) : config_(config) {
    m_.reserve(params.items().size());
    v_.reserve(params.items().size());
    for (const auto& p : params.items()) {
      m_.push_back(Mat::Zero(p->w.rows(), p->w.cols()));
      v_.push_back(Mat::Zero(p->w.rows(), p->w.cols()));
    }
  }

  double current_lr() const {
    if (config_.linear_decay_steps <= 0) return config_.lr;
    const double frac =
        1.0 - static_cast<double>(step_) / static_cast<double>(config_.linear_decay_steps);
    return config_.lr * std::max(0.0, frac);
  }

  void step(ParamStore& params) {
    const double lr = current_lr();
    ++step_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
    const auto& items = params.items();
    if (items.size() != m_.size()) throw Error(Err::ConfigInvalid, "optimizer/params mismatch");
    for (size_t i = 0; i < items.size(); ++i) {
      Param& p = *items[i];
      m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * p.g;
      v_[i] = config_.beta2 * v_[i].array().matrix() +
              (1.0 - config_.beta2) * p.g.cwiseProduct(p.g);
      const Mat mhat = m_[i] / bc1;
      const Mat vhat = v_[i] / bc2;
      p.w.array() -= lr * mhat.array() / (vhat.array().sqrt() + config_.eps);
    }
  }

  int64_t steps_taken() const { return step_; }

 private:
  AdamConfig config_;
  std::vector<Mat> m_, v_;
  int64_t step_ = 0;
};

}  // namespace hgrade
