#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <Eigen/StdVector>
#include <vector>

namespace qasmtx::nn {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using RowVec = Eigen::Matrix<S, 1, Eigen::Dynamic>;
template <typename S>
using ColVec = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <typename S>
using MapMat = Eigen::Map<Mat<S>>;
template <typename S>
using MapRow = Eigen::Map<RowVec<S>>;
/// Flat parameter or gradient storage. Aligned to the widest SIMD packet so
/// vectorized reductions over the mapped tensors split the same way on every run.
template <typename S>
using Buffer = std::vector<S, Eigen::aligned_allocator<S>>;

inline constexpr double kLayerNormEps = 1e-5;

template <typename S>
struct LinearW {
  MapMat<S> w;
  MapRow<S> b;
};

template <typename S>
struct LayerNormW {
  MapRow<S> g;
  MapRow<S> b;
};

template <typename S>
struct AttentionW {
  LinearW<S> q, k, v, o;
};

template <typename S>
struct FeedForwardW {
  LinearW<S> in, out;
};

template <typename S>
Mat<S> linear(const Mat<S>& x, const LinearW<S>& l) {
  Mat<S> y = x * l.w;
  y.rowwise() += l.b;
  return y;
}

/// Accumulates parameter gradients and returns dx.
template <typename S>
Mat<S> linear_backward(const Mat<S>& x, const Mat<S>& dy, const LinearW<S>& l, LinearW<S>& g) {
  g.w.noalias() += x.transpose() * dy;
  g.b += dy.colwise().sum();
  return dy * l.w.transpose();
}

template <typename S>
struct LayerNormCache {
  Mat<S> xhat;
  ColVec<S> rstd;
};

template <typename S>
Mat<S> layer_norm(const Mat<S>& x, const LayerNormW<S>& w, LayerNormCache<S>* cache = nullptr) {
  const ColVec<S> mu = x.rowwise().mean();
  Mat<S> xc = x.colwise() - mu;
  const ColVec<S> var = xc.rowwise().squaredNorm() / static_cast<S>(x.cols());
  const ColVec<S> rstd = (var.array() + static_cast<S>(kLayerNormEps)).rsqrt();
  Mat<S> xhat = xc.array().colwise() * rstd.array();
  Mat<S> y = xhat.array().rowwise() * w.g.array();
  y.rowwise() += w.b;
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->rstd = rstd;
  }
  return y;
}

template <typename S>
Mat<S> layer_norm_backward(const Mat<S>& dy, const LayerNormW<S>& w, LayerNormW<S>& g,
                           const LayerNormCache<S>& c) {
  g.g += (dy.array() * c.xhat.array()).colwise().sum().matrix();
  g.b += dy.colwise().sum();
  const Mat<S> dxhat = dy.array().rowwise() * w.g.array();
  const ColVec<S> m1 = dxhat.rowwise().mean();
  const ColVec<S> m2 = (dxhat.array() * c.xhat.array()).rowwise().mean();
  Mat<S> dx = dxhat.colwise() - m1;
  dx.array() -= c.xhat.array().colwise() * m2.array();
  dx.array().colwise() *= c.rstd.array();
  return dx;
}

template <typename S>
struct AttentionCache {
  Mat<S> xq, xkv, q, k, v, o;
  std::vector<Mat<S>> probs;
};

/// Row-wise softmax over the unmasked entries; rows with every key masked
/// become zero.
template <typename S>
void masked_softmax(Mat<S>& s, const std::vector<char>* key_valid, bool causal) {
  const S neg = -std::numeric_limits<S>::infinity();
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    for (Eigen::Index j = 0; j < s.cols(); ++j)
      if ((key_valid && !(*key_valid)[j]) || (causal && j > i)) s(i, j) = neg;
    const S mx = s.row(i).maxCoeff();
    if (mx == neg) {
      s.row(i).setZero();
      continue;
    }
    s.row(i) = (s.row(i).array() - mx).exp();
    s.row(i) /= s.row(i).sum();
  }
}

/// Multi-head scaled dot-product attention with queries from `xq` and keys
/// and values from `xkv`. `key_valid` masks key positions; `causal` hides
/// keys after the query position.
template <typename S>
Mat<S> attention(const Mat<S>& xq, const Mat<S>& xkv, const AttentionW<S>& w, int heads,
                 const std::vector<char>* key_valid, bool causal, AttentionCache<S>* cache = nullptr) {
  const Eigen::Index d = w.q.w.cols(), dk = d / heads;
  Mat<S> q = linear(xq, w.q), k = linear(xkv, w.k), v = linear(xkv, w.v);
  Mat<S> o(xq.rows(), d);
  const S scale = S(1) / std::sqrt(static_cast<S>(dk));
  if (cache) cache->probs.resize(heads);
  for (int h = 0; h < heads; ++h) {
    Mat<S> s = (q.middleCols(h * dk, dk) * k.middleCols(h * dk, dk).transpose()) * scale;
    masked_softmax(s, key_valid, causal);
    o.middleCols(h * dk, dk).noalias() = s * v.middleCols(h * dk, dk);
    if (cache) cache->probs[h] = std::move(s);
  }
  Mat<S> out = linear(o, w.o);
  if (cache) {
    cache->xq = xq;
    cache->xkv = xkv;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->o = std::move(o);
  }
  return out;
}

template <typename S>
void attention_backward(const Mat<S>& dout, const AttentionW<S>& w, AttentionW<S>& g, int heads,
                        const AttentionCache<S>& c, Mat<S>& dxq, Mat<S>& dxkv) {
  const Eigen::Index d = w.q.w.cols(), dk = d / heads;
  const S scale = S(1) / std::sqrt(static_cast<S>(dk));
  const Mat<S> d_o = linear_backward(c.o, dout, w.o, g.o);
  Mat<S> dq(c.q.rows(), d), dk_(c.k.rows(), d), dv(c.v.rows(), d);
  for (int h = 0; h < heads; ++h) {
    const Mat<S>& p = c.probs[h];
    const auto doh = d_o.middleCols(h * dk, dk);
    dv.middleCols(h * dk, dk).noalias() = p.transpose() * doh;
    Mat<S> dp = doh * c.v.middleCols(h * dk, dk).transpose();
    const ColVec<S> rs = (dp.array() * p.array()).rowwise().sum();
    Mat<S> ds = (dp.colwise() - rs).cwiseProduct(p) * scale;
    dq.middleCols(h * dk, dk).noalias() = ds * c.k.middleCols(h * dk, dk);
    dk_.middleCols(h * dk, dk).noalias() = ds.transpose() * c.q.middleCols(h * dk, dk);
  }
  dxq = linear_backward(c.xq, dq, w.q, g.q);
  dxkv = linear_backward(c.xkv, dk_, w.k, g.k);
  dxkv += linear_backward(c.xkv, dv, w.v, g.v);
}

template <typename S>
struct FeedForwardCache {
  Mat<S> x, pre;
};

template <typename S>
Mat<S> feed_forward(const Mat<S>& x, const FeedForwardW<S>& w, FeedForwardCache<S>* cache = nullptr) {
  Mat<S> pre = linear(x, w.in);
  const Mat<S> r = pre.cwiseMax(S(0));
  Mat<S> y = linear(r, w.out);
  if (cache) {
    cache->x = x;
    cache->pre = std::move(pre);
  }
  return y;
}

template <typename S>
Mat<S> feed_forward_backward(const Mat<S>& dy, const FeedForwardW<S>& w, FeedForwardW<S>& g,
                             const FeedForwardCache<S>& c) {
  const Mat<S> r = c.pre.cwiseMax(S(0));
  Mat<S> dr = linear_backward(r, dy, w.out, g.out);
  dr.array() *= (c.pre.array() > S(0)).template cast<S>();
  return linear_backward(c.x, dr, w.in, g.in);
}

/// Sinusoidal table: PE(p, 2i) = sin(p / 10000^{2i/d}), PE(p, 2i+1) = cos(·).
template <typename S>
Mat<S> positional_encoding(int length, int d) {
  Mat<S> pe(length, d);
  for (int p = 0; p < length; ++p)
    for (int i = 0; i < d; i += 2) {
      const double rate = std::pow(10000.0, -static_cast<double>(i) / d);
      pe(p, i) = static_cast<S>(std::sin(p * rate));
      if (i + 1 < d) pe(p, i + 1) = static_cast<S>(std::cos(p * rate));
    }
  return pe;
}

}  // namespace qasmtx::nn
