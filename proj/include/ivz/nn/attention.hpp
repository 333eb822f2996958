#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ivz/nn/layers.hpp"

namespace ivz::nn {

/// Scaled dot-product attention with `heads` heads. Queries and key/value rows may have
/// different widths; both are projected to the attention width `embed`.
template <class S>
struct MultiHeadAttention {
  std::size_t query_dim = 0;
  std::size_t kv_dim = 0;
  std::size_t embed = 0;
  std::size_t heads = 1;
  Linear<S> q_proj, k_proj, v_proj, out_proj;

  struct Cache {
    Tensor<S> queries, keys_values;
    Tensor<S> q, k, v;                // projected [Q,e], [N,e], [N,e]
    std::vector<Tensor<S>> weights;   // per head softmax [Q,N]
    Tensor<S> concat;                 // [Q,e] before the output projection
  };

  MultiHeadAttention() = default;
  MultiHeadAttention(std::size_t qdim, std::size_t kvdim, std::size_t embed_dim, std::size_t num_heads)
      : query_dim(qdim), kv_dim(kvdim), embed(embed_dim), heads(num_heads) {
    require(num_heads >= 1 && embed_dim % num_heads == 0, ErrorCode::Config,
            "attention width " + std::to_string(embed_dim) + " is not divisible by " + std::to_string(num_heads) +
                " heads");
    q_proj = Linear<S>(qdim, embed_dim);
    k_proj = Linear<S>(kvdim, embed_dim);
    v_proj = Linear<S>(kvdim, embed_dim);
    out_proj = Linear<S>(embed_dim, embed_dim);
  }

  void init(Init& init) {
    q_proj.init(init);
    k_proj.init(init);
    v_proj.init(init);
    out_proj.init(init);
  }

  void collect(ParamList<S>& list, const std::string& prefix) {
    q_proj.collect(list, prefix + ".q");
    k_proj.collect(list, prefix + ".k");
    v_proj.collect(list, prefix + ".v");
    out_proj.collect(list, prefix + ".out");
  }

  Tensor<S> forward(const Tensor<S>& queries, const Tensor<S>& keys_values, Cache* cache = nullptr) const {
    require(keys_values.rows() >= 1, ErrorCode::Dimension, "attention over an empty key set");
    const std::size_t nq = queries.rows(), nk = keys_values.rows(), dh = embed / heads;
    const S scale = S(1) / std::sqrt(static_cast<S>(dh));
    Tensor<S> q = q_proj.forward(queries), k = k_proj.forward(keys_values), v = v_proj.forward(keys_values);
    Tensor<S> concat({nq, embed});
    std::vector<Tensor<S>> weights;
    for (std::size_t h = 0; h < heads; ++h) {
      Tensor<S> scores({nq, nk});
      for (std::size_t i = 0; i < nq; ++i)
        for (std::size_t j = 0; j < nk; ++j) {
          S acc = 0;
          for (std::size_t c = 0; c < dh; ++c) acc += q(i, h * dh + c) * k(j, h * dh + c);
          scores(i, j) = acc * scale;
        }
      Tensor<S> a = softmax(scores);
      for (std::size_t i = 0; i < nq; ++i)
        for (std::size_t j = 0; j < nk; ++j) {
          const S w = a(i, j);
          for (std::size_t c = 0; c < dh; ++c) concat(i, h * dh + c) += w * v(j, h * dh + c);
        }
      weights.push_back(std::move(a));
    }
    Tensor<S> out = out_proj.forward(concat);
    if (cache) {
      cache->queries = queries;
      cache->keys_values = keys_values;
      cache->q = std::move(q);
      cache->k = std::move(k);
      cache->v = std::move(v);
      cache->weights = std::move(weights);
      cache->concat = std::move(concat);
    }
    return out;
  }

  struct Grads {
    Tensor<S> queries;
    Tensor<S> keys_values;
  };

  Grads backward(const Cache& c, const Tensor<S>& dout) {
    const std::size_t nq = c.q.rows(), nk = c.k.rows(), dh = embed / heads;
    const S scale = S(1) / std::sqrt(static_cast<S>(dh));
    const Tensor<S> dconcat = out_proj.backward(c.concat, dout);
    Tensor<S> dq({nq, embed}), dk({nk, embed}), dv({nk, embed});
    for (std::size_t h = 0; h < heads; ++h) {
      const Tensor<S>& a = c.weights[h];
      Tensor<S> da({nq, nk});
      for (std::size_t i = 0; i < nq; ++i)
        for (std::size_t j = 0; j < nk; ++j) {
          S acc = 0;
          for (std::size_t d = 0; d < dh; ++d) {
            acc += dconcat(i, h * dh + d) * c.v(j, h * dh + d);
            dv(j, h * dh + d) += a(i, j) * dconcat(i, h * dh + d);
          }
          da(i, j) = acc;
        }
      const Tensor<S> ds = softmax_backward(a, da);
      for (std::size_t i = 0; i < nq; ++i)
        for (std::size_t j = 0; j < nk; ++j) {
          const S g = ds(i, j) * scale;
          for (std::size_t d = 0; d < dh; ++d) {
            dq(i, h * dh + d) += g * c.k(j, h * dh + d);
            dk(j, h * dh + d) += g * c.q(i, h * dh + d);
          }
        }
    }
    Grads g;
    g.queries = q_proj.backward(c.queries, dq);
    g.keys_values = k_proj.backward(c.keys_values, dk);
    g.keys_values += v_proj.backward(c.keys_values, dv);
    return g;
  }
};

}  // namespace ivz::nn
