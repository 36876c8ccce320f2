#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "ise/error.hpp"

namespace ise {

using FeatureVector = std::vector<double>;
using ConstVec = std::span<const double>;
using MutVec = std::span<double>;

/// Four interleaved partial sums; the summation order is fixed, so results are reproducible.
inline double dot(ConstVec u, ConstVec v) {
  double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
  const std::size_t n = u.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    a0 += u[i] * v[i];
    a1 += u[i + 1] * v[i + 1];
    a2 += u[i + 2] * v[i + 2];
    a3 += u[i + 3] * v[i + 3];
  }
  for (; i < n; ++i) a0 += u[i] * v[i];
  return (a0 + a1) + (a2 + a3);
}

inline double norm(ConstVec u) { return std::sqrt(dot(u, u)); }

/// Cosine similarity u.v / (|u||v|). Throws on a zero-norm argument.
inline double cosine_sim(ConstVec u, ConstVec v) {
  if (u.size() != v.size()) throw Error(ErrorCode::degenerate_input, "cosine_sim: dimension mismatch");
  const double nu = norm(u);
  const double nv = norm(v);
  if (!(nu > 0.0) || !(nv > 0.0)) throw Error(ErrorCode::degenerate_input, "cosine_sim: zero-norm input");
  const double s = dot(u, v) / (nu * nv);
  return s > 1.0 ? 1.0 : (s < -1.0 ? -1.0 : s);
}

inline FeatureVector l2_normalize(ConstVec u) {
  const double n = norm(u);
  if (!(n > 0.0) || !std::isfinite(n)) throw Error(ErrorCode::degenerate_input, "l2_normalize: zero-norm input");
  FeatureVector out(u.begin(), u.end());
  for (double& x : out) x /= n;
  return out;
}

inline void axpy(double alpha, ConstVec x, MutVec y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

/// Gradient of cosine_sim(a, b) with respect to a, accumulated as out += scale * d sim / d a.
/// Uses d sim/d a = (b/|b| - sim * a/|a|) / |a|.
inline void accumulate_cosine_grad(ConstVec a, ConstVec b, double scale, MutVec out) {
  const double na = norm(a);
  const double nb = norm(b);
  const double s = dot(a, b) / (na * nb);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += scale * (b[i] / nb - s * a[i] / na) / na;
}

/// Row-major N x d table of learnable embeddings. Rows are stored unnormalized.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t rows, std::size_t dim) : rows_(rows), dim_(dim), data_(rows * dim, 0.0) {
    if (dim == 0) throw Error(ErrorCode::config, "EmbeddingTable: dimension must be positive");
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return rows_ == 0; }

  ConstVec row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  MutVec row(std::size_t i) { return {data_.data() + i * dim_, dim_}; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  void scale(double alpha) {
    for (double& x : data_) x *= alpha;
  }

  bool all_finite() const {
    for (double x : data_)
      if (!std::isfinite(x)) return false;
    return true;
  }

  friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

/// Unit-norm copy of every row.
inline EmbeddingTable normalized_rows(const EmbeddingTable& table) {
  EmbeddingTable out(table.rows(), table.dim());
  for (std::size_t i = 0; i < table.rows(); ++i) {
    const FeatureVector u = l2_normalize(table.row(i));
    std::copy(u.begin(), u.end(), out.row(i).begin());
  }
  return out;
}

}  // namespace ise
