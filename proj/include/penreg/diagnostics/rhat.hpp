#pragma once

#include "penreg/error.hpp"
#include "penreg/math.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace penreg {

/// Draws of one scalar parameter: column c holds chain c, rows are iterations.
using ChainSet = Eigen::MatrixXd;

namespace detail {

inline void require_chain_shape(const ChainSet& chains, Eigen::Index min_chains, Eigen::Index min_length) {
  require(chains.cols() >= min_chains, ErrorKind::InvalidArgument,
          "need at least " + std::to_string(min_chains) + " chains");
  require(chains.rows() >= min_length, ErrorKind::InvalidArgument,
          "chains need at least " + std::to_string(min_length) + " iterations");
  require(chains.allFinite(), ErrorKind::NonFinite, "chains contain non-finite values");
}

}  // namespace detail

/// Potential scale reduction from within- and between-chain variances.
inline double rhat_basic(const ChainSet& chains) {
  detail::require_chain_shape(chains, 2, 2);
  const double n = static_cast<double>(chains.rows());
  const Eigen::RowVectorXd means = chains.colwise().mean();
  double w = 0.0;
  for (Eigen::Index c = 0; c < chains.cols(); ++c) w += math::variance(chains.col(c));
  w /= static_cast<double>(chains.cols());
  require(w > 0.0, ErrorKind::ZeroVariance, "chains have zero within-chain variance");
  const double b = n * math::variance(means.transpose());
  return std::sqrt(((n - 1.0) / n * w + b / n) / w);
}

/// Halves of each chain as separate chains; the middle draw is dropped for odd lengths.
inline ChainSet split_chains(const ChainSet& chains) {
  const Eigen::Index half = chains.rows() / 2;
  const Eigen::Index offset = chains.rows() - half;
  ChainSet out(half, 2 * chains.cols());
  for (Eigen::Index c = 0; c < chains.cols(); ++c) {
    out.col(2 * c) = chains.col(c).head(half);
    out.col(2 * c + 1) = chains.col(c).segment(offset, half);
  }
  return out;
}

/// Pooled average ranks mapped through the normal quantile function at
/// (r - 3/8) / (S + 1/4).
inline ChainSet rank_normalize(const ChainSet& chains) {
  const Eigen::Index s = chains.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(s));
  std::iota(order.begin(), order.end(), 0);
  const double* v = chains.data();
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return v[a] < v[b]; });
  ChainSet out(chains.rows(), chains.cols());
  double* o = out.data();
  const double denom = static_cast<double>(s) + 0.25;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    const double z = math::normal_quantile((avg_rank - 0.375) / denom);
    for (std::size_t k = i; k <= j; ++k) o[order[k]] = z;
    i = j + 1;
  }
  return out;
}

/// Split, rank-normalized R-hat.
inline double split_rhat_rank_normalized(const ChainSet& chains) {
  detail::require_chain_shape(chains, 1, 4);
  return rhat_basic(rank_normalize(split_chains(chains)));
}

}  // namespace penreg
