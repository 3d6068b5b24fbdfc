#pragma once

#include "penreg/error.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace penreg {

/// Design matrix and outcome. After `standardize` the column moments used are
/// kept so the same affine map can be applied to held-out rows.
struct Dataset {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  bool standardized = false;
  Eigen::VectorXd column_means;
  Eigen::VectorXd column_sds;

  Eigen::Index n() const { return x.rows(); }
  Eigen::Index p() const { return x.cols(); }
};

inline void validate(const Dataset& d) {
  require(d.x.rows() == d.y.size(), ErrorKind::DimensionMismatch,
          "x has " + std::to_string(d.x.rows()) + " rows but y has " + std::to_string(d.y.size()));
  require(d.n() >= 2, ErrorKind::InvalidArgument, "need at least two observations");
  require(d.p() >= 1, ErrorKind::InvalidArgument, "need at least one predictor");
  require(d.x.allFinite() && d.y.allFinite(), ErrorKind::NonFinite, "dataset contains missing or non-finite values");
}

/// Centre and scale every column by its own sample mean and sd (n - 1 divisor).
inline Dataset standardize(const Dataset& data) {
  validate(data);
  const auto n = static_cast<double>(data.n());
  Dataset out = data;
  out.column_means = data.x.colwise().mean().transpose();
  out.column_sds.resize(data.p());
  for (Eigen::Index j = 0; j < data.p(); ++j) {
    const double ss = (data.x.col(j).array() - out.column_means[j]).square().sum();
    const double sd = std::sqrt(ss / (n - 1.0));
    if (!(sd > 0.0)) fail(ErrorKind::ConstantColumn, "column " + std::to_string(j) + " has zero variance");
    out.column_sds[j] = sd;
    out.x.col(j) = (data.x.col(j).array() - out.column_means[j]) / sd;
  }
  out.standardized = true;
  return out;
}

/// Apply the training transform of `fitted` to new rows (no re-centring).
inline Eigen::MatrixXd apply_standardization(const Dataset& fitted, const Eigen::MatrixXd& x_new) {
  require(fitted.standardized, ErrorKind::InvalidArgument, "reference dataset is not standardized");
  require(x_new.cols() == fitted.p(), ErrorKind::DimensionMismatch, "column count differs from training data");
  Eigen::MatrixXd out = x_new;
  for (Eigen::Index j = 0; j < out.cols(); ++j)
    out.col(j) = (out.col(j).array() - fitted.column_means[j]) / fitted.column_sds[j];
  return out;
}

inline Dataset apply_standardization(const Dataset& fitted, const Dataset& other) {
  Dataset out = other;
  out.x = apply_standardization(fitted, other.x);
  out.standardized = true;
  out.column_means = fitted.column_means;
  out.column_sds = fitted.column_sds;
  return out;
}

}  // namespace penreg
