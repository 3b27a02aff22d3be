#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "srcount/array_model.hpp"

namespace srcount {

struct Smoothing {
  std::size_t subarray_size = 0;  // L0
  std::size_t subarray_count = 0;  // K = L - L0 + 1
};

// Spatial covariance, either the plain sample estimate or the FBSS result.
struct CovMatrix {
  CMatrix data;
  std::size_t snapshots_used = 0;
  std::optional<Smoothing> smoothing;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(data.rows()); }
};

enum class FeatureNormalization { none, unit_l2 };

struct FeatureVector {
  std::vector<double> values;
  FeatureNormalization normalization = FeatureNormalization::unit_l2;
};

constexpr std::size_t feature_width(std::size_t n) noexcept { return n * (n + 1); }

// R = X X^H / N, symmetrised exactly.
CovMatrix autocorrelation(const Frame& frame);
CovMatrix autocorrelation(const CMatrix& x);

// Forward-backward spatial smoothing over K = L - L0 + 1 overlapping
// subarrays of size L0.
CovMatrix fbss(const CovMatrix& cov, std::size_t subarray_size);

// Upper triangle (diagonal included, row-major) as interleaved (Re, Im)
// pairs, scaled to unit Euclidean norm.
FeatureVector extract_features(const CovMatrix& cov,
                               FeatureNormalization normalization = FeatureNormalization::unit_l2);

// Inverse of the feature layout: rebuilds the Hermitian matrix (up to the
// normalisation scale) from an n(n+1) feature row.
template <class Scalar>
CMatrix covariance_from_features(std::span<const Scalar> features, std::size_t n);

// All eigenvalues of a Hermitian matrix, descending (cyclic Jacobi).
std::vector<double> eigvalsh(const CMatrix& r);
std::vector<double> eigvalsh(const CovMatrix& cov);

// Number of eigenvalues above rel_threshold * lambda_max.
std::size_t numerical_rank(std::span<const double> eigs_desc, double rel_threshold = 1e-8);

}  // namespace srcount
