#include "srcount/covariance.hpp"

#include <algorithm>
#include <cmath>

#include "srcount/errors.hpp"

namespace srcount {

CovMatrix autocorrelation(const CMatrix& x) {
  if (x.rows() == 0 || x.cols() == 0) throw DomainError("autocorrelation of an empty frame");
  CovMatrix cov;
  CMatrix r = (x * x.adjoint()) / static_cast<double>(x.cols());
  cov.data = 0.5 * (r + r.adjoint());
  cov.snapshots_used = static_cast<std::size_t>(x.cols());
  return cov;
}

CovMatrix autocorrelation(const Frame& frame) { return autocorrelation(frame.data); }

CovMatrix fbss(const CovMatrix& cov, std::size_t subarray_size) {
  if (cov.smoothing) throw DomainError("covariance is already smoothed");
  const std::size_t l = cov.dim();
  if (subarray_size < 2 || subarray_size > l) throw DomainError("subarray size must lie in [2, L]");
  const std::size_t k_count = l - subarray_size + 1;
  const auto l0 = static_cast<Eigen::Index>(subarray_size);

  CMatrix acc = CMatrix::Zero(l0, l0);
  for (std::size_t k = 0; k < k_count; ++k) {
    const auto off = static_cast<Eigen::Index>(k);
    const CMatrix forward = cov.data.block(off, off, l0, l0);
    acc += forward;
    // J conj(F) J reverses both axes of the conjugate.
    acc += forward.conjugate().reverse();
  }
  CovMatrix out;
  out.data = acc / (2.0 * static_cast<double>(k_count));
  out.data = 0.5 * (out.data + out.data.adjoint()).eval();
  out.snapshots_used = cov.snapshots_used;
  out.smoothing = Smoothing{subarray_size, k_count};
  return out;
}

FeatureVector extract_features(const CovMatrix& cov, FeatureNormalization normalization) {
  const auto n = static_cast<Eigen::Index>(cov.dim());
  FeatureVector f;
  f.normalization = normalization;
  f.values.reserve(feature_width(cov.dim()));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      f.values.push_back(cov.data(i, j).real());
      f.values.push_back(cov.data(i, j).imag());
    }
  }
  if (normalization == FeatureNormalization::unit_l2) {
    double norm2 = 0.0;
    for (double v : f.values) norm2 += v * v;
    if (norm2 > 0.0) {
      const double inv = 1.0 / std::sqrt(norm2);
      for (double& v : f.values) v *= inv;
    }
  }
  return f;
}

template <class Scalar>
CMatrix covariance_from_features(std::span<const Scalar> features, std::size_t n) {
  if (features.size() != feature_width(n)) throw DataError("feature row width does not match n(n+1)");
  const auto dim = static_cast<Eigen::Index>(n);
  CMatrix r(dim, dim);
  std::size_t pos = 0;
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = i; j < dim; ++j) {
      const cplx v(static_cast<double>(features[pos]), static_cast<double>(features[pos + 1]));
      pos += 2;
      if (i == j) {
        r(i, i) = cplx(v.real(), 0.0);
      } else {
        r(i, j) = v;
        r(j, i) = std::conj(v);
      }
    }
  }
  return r;
}

template CMatrix covariance_from_features<float>(std::span<const float>, std::size_t);
template CMatrix covariance_from_features<double>(std::span<const double>, std::size_t);

std::vector<double> eigvalsh(const CMatrix& r) {
  if (r.rows() != r.cols()) throw DomainError("eigvalsh needs a square matrix");
  const Eigen::Index n = r.rows();
  const double scale = std::max(1.0, r.cwiseAbs().maxCoeff());
  if ((r - r.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw DomainError("eigvalsh input is not Hermitian");
  }

  CMatrix a = 0.5 * (r + r.adjoint());
  const double trace = a.diagonal().real().sum();
  const double tol = 1e-12 * std::abs(trace);

  auto off_norm = [&] {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (i != j) s += std::norm(a(i, j));
    return std::sqrt(s);
  };

  for (int sweep = 0; sweep < 100 && off_norm() > tol; ++sweep) {
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const cplx b = a(p, q);
        const double mag = std::abs(b);
        if (mag == 0.0) continue;
        // Phase-rotate the pair onto a real symmetric 2x2, then apply the
        // classic Jacobi rotation. U = diag(1, e^{-i alpha}) * [[c, s], [-s, c]].
        const cplx ph = b / mag;
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        const double theta = (aqq - app) / (2.0 * mag);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const cplx u00(c, 0.0);
        const cplx u01(s, 0.0);
        const cplx u10 = -s * std::conj(ph);
        const cplx u11 = c * std::conj(ph);
        for (Eigen::Index k = 0; k < n; ++k) {
          const cplx akp = a(k, p);
          const cplx akq = a(k, q);
          a(k, p) = akp * u00 + akq * u10;
          a(k, q) = akp * u01 + akq * u11;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const cplx apk = a(p, k);
          const cplx aqk = a(q, k);
          a(p, k) = std::conj(u00) * apk + std::conj(u10) * aqk;
          a(q, k) = std::conj(u01) * apk + std::conj(u11) * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = cplx(a(p, p).real(), 0.0);
        a(q, q) = cplx(a(q, q).real(), 0.0);
      }
    }
  }

  std::vector<double> eigs(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) eigs[static_cast<std::size_t>(i)] = a(i, i).real();
  std::sort(eigs.begin(), eigs.end(), std::greater<>());
  const double clamp = -1e-10 * std::abs(trace);
  for (double& v : eigs) {
    if (v < 0.0 && v >= clamp) v = 0.0;
  }
  return eigs;
}

std::vector<double> eigvalsh(const CovMatrix& cov) { return eigvalsh(cov.data); }

std::size_t numerical_rank(std::span<const double> eigs_desc, double rel_threshold) {
  if (eigs_desc.empty() || eigs_desc.front() <= 0.0) return 0;
  const double cut = rel_threshold * eigs_desc.front();
  return static_cast<std::size_t>(std::count_if(eigs_desc.begin(), eigs_desc.end(), [&](double v) { return v > cut; }));
}

}  // namespace srcount
