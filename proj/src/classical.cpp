#include "srcount/classical.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "srcount/errors.hpp"

namespace srcount {

namespace {

constexpr double kEigenFloor = 1e-300;

// Log-likelihood ratio term ln(g_k / a_k) for every k, where g_k and a_k are
// the geometric and arithmetic means of the n - k smallest eigenvalues.
std::vector<double> log_mean_ratio(std::span<const double> eigs) {
  const std::size_t n = eigs.size();
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double m = static_cast<double>(n - k);
    double log_sum = 0.0;
    double sum = 0.0;
    for (std::size_t i = k; i < n; ++i) {
      const double v = std::max(eigs[i], kEigenFloor);
      log_sum += std::log(v);
      sum += v;
    }
    out[k] = log_sum / m - std::log(sum / m);
  }
  return out;
}

void check_input(std::span<const double> eigs, std::size_t snapshots) {
  if (eigs.empty()) throw DomainError("criterion needs at least one eigenvalue");
  if (snapshots < 1) throw DomainError("criterion needs at least one snapshot");
  for (std::size_t i = 0; i + 1 < eigs.size(); ++i) {
    if (eigs[i] < eigs[i + 1]) throw DomainError("eigenvalues must be sorted descending");
  }
  for (double v : eigs) {
    if (!std::isfinite(v)) throw DomainError("eigenvalues must be finite");
  }
}

std::size_t first_argmin(const std::vector<double>& v) {
  // std::min_element returns the first minimum: ties go to the smaller k.
  return static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

Criterion parse_criterion(std::string_view name) {
  if (name == "mdl") return Criterion::mdl;
  if (name == "aic") return Criterion::aic;
  throw ConfigError("unknown criterion '" + std::string(name) + "'");
}

std::string_view to_string(Criterion c) { return c == Criterion::mdl ? "mdl" : "aic"; }

CriterionCurve aic(std::span<const double> eigs, std::size_t snapshots) {
  check_input(eigs, snapshots);
  const auto ratio = log_mean_ratio(eigs);
  const double n = static_cast<double>(eigs.size());
  const double big_n = static_cast<double>(snapshots);
  CriterionCurve c;
  c.values.resize(eigs.size());
  for (std::size_t k = 0; k < eigs.size(); ++k) {
    const double kk = static_cast<double>(k);
    c.values[k] = -2.0 * big_n * (n - kk) * ratio[k] + 2.0 * kk * (2.0 * n - kk);
  }
  c.argmin = first_argmin(c.values);
  return c;
}

CriterionCurve mdl(std::span<const double> eigs, std::size_t snapshots) {
  check_input(eigs, snapshots);
  const auto ratio = log_mean_ratio(eigs);
  const double n = static_cast<double>(eigs.size());
  const double big_n = static_cast<double>(snapshots);
  CriterionCurve c;
  c.values.resize(eigs.size());
  for (std::size_t k = 0; k < eigs.size(); ++k) {
    const double kk = static_cast<double>(k);
    c.values[k] = -big_n * (n - kk) * ratio[k] + 0.5 * kk * (2.0 * n - kk) * std::log(big_n);
  }
  c.argmin = first_argmin(c.values);
  return c;
}

CriterionCurve criterion_curve(Criterion c, std::span<const double> eigs, std::size_t snapshots) {
  return c == Criterion::mdl ? mdl(eigs, snapshots) : aic(eigs, snapshots);
}

std::size_t estimate_from_covariance(const CovMatrix& cov, Criterion c) {
  const auto eigs = eigvalsh(cov);
  return criterion_curve(c, eigs, cov.snapshots_used).argmin;
}

std::size_t detect_classical(const Frame& frame, Criterion c, std::optional<std::size_t> fbss_subarray) {
  CovMatrix cov = autocorrelation(frame);
  if (fbss_subarray) cov = fbss(cov, *fbss_subarray);
  return estimate_from_covariance(cov, c);
}

}  // namespace srcount
