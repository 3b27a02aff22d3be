#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "srcount/covariance.hpp"

namespace srcount {

// Criterion value per hypothesis k = number of sources, k in [0, n-1].
struct CriterionCurve {
  std::vector<double> values;
  std::size_t argmin = 0;
};

enum class Criterion { mdl, aic };

Criterion parse_criterion(std::string_view name);
std::string_view to_string(Criterion c);

// Wax-Kailath eigenvalue criteria. eigs must be sorted descending.
CriterionCurve aic(std::span<const double> eigs, std::size_t snapshots);
CriterionCurve mdl(std::span<const double> eigs, std::size_t snapshots);
CriterionCurve criterion_curve(Criterion c, std::span<const double> eigs, std::size_t snapshots);

std::size_t estimate_from_covariance(const CovMatrix& cov, Criterion c);

// autocorrelation -> optional fbss -> eigvalsh -> criterion argmin.
std::size_t detect_classical(const Frame& frame, Criterion c,
                             std::optional<std::size_t> fbss_subarray = std::nullopt);

}  // namespace srcount
