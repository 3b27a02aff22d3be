#include "srcount/array_model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "srcount/errors.hpp"

namespace srcount {

ArrayGeometry::ArrayGeometry(std::size_t num_elements, double spacing) {
  if (num_elements < 2) throw DomainError("array needs at least 2 elements");
  if (!(spacing > 0.0)) throw DomainError("element spacing must be positive");
  offsets_.resize(num_elements);
  for (std::size_t i = 0; i < num_elements; ++i) offsets_[i] = spacing * static_cast<double>(i);
}

ArrayGeometry ArrayGeometry::from_offsets(std::vector<double> offsets) {
  if (offsets.size() < 2) throw DomainError("array needs at least 2 elements");
  if (offsets.front() != 0.0) throw DomainError("first element offset must be 0");
  for (std::size_t i = 1; i < offsets.size(); ++i) {
    if (!(offsets[i] > offsets[i - 1])) throw DomainError("element offsets must be strictly increasing");
  }
  return ArrayGeometry(Unchecked{}, std::move(offsets));
}

CVector steering_vector(const ArrayGeometry& geometry, double theta_deg) {
  if (!(theta_deg >= -90.0 && theta_deg <= 90.0)) {
    throw DomainError("steering angle must lie in [-90, 90] degrees");
  }
  const double s = std::sin(theta_deg * std::numbers::pi / 180.0);
  const auto offsets = geometry.offsets();
  CVector a(static_cast<Eigen::Index>(offsets.size()));
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    a(static_cast<Eigen::Index>(i)) = std::polar(1.0, 2.0 * std::numbers::pi * offsets[i] * s);
  }
  return a;
}

CMatrix manifold(const ArrayGeometry& geometry, std::span<const double> angles_deg) {
  CMatrix a(static_cast<Eigen::Index>(geometry.size()), static_cast<Eigen::Index>(angles_deg.size()));
  for (std::size_t m = 0; m < angles_deg.size(); ++m) {
    a.col(static_cast<Eigen::Index>(m)) = steering_vector(geometry, angles_deg[m]);
  }
  return a;
}

CMatrix gen_qpsk(std::size_t num_sources, std::size_t num_snapshots, Rng& rng) {
  const double amp = 1.0 / std::numbers::sqrt2;
  CMatrix s(static_cast<Eigen::Index>(num_sources), static_cast<Eigen::Index>(num_snapshots));
  for (Eigen::Index m = 0; m < s.rows(); ++m) {
    // 32 symbols per 64-bit draw.
    std::uint64_t bits = 0;
    int left = 0;
    for (Eigen::Index t = 0; t < s.cols(); ++t) {
      if (left == 0) {
        bits = rng();
        left = 32;
      }
      const double re = (bits & 1U) ? -amp : amp;
      const double im = (bits & 2U) ? -amp : amp;
      bits >>= 2;
      --left;
      s(m, t) = cplx(re, im);
    }
  }
  return s;
}

CVector make_coherent(const CVector& parent, double rho, double phi) {
  if (!(rho > 0.0)) throw DomainError("coherent fading factor rho must be positive");
  if (rho > 1.0) throw DomainError("coherent fading factor rho must not exceed 1");
  return std::polar(rho, phi) * parent;
}

void validate(const ArrayGeometry& geometry, const Scenario& scenario) {
  const std::size_t m = scenario.num_sources();
  if (scenario.coherent.size() > m) throw DomainError("more coherent replicas than sources");
  if (m + 1 > geometry.size()) {
    std::ostringstream msg;
    msg << m << " sources exceed the capacity L - 1 = " << geometry.size() - 1;
    throw CapacityError(msg.str());
  }
  if (scenario.snapshots < 1) throw DomainError("frame needs at least one snapshot");
  for (double a : scenario.angles_deg) {
    if (!(std::abs(a) <= kMaxSourceAngleDeg)) throw DomainError("source angle outside [-60, 60] degrees");
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      if (std::abs(scenario.angles_deg[i] - scenario.angles_deg[j]) < scenario.min_separation_deg) {
        throw DomainError("source angles closer than the minimum separation");
      }
    }
  }
  const std::size_t nc = scenario.num_noncoherent();
  for (const auto& c : scenario.coherent) {
    if (c.parent >= nc) throw DomainError("coherent replica parent must be an independent source");
    if (!(c.rho > 0.0 && c.rho <= 1.0)) throw DomainError("coherent fading factor rho must lie in (0, 1]");
  }
  if (!std::isfinite(scenario.sinr_db)) throw DomainError("SINR must be finite");
}

namespace {

// Maps independent symbol rows onto all source rows: S = G * S_independent.
CMatrix mixing_matrix(const Scenario& scenario) {
  const auto nc = static_cast<Eigen::Index>(scenario.num_noncoherent());
  const auto m = static_cast<Eigen::Index>(scenario.num_sources());
  CMatrix g = CMatrix::Zero(m, nc);
  for (Eigen::Index i = 0; i < nc; ++i) g(i, i) = 1.0;
  for (std::size_t k = 0; k < scenario.coherent.size(); ++k) {
    const auto& c = scenario.coherent[k];
    g(nc + static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c.parent)) = std::polar(c.rho, c.phi);
  }
  return g;
}

}  // namespace

double noise_variance(const ArrayGeometry& geometry, const Scenario& scenario) {
  if (scenario.num_sources() == 0) return 1.0;
  const CMatrix ag = manifold(geometry, scenario.angles_deg) * mixing_matrix(scenario);
  const double signal_power = ag.squaredNorm() / static_cast<double>(geometry.size());
  return signal_power / std::pow(10.0, scenario.sinr_db / 10.0);
}

Frame sample_frame(const ArrayGeometry& geometry, const Scenario& scenario) {
  validate(geometry, scenario);
  Rng rng(splitmix64(scenario.seed));
  const auto l = static_cast<Eigen::Index>(geometry.size());
  const auto n = static_cast<Eigen::Index>(scenario.snapshots);

  Frame frame;
  frame.label_total = scenario.num_sources();
  frame.label_noncoherent = scenario.num_noncoherent();

  const CMatrix symbols = gen_qpsk(scenario.num_noncoherent(), scenario.snapshots, rng);
  if (scenario.num_sources() > 0) {
    // Replica rows of S follow make_coherent applied to their parent row.
    CMatrix s(static_cast<Eigen::Index>(scenario.num_sources()), n);
    s.topRows(symbols.rows()) = symbols;
    for (std::size_t k = 0; k < scenario.coherent.size(); ++k) {
      const auto& c = scenario.coherent[k];
      const CVector parent = symbols.row(static_cast<Eigen::Index>(c.parent)).transpose();
      s.row(symbols.rows() + static_cast<Eigen::Index>(k)) = make_coherent(parent, c.rho, c.phi).transpose();
    }
    frame.data = manifold(geometry, scenario.angles_deg) * s;
  } else {
    frame.data = CMatrix::Zero(l, n);
  }

  if (!scenario.noiseless) {
    const double sigma = std::sqrt(noise_variance(geometry, scenario) / 2.0);
    std::normal_distribution<double> gauss(0.0, sigma);
    for (Eigen::Index t = 0; t < n; ++t) {
      for (Eigen::Index i = 0; i < l; ++i) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        frame.data(i, t) += cplx(re, im);
      }
    }
  }
  return frame;
}

std::vector<double> draw_angles(std::size_t count, double min_separation_deg, Rng& rng) {
  if (count > 0 && min_separation_deg * static_cast<double>(count - 1) > 2.0 * kMaxSourceAngleDeg) {
    throw DomainError("minimum separation too large for the requested source count");
  }
  std::uniform_real_distribution<double> uni(-kMaxSourceAngleDeg, kMaxSourceAngleDeg);
  std::vector<double> angles;
  angles.reserve(count);
  while (angles.size() < count) {
    const double a = uni(rng);
    bool ok = true;
    for (double b : angles) ok = ok && std::abs(a - b) >= min_separation_deg;
    if (ok) angles.push_back(a);
  }
  return angles;
}

Scenario random_scenario(std::size_t num_noncoherent, std::size_t num_coherent, std::size_t snapshots,
                         double sinr_db, double min_separation_deg, Rng& rng) {
  if (num_coherent > 0 && num_noncoherent == 0) {
    throw DomainError("coherent replicas need at least one independent parent");
  }
  Scenario s;
  s.snapshots = snapshots;
  s.sinr_db = sinr_db;
  s.min_separation_deg = min_separation_deg;
  s.angles_deg = draw_angles(num_noncoherent + num_coherent, min_separation_deg, rng);
  std::uniform_int_distribution<std::size_t> parent(0, num_noncoherent == 0 ? 0 : num_noncoherent - 1);
  std::uniform_real_distribution<double> rho(0.5, 1.0);
  std::uniform_real_distribution<double> phi(0.0, 2.0 * std::numbers::pi);
  for (std::size_t k = 0; k < num_coherent; ++k) {
    CoherentSpec c;
    c.parent = parent(rng);
    c.rho = rho(rng);
    c.phi = phi(rng);
    s.coherent.push_back(c);
  }
  s.seed = rng();
  return s;
}

}  // namespace srcount
