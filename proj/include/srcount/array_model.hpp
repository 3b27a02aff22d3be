#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "srcount/rng.hpp"

namespace srcount {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

// Linear array geometry. Offsets are measured from the first element in
// wavelengths, so the first offset is always 0.
class ArrayGeometry {
 public:
  // Uniform linear array with the given spacing (wavelengths).
  explicit ArrayGeometry(std::size_t num_elements = 10, double spacing = 0.5);

  static ArrayGeometry from_offsets(std::vector<double> offsets);

  std::size_t size() const noexcept { return offsets_.size(); }
  std::span<const double> offsets() const noexcept { return offsets_; }

 private:
  struct Unchecked {};
  ArrayGeometry(Unchecked, std::vector<double> offsets) : offsets_(std::move(offsets)) {}

  std::vector<double> offsets_;
};

// A multipath replica s_k = rho * exp(j phi) * s_parent.
struct CoherentSpec {
  std::size_t parent = 0;
  double rho = 1.0;
  double phi = 0.0;
};

// One snapshot-frame worth of emitters. The first
// angles_deg.size() - coherent.size() angles belong to independent sources;
// the trailing angles belong to the coherent replicas, in order.
struct Scenario {
  std::vector<double> angles_deg;
  std::vector<CoherentSpec> coherent;
  std::size_t snapshots = 256;
  double sinr_db = 10.0;
  std::uint64_t seed = 0;
  bool noiseless = false;
  double min_separation_deg = 1.0;

  std::size_t num_sources() const noexcept { return angles_deg.size(); }
  std::size_t num_noncoherent() const noexcept { return angles_deg.size() - coherent.size(); }
};

struct Frame {
  CMatrix data;  // L x N
  std::size_t label_total = 0;
  std::size_t label_noncoherent = 0;
};

inline constexpr double kMaxSourceAngleDeg = 60.0;

CVector steering_vector(const ArrayGeometry& geometry, double theta_deg);

// Array manifold with one steering vector per column.
CMatrix manifold(const ArrayGeometry& geometry, std::span<const double> angles_deg);

// Unit-power QPSK symbols, one row per source.
CMatrix gen_qpsk(std::size_t num_sources, std::size_t num_snapshots, Rng& rng);

CVector make_coherent(const CVector& parent, double rho, double phi);

// Throws DomainError / CapacityError when the scenario breaks an invariant.
void validate(const ArrayGeometry& geometry, const Scenario& scenario);

// Noise variance per element that realises the scenario's SINR. The signal
// power is the analytic expectation ||A G||_F^2 / L with G the
// independent-to-all-sources mixing matrix. Zero-source scenarios use unit
// noise power.
double noise_variance(const ArrayGeometry& geometry, const Scenario& scenario);

Frame sample_frame(const ArrayGeometry& geometry, const Scenario& scenario);

// Draws angles uniformly from [-60, 60] honoring the minimum separation.
std::vector<double> draw_angles(std::size_t count, double min_separation_deg, Rng& rng);

// Random scenario with the requested source counts. Replica parents are drawn
// uniformly from the independent sources, rho ~ U[0.5, 1], phi ~ U[0, 2pi).
Scenario random_scenario(std::size_t num_noncoherent, std::size_t num_coherent,
                         std::size_t snapshots, double sinr_db, double min_separation_deg,
                         Rng& rng);

}  // namespace srcount
