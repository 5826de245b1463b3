#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "leafeon/em.hpp"

namespace leafeon::beam {

using em::cplx;

/// Per-Tx phase offsets phi_m = 2 pi (s_m / lambda) sin(eta) in radians.
/// For spacings [0, lambda, 2 lambda] this is [0, 2 pi sin eta, 4 pi sin eta].
std::vector<double> tx_phase_offsets(double eta_deg, std::span<const double> tx_spacings,
                                     double lambda);

struct SteeringPlan {
  std::vector<double> angles_deg;
  std::vector<std::vector<double>> phase_offsets;  // [angle][tx]

  std::size_t iota() const { return angles_deg.size(); }
};

/// -10 deg to +10 deg in 2 deg steps (11 angles).
std::vector<double> default_steering_angles();

SteeringPlan make_steering_plan(std::span<const double> angles_deg,
                                std::span<const double> tx_spacings, double lambda);

/// Centred symmetric subset of `angles_deg` with `count` entries, e.g. count 1
/// gives {0}, count 3 gives {-2, 0, 2} on the default plan.
std::vector<double> centered_subset(std::span<const double> angles_deg, std::size_t count);

/// Normalised Tx array factor toward azimuth `target_deg` when the array is
/// steered to `eta_deg`: (1/m) sum_m exp(j (2 pi s_m / lambda sin(target) - phi_m)).
cplx tx_array_factor(double eta_deg, double target_deg, std::span<const double> tx_spacings,
                     double lambda);

/// Uniform linear array response, element k = exp(j 2 pi / lambda sin(xi) k s).
Eigen::VectorXcd steering_vector(double xi_deg, std::size_t kappa, double spacing, double lambda);

/// MVDR weights w = R^-1 a / (a^H R^-1 a). R must already be loaded so that
/// it is positive definite; throws SingularCovariance otherwise.
Eigen::VectorXcd capon_weights(const Eigen::MatrixXcd& covariance, const Eigen::VectorXcd& a);

/// (1/N) X X^H + delta I with delta = 1e-3 trace / kappa.
Eigen::MatrixXcd loaded_covariance(const Eigen::MatrixXcd& snapshots);

struct AoaGrid {
  double start_deg = -20.0;
  double stop_deg = 20.0;
  double step_deg = 2.0;

  std::vector<double> angles() const;
};

struct AoaSpectrum {
  std::vector<double> grid;
  std::vector<double> power;
  double aoa = 0.0;
};

/// Index of the maximum of `power`; exact ties go to the smaller |angle|,
/// then to the more negative angle.
std::size_t select_peak(std::span<const double> grid_deg, std::span<const double> power);

/// Capon spectrum 1 / (a^H R^-1 a) over the grid and its argmax.
/// Needs at least kappa snapshots (columns); throws InsufficientSnapshots.
AoaSpectrum aoa_estimate(const Eigen::MatrixXcd& snapshots, double rx_spacing, double lambda,
                         const AoaGrid& grid = {});

}  // namespace leafeon::beam
