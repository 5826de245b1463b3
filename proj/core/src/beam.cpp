#include "leafeon/beam.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "leafeon/errors.hpp"

namespace leafeon::beam {
namespace {

constexpr double deg2rad(double d) { return d * em::kPi / 180.0; }

}  // namespace

std::vector<double> tx_phase_offsets(double eta_deg, std::span<const double> tx_spacings,
                                     double lambda) {
  std::vector<double> phi;
  phi.reserve(tx_spacings.size());
  const double s_eta = std::sin(deg2rad(eta_deg));
  for (double s : tx_spacings) phi.push_back(2.0 * em::kPi * (s / lambda) * s_eta);
  return phi;
}

std::vector<double> default_steering_angles() {
  std::vector<double> a;
  for (int d = -10; d <= 10; d += 2) a.push_back(d);
  return a;
}

SteeringPlan make_steering_plan(std::span<const double> angles_deg,
                                std::span<const double> tx_spacings, double lambda) {
  if (tx_spacings.empty() || tx_spacings.front() != 0.0) {
    throw Error(ErrorCode::ConfigError, "first Tx spacing must be 0");
  }
  SteeringPlan plan;
  plan.angles_deg.assign(angles_deg.begin(), angles_deg.end());
  for (double eta : plan.angles_deg) {
    plan.phase_offsets.push_back(tx_phase_offsets(eta, tx_spacings, lambda));
  }
  return plan;
}

std::vector<double> centered_subset(std::span<const double> angles_deg, std::size_t count) {
  if (count == 0 || count > angles_deg.size()) {
    throw Error(ErrorCode::OutOfRange,
                fmt::format("subset size {} not in [1, {}]", count, angles_deg.size()));
  }
  std::vector<double> sorted(angles_deg.begin(), angles_deg.end());
  // Closest to boresight first; ties (+a, -a) keep the negative one first.
  std::stable_sort(sorted.begin(), sorted.end(), [](double a, double b) {
    if (std::abs(a) != std::abs(b)) return std::abs(a) < std::abs(b);
    return a < b;
  });
  sorted.resize(count);
  std::sort(sorted.begin(), sorted.end());
  return sorted;
}

cplx tx_array_factor(double eta_deg, double target_deg, std::span<const double> tx_spacings,
                     double lambda) {
  const std::vector<double> phi = tx_phase_offsets(eta_deg, tx_spacings, lambda);
  const double s_target = std::sin(deg2rad(target_deg));
  cplx sum{0.0, 0.0};
  for (std::size_t m = 0; m < tx_spacings.size(); ++m) {
    const double path = 2.0 * em::kPi * tx_spacings[m] / lambda * s_target;
    sum += std::polar(1.0, path - phi[m]);
  }
  return sum / static_cast<double>(tx_spacings.size());
}

Eigen::VectorXcd steering_vector(double xi_deg, std::size_t kappa, double spacing,
                                 double lambda) {
  Eigen::VectorXcd a(static_cast<Eigen::Index>(kappa));
  const double step = 2.0 * em::kPi / lambda * std::sin(deg2rad(xi_deg)) * spacing;
  for (std::size_t k = 0; k < kappa; ++k) {
    a(static_cast<Eigen::Index>(k)) = std::polar(1.0, step * static_cast<double>(k));
  }
  return a;
}

Eigen::VectorXcd capon_weights(const Eigen::MatrixXcd& covariance, const Eigen::VectorXcd& a) {
  if (covariance.rows() != covariance.cols() || covariance.rows() != a.size()) {
    throw Error(ErrorCode::ShapeMismatch, "covariance and steering vector sizes differ");
  }
  Eigen::LLT<Eigen::MatrixXcd> llt(covariance);
  if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-13)) {
    throw Error(ErrorCode::SingularCovariance, "covariance is not positive definite");
  }
  const Eigen::VectorXcd r_inv_a = llt.solve(a);
  const cplx denom = a.dot(r_inv_a);  // a^H R^-1 a
  return r_inv_a / denom;
}

Eigen::MatrixXcd loaded_covariance(const Eigen::MatrixXcd& snapshots) {
  const auto n = static_cast<double>(snapshots.cols());
  Eigen::MatrixXcd r = snapshots * snapshots.adjoint() / n;
  const double kappa = static_cast<double>(r.rows());
  const double delta = 1e-3 * r.trace().real() / kappa;
  r.diagonal().array() += delta;
  return r;
}

std::vector<double> AoaGrid::angles() const {
  std::vector<double> out;
  const auto n = static_cast<long>(std::floor((stop_deg - start_deg) / step_deg + 1e-9)) + 1;
  for (long i = 0; i < n; ++i) out.push_back(start_deg + step_deg * static_cast<double>(i));
  return out;
}

std::size_t select_peak(std::span<const double> grid_deg, std::span<const double> power) {
  if (grid_deg.empty() || grid_deg.size() != power.size()) {
    throw Error(ErrorCode::ShapeMismatch, "grid and power sizes differ");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < power.size(); ++i) {
    if (power[i] > power[best]) {
      best = i;
    } else if (power[i] == power[best]) {
      const double a = std::abs(grid_deg[i]);
      const double b = std::abs(grid_deg[best]);
      if (a < b || (a == b && grid_deg[i] < grid_deg[best])) best = i;
    }
  }
  return best;
}

AoaSpectrum aoa_estimate(const Eigen::MatrixXcd& snapshots, double rx_spacing, double lambda,
                         const AoaGrid& grid) {
  const auto kappa = static_cast<std::size_t>(snapshots.rows());
  if (kappa == 0 || static_cast<std::size_t>(snapshots.cols()) < kappa) {
    throw Error(ErrorCode::InsufficientSnapshots,
                fmt::format("{} snapshots for {} channels", snapshots.cols(), kappa));
  }
  const Eigen::MatrixXcd r = loaded_covariance(snapshots);
  Eigen::LLT<Eigen::MatrixXcd> llt(r);
  if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-13)) {
    throw Error(ErrorCode::SingularCovariance, "sample covariance is not positive definite");
  }
  AoaSpectrum out;
  out.grid = grid.angles();
  out.power.reserve(out.grid.size());
  for (double xi : out.grid) {
    const Eigen::VectorXcd a = steering_vector(xi, kappa, rx_spacing, lambda);
    const double q = a.dot(llt.solve(a)).real();
    out.power.push_back(1.0 / q);
  }
  out.aoa = out.grid[select_peak(out.grid, out.power)];
  return out;
}

}  // namespace leafeon::beam
