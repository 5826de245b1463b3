#include "leafeon/leaf.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "leafeon/errors.hpp"

namespace leafeon::leaf {
namespace {

double to_dbsm(double sigma) {
  if (!(sigma > 0.0)) return kRcsFloorDbsm;
  return std::max(kRcsFloorDbsm, 10.0 * std::log10(sigma));
}

double sinc(double x) { return std::abs(x) < 1e-12 ? 1.0 : std::sin(x) / x; }

}  // namespace

void LeafSpec::validate() const {
  if (!(length > 0.0 && width > 0.0 && total_thickness > 0.0 && correlation_length > 0.0)) {
    throw Error(ErrorCode::ConfigError, "leaf dimensions must be positive");
  }
  if (!(palisade_fraction > 0.0 && palisade_fraction < 1.0)) {
    throw Error(ErrorCode::ConfigError,
                fmt::format("palisade_fraction {} outside (0, 1)", palisade_fraction));
  }
  if (!(roughness_sigma >= 0.0)) {
    throw Error(ErrorCode::ConfigError, "roughness_sigma must be >= 0");
  }
  if (!(turgid_water_fraction_palisade >= 0.0 && turgid_water_fraction_palisade <= 1.0)) {
    throw Error(ErrorCode::ConfigError, "turgid palisade water fraction outside [0, 1]");
  }
}

LayerFractions layer_water_fractions(double rwc, const LeafSpec& spec) {
  if (!(rwc >= 0.0 && rwc <= 100.0)) {
    throw Error(ErrorCode::OutOfRange, fmt::format("rwc {} outside [0, 100]", rwc));
  }
  const double turgid_palisade = spec.turgid_water_fraction_palisade;
  const double turgid_spongy = turgid_palisade / 4.0;
  const double spongy = turgid_spongy * rwc / 100.0;
  if (rwc <= 50.0) return {spongy, spongy};
  const double floor = turgid_spongy * 0.5;
  const double palisade = floor + (turgid_palisade - floor) * (rwc - 50.0) / 50.0;
  return {palisade, spongy};
}

LeafState LeafState::at(const LeafSpec& spec, double rwc) {
  spec.validate();
  const LayerFractions f = layer_water_fractions(rwc, spec);
  return {spec, rwc, f.palisade, f.spongy};
}

double roughness_factor(double sigma, double theta_i, double lambda) {
  const double phase = 4.0 * em::kPi * sigma * std::cos(theta_i) / lambda;
  return std::exp(-0.5 * phase * phase);
}

double plate_directivity(double extent, double theta, double lambda) {
  const double k = 2.0 * em::kPi / lambda;
  const double c = std::cos(theta);
  const double s = sinc(k * extent * std::sin(theta));
  return c * c * s * s;
}

ScatterResult multilayer_reflection(const LeafState& state, double theta_i, double freq_hz,
                                    Polarization pol) {
  const LeafSpec& spec = state.spec;
  const double lambda = em::kSpeedOfLight / freq_hz;
  const double k0 = 2.0 * em::kPi / lambda;

  const cplx n_air{1.0, 0.0};
  const cplx n_pal =
      em::refractive_index_complex(em::mix_permittivity(state.water_fraction_palisade, freq_hz));
  const cplx n_spo =
      em::refractive_index_complex(em::mix_permittivity(state.water_fraction_spongy, freq_hz));
  const cplx n_back = em::refractive_index_complex(spec.backing);

  const cplx cos_air = std::cos(theta_i);
  const cplx cos_pal = em::cos_in_medium(n_pal, theta_i);
  const cplx cos_spo = em::cos_in_medium(n_spo, theta_i);
  const cplx cos_back = em::cos_in_medium(n_back, theta_i);

  const cplx r_top = em::fresnel_from_cosines(n_air, cos_air, n_pal, cos_pal, pol);
  const cplx r_internal = em::fresnel_from_cosines(n_pal, cos_pal, n_spo, cos_spo, pol);
  const cplx r_bottom = em::fresnel_from_cosines(n_spo, cos_spo, n_back, cos_back, pol);

  const cplx j{0.0, 1.0};
  const cplx spongy_round_trip = std::exp(2.0 * j * k0 * n_spo * cos_spo * spec.spongy_thickness());
  const cplx palisade_round_trip =
      std::exp(2.0 * j * k0 * n_pal * cos_pal * spec.palisade_thickness());

  // Reflection looking down from inside the palisade into spongy-over-backing.
  const cplx below = (r_internal + r_bottom * spongy_round_trip) /
                     (1.0 + r_internal * r_bottom * spongy_round_trip);

  ScatterResult out;
  out.surface_amplitude = roughness_factor(spec.roughness_sigma, theta_i, lambda) * r_top;
  out.volumetric_amplitude = (1.0 - r_top * r_top) * below * palisade_round_trip;
  out.total_amplitude = out.surface_amplitude + out.volumetric_amplitude;

  const double area = spec.length * spec.width;
  const double plate_gain = 4.0 * em::kPi * area * area / (lambda * lambda);
  out.rcs_surface = to_dbsm(plate_gain * std::norm(out.surface_amplitude));
  out.rcs_volumetric = to_dbsm(plate_gain * std::norm(out.volumetric_amplitude));
  out.rcs_total = to_dbsm(plate_gain * std::norm(out.total_amplitude));
  return out;
}

ScatterResult rcs(const LeafState& state, double theta, double freq_hz, Polarization pol) {
  ScatterResult out = multilayer_reflection(state, theta, freq_hz, pol);
  const double lambda = em::kSpeedOfLight / freq_hz;
  const double area = state.spec.length * state.spec.width;
  const double gain = 4.0 * em::kPi * area * area / (lambda * lambda) *
                      plate_directivity(state.spec.width, theta, lambda);
  out.rcs_surface = to_dbsm(gain * std::norm(out.surface_amplitude));
  out.rcs_volumetric = to_dbsm(gain * std::norm(out.volumetric_amplitude));
  out.rcs_total = to_dbsm(gain * std::norm(out.total_amplitude));
  return out;
}

}  // namespace leafeon::leaf
