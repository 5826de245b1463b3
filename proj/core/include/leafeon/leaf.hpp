#pragma once

#include "leafeon/em.hpp"

namespace leafeon::leaf {

using em::cplx;
using em::Polarization;

/// Geometry and composition of a two-layer (palisade over spongy) leaf.
struct LeafSpec {
  double length = 0.10;             // m
  double width = 0.06;              // m, extent across the scan plane
  double total_thickness = 0.3e-3;  // m
  double palisade_fraction = 0.4;   // of total_thickness
  double roughness_sigma = 0.4e-3;  // m, RMS surface height
  double correlation_length = 5e-3; // m, surface facet size
  double turgid_water_fraction_palisade = 0.8;
  // Medium under the spongy layer. Air for a free-standing leaf.
  em::ComplexPermittivity backing = em::kVacuum;

  double palisade_thickness() const { return total_thickness * palisade_fraction; }
  double spongy_thickness() const { return total_thickness * (1.0 - palisade_fraction); }
  void validate() const;
};

struct LayerFractions {
  double palisade = 0.0;
  double spongy = 0.0;
};

/// Water volume fractions of the two layers at a given RWC (percent).
///
/// The spongy layer holds a quarter of the turgid palisade water and scales
/// linearly with RWC. Between 50 % and 100 % RWC the palisade fraction falls
/// linearly from its turgid value to the spongy value at 50 %; below 50 % both
/// layers share the spongy fraction.
LayerFractions layer_water_fractions(double rwc, const LeafSpec& spec);

struct LeafState {
  LeafSpec spec;
  double rwc = 100.0;
  double water_fraction_palisade = 0.0;
  double water_fraction_spongy = 0.0;

  static LeafState at(const LeafSpec& spec, double rwc);
};

struct ScatterResult {
  cplx surface_amplitude;     // top interface, roughness-attenuated
  cplx volumetric_amplitude;  // first bounce off the palisade/spongy boundary
  cplx total_amplitude;       // coherent sum of the two
  double rcs_surface = 0.0;   // dBsm
  double rcs_volumetric = 0.0;
  double rcs_total = 0.0;
};

/// Coherent (specular) attenuation of a Gaussian rough surface,
/// exp(-(4 pi sigma cos(theta) / lambda)^2 / 2).
double roughness_factor(double sigma, double theta_i, double lambda);

/// Physical-optics directivity of a flat plate of side `extent` in the
/// scan plane, cos^2(theta) * sinc^2(k * extent * sin(theta)), unity at 0.
double plate_directivity(double extent, double theta, double lambda);

/// Two-boundary coherent reflection of the leaf seen from air at theta_i.
///
/// Surface term: air/palisade Fresnel coefficient times roughness_factor.
/// Volumetric term: (1 - r01^2) * G * exp(2 j k0 n_p cos_p d_p), where G is
/// the reflection looking from the palisade into the spongy slab over the
/// backing medium. Repeated bounces inside the palisade are dropped.
/// RCS fields carry the normal-incidence plate gain 4 pi A^2 / lambda^2
/// without angular directivity; use rcs() for the monostatic pattern.
ScatterResult multilayer_reflection(const LeafState& state, double theta_i, double freq_hz,
                                    Polarization pol = Polarization::TE);

/// Monostatic RCS (theta_s = theta) of the leaf plate in dBsm.
ScatterResult rcs(const LeafState& state, double theta, double freq_hz,
                  Polarization pol = Polarization::TE);

inline constexpr double kRcsFloorDbsm = -300.0;

}  // namespace leafeon::leaf
