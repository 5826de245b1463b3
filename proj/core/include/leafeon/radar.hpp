#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "leafeon/em.hpp"
#include "leafeon/leaf.hpp"

namespace leafeon::radar {

using em::cplx;

/// FMCW chirp and array parameters. Defaults follow the AWR1843 profile
/// (77 GHz start, 3.75 GHz sweep, 1024 samples at 5 Msps, 32 chirps,
/// 3 Tx at [0, lambda, 2 lambda], 4 Rx at lambda / 2).
struct ChirpConfig {
  double f_start = 77e9;        // Hz
  double bandwidth = 3.75e9;    // Hz
  double slope = 18.32e12;      // Hz/s
  double idle_time = 7e-6;      // s
  double ramp_start = 7e-6;     // s
  double ramp_end = 212.8e-6;   // s
  std::uint32_t adc_samples = 1024;
  double sample_rate = 5e6;     // samples/s
  std::uint32_t n_chirps = 32;
  double chirp_time = 10e-6;    // s
  double frame_length = 0.350;  // s
  std::uint32_t tx_count = 3;
  std::uint32_t rx_count = 4;
  double rx_spacing = 0.0;              // m; 0 selects lambda / 2
  std::vector<double> tx_spacings;      // m; empty selects [0, lambda, 2 lambda]
  double tx_gain = 3.1622776601683795;  // amplitude gain (10 dBi)
  double rx_gain = 3.1622776601683795;
  double tx_amplitude = 40.0;           // A_o, referenced to ADC full scale

  double center_frequency() const { return f_start + 0.5 * bandwidth; }
  double wavelength() const { return em::kSpeedOfLight / center_frequency(); }
  double effective_rx_spacing() const;
  std::vector<double> effective_tx_spacings() const;
  std::size_t n_bins() const { return adc_samples / 2; }
  /// Beat frequency of a reflector at range d, slope * 2 d / c.
  double beat_frequency(double range_m) const;
  /// Largest range whose beat tone stays inside the retained half-spectrum.
  double max_unambiguous_range() const;

  void validate() const;
  /// FNV-1a 64 over a canonical little-endian encoding of every field.
  std::uint64_t digest() const;
};

struct BackgroundReflector {
  double range_m = 0.0;
  double rcs_dbsm = -30.0;
};

struct Scene {
  std::optional<leaf::LeafState> leaf;  // nullopt: nothing reflects (r = 0)
  double distance = 0.6;                // d_t, m
  double azimuth_offset_deg = 0.0;
  double aspect_deg = 0.0;
  std::vector<BackgroundReflector> background;
  double snr_db = 30.0;  // +inf disables thermal noise
  em::Polarization pol = em::Polarization::TE;

  void validate() const;
};

/// Raw ADC cube, chirp-major: index ((chirp * rx_count) + rx) * adc_samples + n.
/// Samples are normalised to ADC full scale and lie on the int16 grid.
struct RadarFrame {
  std::size_t n_chirps = 0;
  std::size_t n_rx = 0;
  std::size_t n_samples = 0;
  std::vector<cplx> cube;
  double steering_deg = 0.0;
  std::uint64_t seed = 0;

  cplx& at(std::size_t chirp, std::size_t rx, std::size_t n) {
    return cube[(chirp * n_rx + rx) * n_samples + n];
  }
  const cplx& at(std::size_t chirp, std::size_t rx, std::size_t n) const {
    return cube[(chirp * n_rx + rx) * n_samples + n];
  }
};

inline constexpr double kAdcFullScaleCode = 32767.0;
inline constexpr double kSilenceDbfs = -200.0;
inline constexpr std::size_t kFacetCount = 32;

/// Positive-frequency range spectrum of one frame.
struct RangeProfile {
  std::size_t n_rx = 0;
  std::size_t n_bins = 0;
  std::size_t n_chirps = 0;
  double bin_width = 0.0;            // d_res, m
  std::vector<cplx> bins;            // [rx][bin], coherent mean over chirps
  std::vector<cplx> chirp_bins;      // [chirp][rx][bin]
  std::vector<double> power_dbfs;    // [rx][bin]

  cplx bin(std::size_t rx, std::size_t b) const { return bins[rx * n_bins + b]; }
  double dbfs(std::size_t rx, std::size_t b) const { return power_dbfs[rx * n_bins + b]; }
  /// Per-chirp values of one range bin as an (n_rx x n_chirps) snapshot matrix.
  Eigen::MatrixXcd snapshots(std::size_t b) const;
};

/// c / (2 * bandwidth).
double range_resolution(const ChirpConfig& cfg);

/// A_d = A_o g_t g_r lambda / (4 pi (2 d_t)) * r.
double friis_amplitude(double tx_amplitude, double tx_gain, double rx_gain, double lambda,
                       double distance, double reflection);

/// Samples a placement-specific facet ensemble for the leaf and synthesises
/// one frame at Tx steering angle eta. Deterministic in (cfg, scene, eta, seed).
RadarFrame synth_frame(const ChirpConfig& cfg, const Scene& scene, double eta_deg,
                       std::uint64_t seed);

/// Hann-windowed FFT over fast time for every chirp and Rx, coherent mean over
/// chirps, lower half of the spectrum retained. dBFS = 20 log10(|X| / (N / 2)),
/// clamped at kSilenceDbfs.
RangeProfile range_fft(const RadarFrame& frame, const ChirpConfig& cfg);

/// Indices (t - 1, t, t + 1) where t maximises the Rx-summed power within two
/// bins of round(d_t / d_res). Throws EdgeBin when t is the first or last bin.
std::array<std::size_t, 3> leaf_zone(const RangeProfile& profile, double distance);

/// Quantise a full-scale-normalised value onto the int16 ADC grid.
double quantize_adc(double x);
std::int16_t to_adc_code(double x);

}  // namespace leafeon::radar
