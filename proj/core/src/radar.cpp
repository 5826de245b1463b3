#include "leafeon/radar.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <random>

#include <fmt/format.h>

#include "leafeon/beam.hpp"
#include "leafeon/errors.hpp"
#include "leafeon/random.hpp"

namespace leafeon::radar {
namespace {

constexpr double deg2rad(double d) { return d * em::kPi / 180.0; }
constexpr double rad2deg(double r) { return r * 180.0 / em::kPi; }
constexpr double kMaxFacetIncidence = 60.0 * em::kPi / 180.0;
// Facet angular offsets are taken at this range so leaf reflectivity is
// independent of distance and the echo follows the 1/(2d) law.
constexpr double kApertureReferenceRange = 0.6;

class Fnv1a {
 public:
  template <typename T>
  void add(const T& value) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    for (unsigned char b : bytes) {
      hash_ ^= b;
      hash_ *= 0x100000001B3ULL;
    }
  }
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xCBF29CE484222325ULL;
};

struct FftwFree {
  void operator()(fftw_complex* p) const { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

// Plans are created once per length under a lock and then executed through
// the new-array interface, which is thread-safe.
fftw_plan forward_plan(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, fftw_plan> plans;
  std::lock_guard lock(mu);
  auto it = plans.find(n);
  if (it != plans.end()) return it->second;
  FftwBuffer in(fftw_alloc_complex(n));
  FftwBuffer out(fftw_alloc_complex(n));
  fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n), in.get(), out.get(), FFTW_FORWARD,
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
  plans.emplace(n, p);
  return p;
}

struct Facet {
  double lateral = 0.0;  // m across the leaf width
  double tilt = 0.0;     // rad, local surface slope
  double height = 0.0;   // m, surface height deviation
};

// Facets are a property of the placement, so they depend on the seed only and
// are shared by every steering angle of a capture.
std::vector<Facet> sample_facets(const leaf::LeafSpec& spec, std::uint64_t seed) {
  Rng rng = make_rng(seed, "facets");
  std::uniform_real_distribution<double> jitter(-0.5, 0.5);
  std::normal_distribution<double> unit(0.0, 1.0);
  const double cell = spec.width / static_cast<double>(kFacetCount);
  const double slope_std =
      std::atan(std::sqrt(2.0) * spec.roughness_sigma / spec.correlation_length);
  std::vector<Facet> facets(kFacetCount);
  for (std::size_t k = 0; k < kFacetCount; ++k) {
    Facet& f = facets[k];
    f.lateral = (static_cast<double>(k) + 0.5 + jitter(rng)) * cell - 0.5 * spec.width;
    f.tilt = slope_std * unit(rng);
    f.height = spec.roughness_sigma * unit(rng);
  }
  return facets;
}

// Per-Rx complex leaf reflectivity: facet ensemble weighted by the Tx array
// factor and carrying each facet's Rx phase progression.
std::vector<cplx> leaf_reflectivity(const ChirpConfig& cfg, const Scene& scene, double eta_deg,
                                    std::uint64_t seed) {
  const leaf::LeafState& state = *scene.leaf;
  leaf::LeafState smooth = state;
  smooth.spec.roughness_sigma = 0.0;

  const double lambda = cfg.wavelength();
  const double k0 = 2.0 * em::kPi / lambda;
  const double fc = cfg.center_frequency();
  const double rx_spacing = cfg.effective_rx_spacing();
  const std::vector<double> tx_spacings = cfg.effective_tx_spacings();
  const double n_palisade =
      em::refractive_index_real(em::mix_permittivity(state.water_fraction_palisade, fc));

  const std::vector<Facet> facets = sample_facets(state.spec, seed);
  std::vector<cplx> out(cfg.rx_count, cplx{0.0, 0.0});
  const double boresight_incidence = deg2rad(eta_deg - scene.azimuth_offset_deg + scene.aspect_deg);

  for (const Facet& f : facets) {
    const double azimuth = scene.azimuth_offset_deg + rad2deg(std::atan(f.lateral / kApertureReferenceRange));
    const double theta =
        std::min(std::abs(boresight_incidence + f.tilt), kMaxFacetIncidence);
    const leaf::ScatterResult s = leaf::multilayer_reflection(smooth, theta, fc, scene.pol);
    const double refracted = em::snell_refract(1.0, n_palisade, theta);
    const double surface_gain = std::sqrt(leaf::plate_directivity(state.spec.correlation_length, theta, lambda));
    const double volume_gain =
        std::sqrt(leaf::plate_directivity(state.spec.correlation_length, refracted, lambda));
    const double height_phase = 2.0 * k0 * f.height * std::cos(theta);

    const cplx echo = s.surface_amplitude * surface_gain * std::polar(1.0, height_phase) +
                      s.volumetric_amplitude * volume_gain;
    const cplx weighted = beam::tx_array_factor(eta_deg, azimuth, tx_spacings, lambda) * echo;
    const double rx_step = k0 * std::sin(deg2rad(azimuth)) * rx_spacing;
    for (std::size_t r = 0; r < cfg.rx_count; ++r) {
      out[r] += weighted * std::polar(1.0, rx_step * static_cast<double>(r));
    }
  }
  for (cplx& v : out) v /= static_cast<double>(kFacetCount);
  return out;
}

}  // namespace

double ChirpConfig::effective_rx_spacing() const {
  return rx_spacing > 0.0 ? rx_spacing : 0.5 * wavelength();
}

std::vector<double> ChirpConfig::effective_tx_spacings() const {
  if (!tx_spacings.empty()) return tx_spacings;
  std::vector<double> s;
  for (std::uint32_t m = 0; m < tx_count; ++m) s.push_back(wavelength() * m);
  return s;
}

double ChirpConfig::beat_frequency(double range_m) const {
  return slope * 2.0 * range_m / em::kSpeedOfLight;
}

double ChirpConfig::max_unambiguous_range() const {
  return 0.5 * sample_rate * em::kSpeedOfLight / (2.0 * slope);
}

void ChirpConfig::validate() const {
  if (!(bandwidth > 0.0 && slope > 0.0 && sample_rate > 0.0 && f_start > 0.0)) {
    throw Error(ErrorCode::ConfigError, "chirp bandwidth, slope, sample rate must be positive");
  }
  if (adc_samples < 2 || !std::has_single_bit(adc_samples)) {
    throw Error(ErrorCode::ConfigError,
                fmt::format("adc_samples {} is not a power of two", adc_samples));
  }
  if (rx_count < 2) throw Error(ErrorCode::ConfigError, "rx_count must be >= 2");
  if (n_chirps < 1 || tx_count < 1) throw Error(ErrorCode::ConfigError, "empty chirp/tx count");
  if (!tx_spacings.empty() && (tx_spacings.size() != tx_count || tx_spacings.front() != 0.0)) {
    throw Error(ErrorCode::ConfigError, "tx_spacings must have tx_count entries starting at 0");
  }
}

std::uint64_t ChirpConfig::digest() const {
  Fnv1a h;
  h.add(f_start);
  h.add(bandwidth);
  h.add(slope);
  h.add(idle_time);
  h.add(ramp_start);
  h.add(ramp_end);
  h.add(adc_samples);
  h.add(sample_rate);
  h.add(n_chirps);
  h.add(chirp_time);
  h.add(frame_length);
  h.add(tx_count);
  h.add(rx_count);
  h.add(effective_rx_spacing());
  for (double s : effective_tx_spacings()) h.add(s);
  h.add(tx_gain);
  h.add(rx_gain);
  h.add(tx_amplitude);
  return h.value();
}

void Scene::validate() const {
  if (!(distance >= 0.2 && distance <= 2.0)) {
    throw Error(ErrorCode::ConfigError, fmt::format("distance {} m outside [0.2, 2.0]", distance));
  }
  if (!(std::abs(azimuth_offset_deg) <= 10.0)) {
    throw Error(ErrorCode::ConfigError,
                fmt::format("azimuth offset {} deg exceeds 10 deg", azimuth_offset_deg));
  }
  if (leaf) leaf->spec.validate();
}

Eigen::MatrixXcd RangeProfile::snapshots(std::size_t b) const {
  Eigen::MatrixXcd x(static_cast<Eigen::Index>(n_rx), static_cast<Eigen::Index>(n_chirps));
  for (std::size_t c = 0; c < n_chirps; ++c) {
    for (std::size_t r = 0; r < n_rx; ++r) {
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          chirp_bins[(c * n_rx + r) * n_bins + b];
    }
  }
  return x;
}

double range_resolution(const ChirpConfig& cfg) {
  if (!(cfg.bandwidth > 0.0)) throw Error(ErrorCode::ConfigError, "bandwidth must be positive");
  return em::kSpeedOfLight / (2.0 * cfg.bandwidth);
}

double friis_amplitude(double tx_amplitude, double tx_gain, double rx_gain, double lambda,
                       double distance, double reflection) {
  if (!(distance > 0.0)) throw Error(ErrorCode::OutOfRange, "distance must be positive");
  return tx_amplitude * tx_gain * rx_gain * lambda / (4.0 * em::kPi * (2.0 * distance)) *
         reflection;
}

double quantize_adc(double x) {
  return static_cast<double>(to_adc_code(x)) / kAdcFullScaleCode;
}

std::int16_t to_adc_code(double x) {
  const double code = std::clamp(std::round(x * kAdcFullScaleCode), -32768.0, 32767.0);
  return static_cast<std::int16_t>(code);
}

RadarFrame synth_frame(const ChirpConfig& cfg, const Scene& scene, double eta_deg,
                       std::uint64_t seed) {
  cfg.validate();
  scene.validate();
  const double max_range = cfg.max_unambiguous_range();
  if (scene.distance > max_range) {
    throw Error(ErrorCode::ConfigMismatch,
                fmt::format("leaf range {} m beyond unambiguous {} m", scene.distance, max_range));
  }
  for (const BackgroundReflector& bg : scene.background) {
    if (!(bg.range_m > 0.0) || bg.range_m > max_range) {
      throw Error(ErrorCode::ConfigMismatch,
                  fmt::format("background range {} m outside (0, {}] m", bg.range_m, max_range));
    }
  }

  const std::size_t n = cfg.adc_samples;
  const std::size_t kappa = cfg.rx_count;
  const double lambda = cfg.wavelength();
  const double k0 = 2.0 * em::kPi / lambda;
  const double ref_amplitude =
      friis_amplitude(cfg.tx_amplitude, cfg.tx_gain, cfg.rx_gain, lambda, scene.distance, 1.0);

  struct Echo {
    double beat_hz;
    std::vector<cplx> per_rx;
  };
  std::vector<Echo> echoes;

  if (scene.leaf) {
    std::vector<cplx> refl = leaf_reflectivity(cfg, scene, eta_deg, seed);
    const cplx carrier = std::polar(1.0, 2.0 * k0 * scene.distance);
    for (cplx& v : refl) v *= ref_amplitude * carrier;
    echoes.push_back({cfg.beat_frequency(scene.distance), std::move(refl)});
  }
  for (const BackgroundReflector& bg : scene.background) {
    // Point scatterer on boresight: radar-equation amplitude.
    const double sigma = std::pow(10.0, bg.rcs_dbsm / 10.0);
    const double amp = cfg.tx_amplitude * cfg.tx_gain * cfg.rx_gain * lambda * std::sqrt(sigma) /
                       (std::pow(4.0 * em::kPi, 1.5) * bg.range_m * bg.range_m);
    const cplx af = beam::tx_array_factor(eta_deg, 0.0, cfg.effective_tx_spacings(), lambda);
    const cplx carrier = std::polar(1.0, 2.0 * k0 * bg.range_m);
    echoes.push_back({cfg.beat_frequency(bg.range_m), std::vector<cplx>(kappa, amp * af * carrier)});
  }

  // Noiseless beat signal, identical across chirps of a static scene.
  std::vector<cplx> clean(kappa * n, cplx{0.0, 0.0});
  for (const Echo& e : echoes) {
    const double step = 2.0 * em::kPi * e.beat_hz / cfg.sample_rate;
    for (std::size_t i = 0; i < n; ++i) {
      const cplx tone = std::polar(1.0, step * static_cast<double>(i));
      for (std::size_t r = 0; r < kappa; ++r) clean[r * n + i] += e.per_rx[r] * tone;
    }
  }

  RadarFrame frame;
  frame.n_chirps = cfg.n_chirps;
  frame.n_rx = kappa;
  frame.n_samples = n;
  frame.steering_deg = eta_deg;
  frame.seed = seed;
  frame.cube.resize(frame.n_chirps * kappa * n);

  const bool noisy = std::isfinite(scene.snr_db);
  const double sigma_n = noisy ? ref_amplitude * std::pow(10.0, -scene.snr_db / 20.0) : 0.0;
  Rng rng = make_rng(seed, "noise", {std::bit_cast<std::uint64_t>(eta_deg)});
  std::normal_distribution<double> noise(0.0, sigma_n / std::sqrt(2.0));

  for (std::size_t c = 0; c < frame.n_chirps; ++c) {
    for (std::size_t r = 0; r < kappa; ++r) {
      for (std::size_t i = 0; i < n; ++i) {
        cplx v = clean[r * n + i];
        if (noisy) v += cplx{noise(rng), noise(rng)};
        frame.at(c, r, i) = {quantize_adc(v.real()), quantize_adc(v.imag())};
      }
    }
  }
  return frame;
}

RangeProfile range_fft(const RadarFrame& frame, const ChirpConfig& cfg) {
  if (frame.n_samples != cfg.adc_samples || frame.n_rx != cfg.rx_count ||
      frame.n_chirps != cfg.n_chirps || frame.cube.size() != frame.n_chirps * frame.n_rx * frame.n_samples) {
    throw Error(ErrorCode::ConfigMismatch, "frame dimensions do not match the chirp config");
  }
  const std::size_t n = frame.n_samples;
  const std::size_t half = n / 2;
  const std::size_t kappa = frame.n_rx;

  RangeProfile p;
  p.n_rx = kappa;
  p.n_bins = half;
  p.n_chirps = frame.n_chirps;
  p.bin_width = range_resolution(cfg);
  p.bins.assign(kappa * half, cplx{0.0, 0.0});
  p.chirp_bins.assign(frame.n_chirps * kappa * half, cplx{0.0, 0.0});
  p.power_dbfs.assign(kappa * half, kSilenceDbfs);

  std::vector<double> window(n);
  for (std::size_t i = 0; i < n; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * em::kPi * static_cast<double>(i) / static_cast<double>(n));
  }

  const fftw_plan plan = forward_plan(n);
  FftwBuffer in(fftw_alloc_complex(n));
  FftwBuffer out(fftw_alloc_complex(n));
  for (std::size_t c = 0; c < frame.n_chirps; ++c) {
    for (std::size_t r = 0; r < kappa; ++r) {
      for (std::size_t i = 0; i < n; ++i) {
        const cplx v = frame.at(c, r, i) * window[i];
        in[i][0] = v.real();
        in[i][1] = v.imag();
      }
      fftw_execute_dft(plan, in.get(), out.get());
      for (std::size_t b = 0; b < half; ++b) {
        const cplx x{out[b][0], out[b][1]};
        p.chirp_bins[(c * kappa + r) * half + b] = x;
        p.bins[r * half + b] += x;
      }
    }
  }

  const double inv_chirps = 1.0 / static_cast<double>(frame.n_chirps);
  const double full_scale = static_cast<double>(half);
  for (std::size_t k = 0; k < p.bins.size(); ++k) {
    p.bins[k] *= inv_chirps;
    const double mag = std::abs(p.bins[k]);
    if (mag > 0.0) {
      p.power_dbfs[k] = std::max(kSilenceDbfs, 20.0 * std::log10(mag / full_scale));
    }
  }
  return p;
}

std::array<std::size_t, 3> leaf_zone(const RangeProfile& profile, double distance) {
  const double centre = std::round(distance / profile.bin_width);
  if (!(centre >= 0.0 && centre < static_cast<double>(profile.n_bins))) {
    throw Error(ErrorCode::OutOfRange,
                fmt::format("distance {} m outside the {}-bin profile", distance, profile.n_bins));
  }
  const auto c = static_cast<std::size_t>(centre);
  const std::size_t lo = c >= 2 ? c - 2 : 0;
  const std::size_t hi = std::min(profile.n_bins - 1, c + 2);
  std::size_t best = lo;
  double best_power = -1.0;
  for (std::size_t b = lo; b <= hi; ++b) {
    double power = 0.0;
    for (std::size_t r = 0; r < profile.n_rx; ++r) power += std::norm(profile.bin(r, b));
    if (power > best_power) {
      best_power = power;
      best = b;
    }
  }
  if (best == 0 || best + 1 >= profile.n_bins) {
    throw Error(ErrorCode::EdgeBin, fmt::format("leaf bin {} is at the profile edge", best));
  }
  return {best - 1, best, best + 1};
}

}  // namespace leafeon::radar
