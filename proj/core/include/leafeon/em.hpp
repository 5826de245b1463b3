#pragma once

#include <complex>

namespace leafeon::em {

using cplx = std::complex<double>;

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kPi = 3.14159265358979323846;

/// Relative permittivity eps = real_part + j * imag_part with the loss
/// stored as a nonnegative imaginary part (passive medium).
struct ComplexPermittivity {
  double real_part = 1.0;
  double imag_part = 0.0;

  cplx value() const { return {real_part, imag_part}; }
  friend bool operator==(const ComplexPermittivity&, const ComplexPermittivity&) = default;
};

inline constexpr ComplexPermittivity kVacuum{1.0, 0.0};
inline constexpr ComplexPermittivity kDryLeafMatter{2.5, 0.2};

struct RefractiveIndex {
  double real_scalar = 1.0;  // n = sqrt((|eps| + eps') / 2)
  cplx complex_value{1.0, 0.0};  // principal sqrt(eps), Im >= 0
};

enum class Polarization { TE, TM };

/// Scalar refractive index from a complex permittivity,
/// n = sqrt((|eps| + eps') / 2).
///
/// The square root is taken over the sum (|eps| + eps') / 2. Read literally,
/// the typeset form sqrt(|eps| / 2 + eps') gives sqrt(1.5) in vacuum, so the
/// grouped form is used; it is the real part of the principal sqrt(eps).
double refractive_index_real(const ComplexPermittivity& eps);

/// Principal square root of eps with nonnegative imaginary part.
cplx refractive_index_complex(const ComplexPermittivity& eps);

RefractiveIndex refractive_index(const ComplexPermittivity& eps);

/// Normal-incidence reflection coefficient r = (n - 1) / (n + 1) for a wave
/// going from air into a medium of index n.
double fresnel_normal(double n);

/// Refraction angle from n_i sin(theta_i) = n_t sin(theta_t), in radians.
/// Throws Error{TotalInternalReflection} when the sine would exceed 1.
double snell_refract(double n_i, double n_t, double theta_i);

/// Cosine of the propagation angle inside a medium of index n for a wave
/// launched from air at theta0, principal branch (Im >= 0).
cplx cos_in_medium(cplx n, double theta0);

/// Amplitude reflection coefficient for a wave travelling in medium n1 at
/// angle theta_i hitting medium n2.
///   TE: (n1 cos1 - n2 cos2) / (n1 cos1 + n2 cos2)
///   TM: (n2 cos1 - n1 cos2) / (n2 cos1 + n1 cos2)
/// At normal incidence |r| equals fresnel_normal for real indices.
cplx fresnel_oblique(cplx n1, cplx n2, double theta_i, Polarization pol);

/// Same as fresnel_oblique but with the in-medium cosines supplied, for
/// multilayer stacks where every layer is referenced to the air launch angle.
cplx fresnel_from_cosines(cplx n1, cplx cos1, cplx n2, cplx cos2, Polarization pol);

/// Single-Debye relaxation eps(w) = eps_inf + (eps_s - eps_inf) / (1 + j w tau),
/// returned with the loss as a positive imaginary part.
struct DebyeModel {
  double eps_static = 80.1;
  double eps_infinity = 5.27;
  double tau_s = 9.4e-12;

  ComplexPermittivity at_angular(double omega) const;
};

/// Pure water at 20 degC, valid for 1 GHz <= freq <= 300 GHz.
/// Only the 20 degC constants ship; any other temperature and any frequency
/// outside the band throw Error{OutOfRange}.
ComplexPermittivity debye_water_permittivity(double freq_hz, double temp_c = 20.0);

/// Linear volumetric mix of Debye water with dry leaf matter (2.5, 0.2).
ComplexPermittivity mix_permittivity(double water_fraction, double freq_hz);

}  // namespace leafeon::em
