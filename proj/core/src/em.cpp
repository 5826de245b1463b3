#include "leafeon/em.hpp"

#include <cmath>
#include <fmt/format.h>

#include "leafeon/errors.hpp"

namespace leafeon::em {
namespace {

cplx principal_sqrt(cplx z) {
  cplx r = std::sqrt(z);
  if (r.imag() < 0.0) r = -r;
  return r;
}

}  // namespace

double refractive_index_real(const ComplexPermittivity& eps) {
  const double mag = std::hypot(eps.real_part, eps.imag_part);
  return std::sqrt((mag + eps.real_part) / 2.0);
}

cplx refractive_index_complex(const ComplexPermittivity& eps) {
  return principal_sqrt(eps.value());
}

RefractiveIndex refractive_index(const ComplexPermittivity& eps) {
  return {refractive_index_real(eps), refractive_index_complex(eps)};
}

double fresnel_normal(double n) { return (n - 1.0) / (n + 1.0); }

double snell_refract(double n_i, double n_t, double theta_i) {
  const double s = n_i * std::sin(theta_i) / n_t;
  if (s > 1.0) {
    throw Error(ErrorCode::TotalInternalReflection,
                fmt::format("sin(theta_t) = {} exceeds 1", s));
  }
  return std::asin(s);
}

cplx cos_in_medium(cplx n, double theta0) {
  const cplx s = std::sin(theta0) / n;
  return principal_sqrt(1.0 - s * s);
}

cplx fresnel_from_cosines(cplx n1, cplx cos1, cplx n2, cplx cos2, Polarization pol) {
  if (pol == Polarization::TE) {
    return (n1 * cos1 - n2 * cos2) / (n1 * cos1 + n2 * cos2);
  }
  return (n2 * cos1 - n1 * cos2) / (n2 * cos1 + n1 * cos2);
}

cplx fresnel_oblique(cplx n1, cplx n2, double theta_i, Polarization pol) {
  const cplx cos1 = std::cos(theta_i);
  const cplx s = n1 * std::sin(theta_i) / n2;
  const cplx cos2 = principal_sqrt(1.0 - s * s);
  return fresnel_from_cosines(n1, cos1, n2, cos2, pol);
}

ComplexPermittivity DebyeModel::at_angular(double omega) const {
  const double wt = omega * tau_s;
  const double delta = eps_static - eps_infinity;
  const double denom = 1.0 + wt * wt;
  return {eps_infinity + delta / denom, delta * wt / denom};
}

ComplexPermittivity debye_water_permittivity(double freq_hz, double temp_c) {
  if (!(freq_hz >= 1e9 && freq_hz <= 300e9)) {
    throw Error(ErrorCode::OutOfRange,
                fmt::format("frequency {} Hz outside the 1-300 GHz Debye band", freq_hz));
  }
  if (std::abs(temp_c - 20.0) > 1e-9) {
    throw Error(ErrorCode::OutOfRange,
                fmt::format("only 20 degC water constants are available (got {})", temp_c));
  }
  return DebyeModel{}.at_angular(2.0 * kPi * freq_hz);
}

ComplexPermittivity mix_permittivity(double water_fraction, double freq_hz) {
  if (!(water_fraction >= 0.0 && water_fraction <= 1.0)) {
    throw Error(ErrorCode::OutOfRange,
                fmt::format("water fraction {} outside [0, 1]", water_fraction));
  }
  const ComplexPermittivity water = debye_water_permittivity(freq_hz);
  const double w = water_fraction;
  return {w * water.real_part + (1.0 - w) * kDryLeafMatter.real_part,
          w * water.imag_part + (1.0 - w) * kDryLeafMatter.imag_part};
}

}  // namespace leafeon::em
