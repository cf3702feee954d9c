// Airy, Pearcey and Bessel J0/J1 kernels. No external special-function library.
#pragma once

#include "canop/core.hpp"

namespace canop {

enum class PearceySign { Plus, Minus };

inline constexpr double kAiryMin = -60.0;
inline constexpr double kAiryMax = 20.0;
inline constexpr double kPearceyBox = 40.0;
inline constexpr double kBesselMax = 1e4;

/// Ai(y) for y in [-60, 20]; RangeError outside.
double airy_ai(double y);

/// (1/2pi) * integral over the real line of exp(i(y t + v t^2 +- t^4)) dt,
/// for |v|, |y| <= 40. v multiplies t^2 and y multiplies t.
Complex pearcey(double v, double y, PearceySign sign);

/// J_order(z) for order 0 or 1 and z in [0, 1e4].
double bessel_j(int order, double z);

/// Y_order(z) for order 0 or 1 and z in (0, 1e4].
double bessel_y(int order, double z);

inline double bessel_j0(double z) { return bessel_j(0, z); }
inline double bessel_j1(double z) { return bessel_j(1, z); }

}  // namespace canop
