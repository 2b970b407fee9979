#pragma once

namespace dshell {

// Modified spherical Bessel functions, i_0(z) = sinh(z)/z, k_0(z) = exp(-z)/z.
double bessel_i(int l, double z);
double bessel_k(int l, double z);

// First `terms` terms of the power series of i_l.
double bessel_i_series(int l, double z, int terms);

}  // namespace dshell
