#include "dshell/special.hpp"

#include "dshell/errors.hpp"

#include <cmath>

namespace dshell {

double bessel_i_series(int l, double z, int terms)
{
    // z^l sum_n (z^2/2)^n / (n! (2l+2n+1)!!)
    double dfact = 1.0;
    for (int j = 1; j <= 2 * l + 1; j += 2) dfact *= j;
    double term = std::pow(z, l) / dfact;
    double sum = term;
    const double h = 0.5 * z * z;
    for (int n = 1; n < terms; ++n) {
        term *= h / (n * (2.0 * l + 2.0 * n + 1.0));
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return sum;
}

double bessel_i(int l, double z)
{
    require(l >= 0 && z >= 0.0, "bessel_i: need l >= 0, z >= 0");
    if (z < l + 2.0) return bessel_i_series(l, z, 200);
    double i0 = std::sinh(z) / z;
    if (l == 0) return i0;
    double i1 = (z * std::cosh(z) - std::sinh(z)) / (z * z);
    for (int n = 1; n < l; ++n) {
        const double i2 = i0 - (2.0 * n + 1.0) / z * i1;
        i0 = i1;
        i1 = i2;
    }
    return i1;
}

double bessel_k(int l, double z)
{
    require(l >= 0 && z > 0.0, "bessel_k: need l >= 0, z > 0");
    double k0 = std::exp(-z) / z;
    if (l == 0) return k0;
    double k1 = std::exp(-z) * (1.0 / z + 1.0 / (z * z));
    for (int n = 1; n < l; ++n) {
        const double k2 = k0 + (2.0 * n + 1.0) / z * k1;
        k0 = k1;
        k1 = k2;
    }
    return k1;
}

}  // namespace dshell
