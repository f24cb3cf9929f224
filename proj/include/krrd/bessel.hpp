#pragma once

namespace krrd {

/// Modified Bessel function of the second kind K_nu(x) for real order nu
/// (K_{-nu} = K_nu) and x > 0. Temme series for x <= 2, Steed continued
/// fraction for x > 2, stable upward recurrence in the order.
double bessel_k(double nu, double x);

}  // namespace krrd
