#pragma once

namespace qsa {

/// Complementary error function, absolute error below 1e-13 for |z| <= 30.
/// erfc(-z) = 2 - erfc(z) holds by construction.
double erfc(double z);

}  // namespace qsa
