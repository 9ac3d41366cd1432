#pragma once

#include <span>

namespace cranebench::numerics {

// Composite rules over uniformly spaced samples with spacing h.
// quad_simpson requires an even interval count (odd sample count) and
// throws std::invalid_argument otherwise; there is no silent fallback.
double quad_riemann(std::span<const double> samples, double h);
double quad_trapezoid(std::span<const double> samples, double h);
double quad_simpson(std::span<const double> samples, double h);

}  // namespace cranebench::numerics
