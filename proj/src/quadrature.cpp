#include "cranebench/quadrature.hpp"

#include <stdexcept>

namespace cranebench::numerics {

namespace {
void check_args(std::span<const double> samples, double h) {
  if (samples.size() < 2)
    throw std::invalid_argument("quadrature needs at least 2 samples");
  if (!(h > 0.0)) throw std::invalid_argument("sample spacing must be positive");
}
}  // namespace

double quad_riemann(std::span<const double> samples, double h) {
  check_args(samples, h);
  double sum = 0.0;  // left Riemann sum
  for (size_t i = 0; i + 1 < samples.size(); ++i) sum += samples[i];
  return h * sum;
}

double quad_trapezoid(std::span<const double> samples, double h) {
  check_args(samples, h);
  double sum = 0.5 * (samples.front() + samples.back());
  for (size_t i = 1; i + 1 < samples.size(); ++i) sum += samples[i];
  return h * sum;
}

double quad_simpson(std::span<const double> samples, double h) {
  check_args(samples, h);
  const size_t intervals = samples.size() - 1;
  if (intervals % 2 != 0)
    throw std::invalid_argument(
        "Simpson's rule requires an even interval count (odd sample count)");
  double sum = samples.front() + samples.back();
  for (size_t i = 1; i < intervals; ++i)
    sum += (i % 2 == 1 ? 4.0 : 2.0) * samples[i];
  return h * sum / 3.0;
}

}  // namespace cranebench::numerics
