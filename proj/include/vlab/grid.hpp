#pragma once

#include <cmath>
#include <stdexcept>

namespace vlab {

// Uniform time grid on [t0, t1]. Uniformity is required by the circulant
// sampler and the FFT convolution.
struct PathGrid {
  double t0 = 0.0;
  double t1 = 1.0;
  double step = 0.01;
  int count = 101;

  static PathGrid make(double t0, double t1, double step) {
    if (step <= 0.0) throw std::invalid_argument("PathGrid: step must be > 0");
    if (t1 <= t0) throw std::invalid_argument("PathGrid: t1 must be > t0");
    const double m = (t1 - t0) / step;
    const long long k = std::llround(m);
    if (std::abs(m - static_cast<double>(k)) > 1e-9 * (std::abs(m) + 1.0))
      throw std::invalid_argument("PathGrid: (t1-t0)/step must be an integer");
    PathGrid g;
    g.t0 = t0;
    g.t1 = t1;
    g.step = step;
    g.count = static_cast<int>(k) + 1;
    return g;
  }

  double time(int i) const { return t0 + step * i; }
};

}  // namespace vlab
