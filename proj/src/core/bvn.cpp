/*
 * Copyright (c) 2026 benchmap contributors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "core/bvn.hpp"

#include <algorithm>
#include <cmath>

#include "core/mathutil.hpp"

namespace benchmap {

namespace {

constexpr double kTwoPi = 6.283185307179586476925287;

// 20-point Gauss-Legendre nodes/weights on [-1, 1] (positive half; mirrored).
constexpr double kGlX[10] = {
    0.0765265211334973338, 0.2277858511416450780, 0.3737060887154195607,
    0.5108670019508270980, 0.6360536807265150255, 0.7463319064601507926,
    0.8391169718222188234, 0.9122344282513259059, 0.9639719272779137913,
    0.9931285991850949248};
constexpr double kGlW[10] = {
    0.1527533871307258507, 0.1491729864726037467, 0.1420961093183820513,
    0.1316886384491766269, 0.1181945319615184174, 0.1019301198172404351,
    0.0832767415767047487, 0.0626720483341090636, 0.0406014298003869413,
    0.0176140071391521183};

// Integrand of the correlation integral after t = sin(theta):
// exp(-(h^2 + k^2 - 2*h*k*sin(theta)) / (2*cos^2(theta))).
inline double dw_integrand(double theta, double h, double k) {
  const double s = std::sin(theta);
  const double c2 = 1.0 - s * s;
  const double e = (h * h + k * k - 2.0 * h * k * s) / (2.0 * c2);
  return e > 700.0 ? 0.0 : std::exp(-e);
}

}  // namespace

double bvn_cdf(double h, double k, double rho) {
  if (std::isinf(h) || std::isinf(k)) {
    if (h < 0 || k < 0) return 0.0;
    return norm_cdf(std::min(h, k));
  }
  rho = std::clamp(rho, -0.9999, 0.9999);
  const double base = norm_cdf(h) * norm_cdf(k);
  if (rho == 0.0) return base;

  const double upper = std::asin(rho);
  // 8 panels x 20 points; the integrand is analytic on [0, asin(rho)].
  const int panels = 8;
  double integral = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double a = upper * p / panels;
    const double b = upper * (p + 1) / panels;
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double acc = 0.0;
    for (int i = 0; i < 10; ++i) {
      acc += kGlW[i] * (dw_integrand(mid + half * kGlX[i], h, k) +
                        dw_integrand(mid - half * kGlX[i], h, k));
    }
    integral += acc * half;
  }
  double p = base + integral / kTwoPi;
  return std::clamp(p, 0.0, 1.0);
}

double bvn_upper(double h, double k, double rho) { return bvn_cdf(-h, -k, rho); }

double bvn_pdf(double h, double k, double rho) {
  const double om = 1.0 - rho * rho;
  const double q = (h * h - 2.0 * rho * h * k + k * k) / (2.0 * om);
  return std::exp(-q) / (kTwoPi * std::sqrt(om));
}

}  // namespace benchmap
