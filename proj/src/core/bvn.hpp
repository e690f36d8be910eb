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

#pragma once

namespace benchmap {

/// P(X < h, Y < k) for standard bivariate normal with correlation rho.
/// Drezner-Wesolowsky single integral, composite Gauss-Legendre after the
/// t = sin(theta) substitution; absolute accuracy well below 1e-12 for
/// |rho| <= 0.999.
double bvn_cdf(double h, double k, double rho);

/// P(X > h, Y > k).
double bvn_upper(double h, double k, double rho);

/// Standard bivariate normal density at (h, k).
double bvn_pdf(double h, double k, double rho);

}  // namespace benchmap
