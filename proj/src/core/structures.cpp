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

#include "core/structures.hpp"

#include <algorithm>
#include <cmath>

#include "core/common.hpp"

namespace benchmap {

const std::vector<std::string>& structure_names() {
  static const std::vector<std::string> names = {"indepfact", "gfact",  "hier2ord",
                                                 "corrfact",  "bifact", "corrbifact"};
  return names;
}

std::string to_string(StructureKind k) { return structure_names()[static_cast<int>(k)]; }

StructureKind structure_from_string(const std::string& name) {
  const auto& names = structure_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<StructureKind>(i);
  }
  fail("E_STRUCTURE", "unknown structure kind '" + name + "'");
}

int StructureSpec::n_factors() const {
  switch (kind) {
    case StructureKind::indepfact:
    case StructureKind::corrfact:
      return n_benches;
    case StructureKind::gfact:
      return 1;
    case StructureKind::hier2ord:
    case StructureKind::bifact:
    case StructureKind::corrbifact:
      return n_benches + 1;
  }
  return 0;
}

int StructureSpec::n_params() const { return layout_of(*this).total; }

void StructureSpec::validate() const {
  require(n_items() >= 2, "E_VALIDATION", "structure needs at least 2 items");
  require(n_benches >= 1, "E_VALIDATION", "structure needs at least 1 benchmark");
  for (int b : bench_of)
    require(b >= 0 && b < n_benches, "E_VALIDATION", "bench index out of range");
  if (kind != StructureKind::gfact) {
    require(n_benches >= 2, "E_VALIDATION",
            to_string(kind) + " requires at least 2 benchmarks");
  }
  for (auto [a, b] : free_resid) {
    require(a >= 0 && b >= 0 && a < n_items() && b < n_items() && a != b, "E_VALIDATION",
            "freed residual pair out of range");
  }
}

int ParamLayout::psi_index(int k1, int k2, int K) const {
  if (k1 > k2) std::swap(k1, k2);
  return off_psi + k1 * K - k1 * (k1 + 1) / 2 + (k2 - k1 - 1);
}

ParamLayout layout_of(const StructureSpec& spec) {
  ParamLayout l;
  l.p = spec.n_items();
  l.off_load = 0;
  int next = l.p;
  if (spec.bifactor_family()) {
    l.off_general = next;
    next += l.p;
  }
  if (spec.has_psi()) {
    l.off_psi = next;
    l.n_psi = spec.n_benches * (spec.n_benches - 1) / 2;
    next += l.n_psi;
  }
  if (spec.kind == StructureKind::hier2ord) {
    l.off_gamma = next;
    l.n_gamma = spec.n_benches;
    next += l.n_gamma;
  }
  if (!spec.free_resid.empty()) {
    l.off_resid = next;
    l.n_resid = static_cast<int>(spec.free_resid.size());
    next += l.n_resid;
  }
  l.total = next;
  return l;
}

Eigen::VectorXd initial_params(const StructureSpec& spec) {
  const ParamLayout l = layout_of(spec);
  Eigen::VectorXd params = Eigen::VectorXd::Zero(l.total);
  params.segment(l.off_load, l.p).setConstant(0.5);
  if (l.off_general >= 0) params.segment(l.off_general, l.p).setConstant(0.5);
  if (l.n_psi > 0) params.segment(l.off_psi, l.n_psi).setConstant(0.3);
  if (l.n_gamma > 0) params.segment(l.off_gamma, l.n_gamma).setConstant(0.5);
  // freed residual covariances start at 0
  return params;
}

double communality(const StructureSpec& spec, const Eigen::VectorXd& params, int item) {
  const ParamLayout l = layout_of(spec);
  double c = params(l.off_load + item) * params(l.off_load + item);
  if (l.off_general >= 0) c += params(l.off_general + item) * params(l.off_general + item);
  return c;
}

bool project_params(const StructureSpec& spec, Eigen::VectorXd& params, double theta_floor) {
  const ParamLayout l = layout_of(spec);
  for (int i = 0; i < l.n_psi; ++i) {
    double& v = params(l.off_psi + i);
    v = std::clamp(v, -0.99, 0.99);
  }
  for (int i = 0; i < l.n_gamma; ++i) {
    double& v = params(l.off_gamma + i);
    v = std::clamp(v, -0.999, 0.999);
  }
  for (int i = 0; i < l.n_resid; ++i) {
    double& v = params(l.off_resid + i);
    v = std::clamp(v, -0.99, 0.99);
  }
  bool heywood = false;
  const double cap = 1.0 - theta_floor;
  for (int j = 0; j < l.p; ++j) {
    const double c = communality(spec, params, j);
    if (c > cap) {
      const double scale = std::sqrt(cap / c);
      params(l.off_load + j) *= scale;
      if (l.off_general >= 0) params(l.off_general + j) *= scale;
      heywood = true;
    }
  }
  return heywood;
}

double implied_sigma_entry(const StructureSpec& spec, const Eigen::VectorXd& params, int a,
                           int b) {
  const ParamLayout l = layout_of(spec);
  const int ka = spec.bench_of[a], kb = spec.bench_of[b];
  const double la = params(l.off_load + a), lb = params(l.off_load + b);
  double s = 0.0;
  switch (spec.kind) {
    case StructureKind::gfact:
      s = la * lb;
      break;
    case StructureKind::indepfact:
      s = (ka == kb) ? la * lb : 0.0;
      break;
    case StructureKind::corrfact:
      s = (ka == kb) ? la * lb : la * lb * params(l.psi_index(ka, kb, spec.n_benches));
      break;
    case StructureKind::hier2ord:
      s = (ka == kb) ? la * lb
                     : la * lb * params(l.off_gamma + ka) * params(l.off_gamma + kb);
      break;
    case StructureKind::bifact: {
      const double ga = params(l.off_general + a), gb = params(l.off_general + b);
      s = ga * gb + ((ka == kb) ? la * lb : 0.0);
      break;
    }
    case StructureKind::corrbifact: {
      const double ga = params(l.off_general + a), gb = params(l.off_general + b);
      s = ga * gb + ((ka == kb) ? la * lb
                                : la * lb * params(l.psi_index(ka, kb, spec.n_benches)));
      break;
    }
  }
  for (int i = 0; i < l.n_resid; ++i) {
    const auto [ra, rb] = spec.free_resid[i];
    if ((ra == a && rb == b) || (ra == b && rb == a)) s += params(l.off_resid + i);
  }
  return s;
}

Eigen::MatrixXd implied_sigma(const StructureSpec& spec, const Eigen::VectorXd& params) {
  const int p = spec.n_items();
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(p, p);
  for (int a = 0; a < p; ++a) {
    for (int b = a + 1; b < p; ++b) {
      const double v = implied_sigma_entry(spec, params, a, b);
      sigma(a, b) = sigma(b, a) = v;
    }
  }
  return sigma;
}

void pair_derivatives(const StructureSpec& spec, const Eigen::VectorXd& params, int a, int b,
                      std::vector<std::pair<int, double>>& out) {
  out.clear();
  const ParamLayout l = layout_of(spec);
  const int ka = spec.bench_of[a], kb = spec.bench_of[b];
  const double la = params(l.off_load + a), lb = params(l.off_load + b);
  switch (spec.kind) {
    case StructureKind::gfact:
      out.emplace_back(l.off_load + a, lb);
      out.emplace_back(l.off_load + b, la);
      break;
    case StructureKind::indepfact:
      if (ka == kb) {
        out.emplace_back(l.off_load + a, lb);
        out.emplace_back(l.off_load + b, la);
      }
      break;
    case StructureKind::corrfact:
      if (ka == kb) {
        out.emplace_back(l.off_load + a, lb);
        out.emplace_back(l.off_load + b, la);
      } else {
        const int pi = l.psi_index(ka, kb, spec.n_benches);
        const double psi = params(pi);
        out.emplace_back(l.off_load + a, lb * psi);
        out.emplace_back(l.off_load + b, la * psi);
        out.emplace_back(pi, la * lb);
      }
      break;
    case StructureKind::hier2ord:
      if (ka == kb) {
        out.emplace_back(l.off_load + a, lb);
        out.emplace_back(l.off_load + b, la);
      } else {
        const double gka = params(l.off_gamma + ka), gkb = params(l.off_gamma + kb);
        out.emplace_back(l.off_load + a, lb * gka * gkb);
        out.emplace_back(l.off_load + b, la * gka * gkb);
        out.emplace_back(l.off_gamma + ka, la * lb * gkb);
        out.emplace_back(l.off_gamma + kb, la * lb * gka);
      }
      break;
    case StructureKind::bifact: {
      const double ga = params(l.off_general + a), gb = params(l.off_general + b);
      out.emplace_back(l.off_general + a, gb);
      out.emplace_back(l.off_general + b, ga);
      if (ka == kb) {
        out.emplace_back(l.off_load + a, lb);
        out.emplace_back(l.off_load + b, la);
      }
      break;
    }
    case StructureKind::corrbifact: {
      const double ga = params(l.off_general + a), gb = params(l.off_general + b);
      out.emplace_back(l.off_general + a, gb);
      out.emplace_back(l.off_general + b, ga);
      if (ka == kb) {
        out.emplace_back(l.off_load + a, lb);
        out.emplace_back(l.off_load + b, la);
      } else {
        const int pi = l.psi_index(ka, kb, spec.n_benches);
        const double psi = params(pi);
        out.emplace_back(l.off_load + a, lb * psi);
        out.emplace_back(l.off_load + b, la * psi);
        out.emplace_back(pi, la * lb);
      }
      break;
    }
  }
  for (int i = 0; i < l.n_resid; ++i) {
    const auto [ra, rb] = spec.free_resid[i];
    if ((ra == a && rb == b) || (ra == b && rb == a)) out.emplace_back(l.off_resid + i, 1.0);
  }
}

void factor_model(const StructureSpec& spec, const Eigen::VectorXd& params,
                  Eigen::MatrixXd& lambda, Eigen::MatrixXd& phi) {
  const ParamLayout l = layout_of(spec);
  const int p = spec.n_items();
  const int m = spec.n_factors();
  const int K = spec.n_benches;
  lambda = Eigen::MatrixXd::Zero(p, m);
  phi = Eigen::MatrixXd::Identity(m, m);
  switch (spec.kind) {
    case StructureKind::gfact:
      lambda.col(0) = params.segment(l.off_load, p);
      break;
    case StructureKind::indepfact:
      for (int j = 0; j < p; ++j) lambda(j, spec.bench_of[j]) = params(l.off_load + j);
      break;
    case StructureKind::corrfact:
      for (int j = 0; j < p; ++j) lambda(j, spec.bench_of[j]) = params(l.off_load + j);
      for (int k1 = 0; k1 < K; ++k1)
        for (int k2 = k1 + 1; k2 < K; ++k2)
          phi(k1, k2) = phi(k2, k1) = params(l.psi_index(k1, k2, K));
      break;
    case StructureKind::hier2ord: {
      for (int j = 0; j < p; ++j) lambda(j, 1 + spec.bench_of[j]) = params(l.off_load + j);
      const auto gamma = params.segment(l.off_gamma, K);
      for (int k = 0; k < K; ++k) phi(0, 1 + k) = phi(1 + k, 0) = gamma(k);
      for (int k1 = 0; k1 < K; ++k1)
        for (int k2 = k1 + 1; k2 < K; ++k2)
          phi(1 + k1, 1 + k2) = phi(1 + k2, 1 + k1) = gamma(k1) * gamma(k2);
      break;
    }
    case StructureKind::bifact:
    case StructureKind::corrbifact:
      lambda.col(0) = params.segment(l.off_general, p);
      for (int j = 0; j < p; ++j) lambda(j, 1 + spec.bench_of[j]) = params(l.off_load + j);
      if (spec.kind == StructureKind::corrbifact) {
        for (int k1 = 0; k1 < K; ++k1)
          for (int k2 = k1 + 1; k2 < K; ++k2)
            phi(1 + k1, 1 + k2) = phi(1 + k2, 1 + k1) = params(l.psi_index(k1, k2, K));
      }
      break;
  }
}

void canonicalize_signs(const StructureSpec& spec, Eigen::VectorXd& params) {
  const ParamLayout l = layout_of(spec);
  const int p = spec.n_items();
  const int K = spec.n_benches;
  auto flip_psi_row = [&](int k) {
    for (int k2 = 0; k2 < K; ++k2) {
      if (k2 == k) continue;
      params(l.psi_index(std::min(k, k2), std::max(k, k2), K)) *= -1.0;
    }
  };
  if (spec.kind == StructureKind::gfact) {
    if (params.segment(l.off_load, p).mean() < 0) params.segment(l.off_load, p) *= -1.0;
    return;
  }
  if (l.off_general >= 0 && params.segment(l.off_general, p).mean() < 0)
    params.segment(l.off_general, p) *= -1.0;
  for (int k = 0; k < K; ++k) {
    double mean = 0.0;
    int count = 0;
    for (int j = 0; j < p; ++j) {
      if (spec.bench_of[j] == k) {
        mean += params(l.off_load + j);
        ++count;
      }
    }
    if (count == 0 || mean >= 0.0) continue;
    for (int j = 0; j < p; ++j)
      if (spec.bench_of[j] == k) params(l.off_load + j) *= -1.0;
    if (l.n_psi > 0) flip_psi_row(k);
    if (l.n_gamma > 0) params(l.off_gamma + k) *= -1.0;
  }
  if (l.n_gamma > 0 && params.segment(l.off_gamma, K).mean() < 0)
    params.segment(l.off_gamma, K) *= -1.0;
}

}  // namespace benchmap
