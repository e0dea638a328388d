/*
 * Copyright 2026 The gatekit Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "gatekit/kernels.hpp"

#include <cmath>
#include <numbers>

#include "gatekit/errors.hpp"
#include "gatekit/stats.hpp"

namespace gatekit {

double kernel_eval(KernelKind kind, double t) {
  switch (kind) {
    case KernelKind::epanechnikov:
      return std::abs(t) <= 1.0 ? 0.75 * (1.0 - t * t) : 0.0;
    case KernelKind::gaussian:
      return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi);
  }
  return 0.0;
}

Bandwidth make_bandwidth(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw BandwidthError("bandwidth must be positive and finite");
  }
  return Bandwidth{h};
}

Bandwidth select_bandwidth(std::span<const double> zs, std::span<const double> vs,
                           const BandwidthMethod& method) {
  if (zs.size() != vs.size()) {
    throw DimensionError("regressor and response lengths differ");
  }
  if (method.kind == BandwidthMethod::Kind::fixed) {
    return make_bandwidth(method.fixed_h);
  }
  if (zs.size() < 2) throw BandwidthError("need at least 2 points for rule_of_thumb");
  const double sd = sample_sd(zs);
  const double iqr = quantile_type7(zs, 0.75) - quantile_type7(zs, 0.25);
  const double spread = std::min(sd, iqr / 1.349);
  if (!(spread > 0.0)) throw BandwidthError("regressor sample has zero spread");
  const double n = static_cast<double>(zs.size());
  return make_bandwidth(1.06 * spread * std::pow(n, -0.2));
}

std::optional<double> local_constant_1d(std::span<const double> zs,
                                        std::span<const double> vs, double z0,
                                        Bandwidth h, KernelKind kind,
                                        Diagnostics* diag) {
  if (zs.size() != vs.size()) {
    throw DimensionError("regressor and response lengths differ");
  }
  double sw = 0.0, swv = 0.0;
  for (std::size_t i = 0; i < zs.size(); ++i) {
    const double w = kernel_eval(kind, (zs[i] - z0) / h.h);
    sw += w;
    swv += w * vs[i];
  }
  if (sw == 0.0) {
    if (diag) ++diag->empty_windows;
    return std::nullopt;
  }
  return swv / sw;
}

std::optional<double> local_constant_2d(std::span<const double> r1,
                                        std::span<const double> r2,
                                        std::span<const double> vs, double e1,
                                        double e2, Bandwidth h1, Bandwidth h2,
                                        KernelKind kind, Diagnostics* diag) {
  if (r1.size() != r2.size() || r1.size() != vs.size()) {
    throw DimensionError("regressor and response lengths differ");
  }
  double sw = 0.0, swv = 0.0;
  for (std::size_t i = 0; i < r1.size(); ++i) {
    const double w =
        kernel_eval(kind, (r1[i] - e1) / h1.h) * kernel_eval(kind, (r2[i] - e2) / h2.h);
    sw += w;
    swv += w * vs[i];
  }
  if (sw == 0.0) {
    if (diag) ++diag->empty_windows;
    return std::nullopt;
  }
  return swv / sw;
}

double discrete_conditional_mean(std::span<const double> zs,
                                 std::span<const double> vs, double z0) {
  if (zs.size() != vs.size()) {
    throw DimensionError("regressor and response lengths differ");
  }
  double s = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < zs.size(); ++i) {
    if (zs[i] == z0) {
      s += vs[i];
      ++count;
    }
  }
  if (count == 0) {
    throw EmptyCellError("no unit with z == " + std::to_string(z0));
  }
  return s / static_cast<double>(count);
}

}  // namespace gatekit
