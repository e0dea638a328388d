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
#ifndef GATEKIT_KERNELS_HPP_
#define GATEKIT_KERNELS_HPP_

#include <optional>
#include <span>

#include "gatekit/dataset.hpp"

namespace gatekit {

enum class KernelKind { epanechnikov, gaussian };

// K(t): epanechnikov 3(1-t^2)/4 on |t|<=1, gaussian exp(-t^2/2)/sqrt(2*pi).
double kernel_eval(KernelKind kind, double t);

struct Bandwidth {
  double h = 0.0;  // positive, finite
};

Bandwidth make_bandwidth(double h);

struct BandwidthMethod {
  enum class Kind { rule_of_thumb, fixed };
  Kind kind = Kind::rule_of_thumb;
  double fixed_h = 0.0;

  static BandwidthMethod rule_of_thumb() { return {Kind::rule_of_thumb, 0.0}; }
  static BandwidthMethod fixed(double h) { return {Kind::fixed, h}; }
};

// rule_of_thumb: h = 1.06 * min(sd, IQR/1.349) * n^(-1/5) computed on the
// regressor sample zs (IQR via type-7 quantiles). Zero spread is an error.
Bandwidth select_bandwidth(std::span<const double> zs, std::span<const double> vs,
                           const BandwidthMethod& method);

// Nadaraya-Watson mean of vs at z0. Returns nullopt (and bumps the
// empty-window diagnostic) when the kernel mass at z0 is exactly zero.
std::optional<double> local_constant_1d(std::span<const double> zs,
                                        std::span<const double> vs, double z0,
                                        Bandwidth h, KernelKind kind,
                                        Diagnostics* diag = nullptr);

// Product-kernel analogue on two regressors.
std::optional<double> local_constant_2d(std::span<const double> r1,
                                        std::span<const double> r2,
                                        std::span<const double> vs, double e1,
                                        double e2, Bandwidth h1, Bandwidth h2,
                                        KernelKind kind, Diagnostics* diag = nullptr);

// Mean of vs over {i : zs[i] == z0} (exact equality). EmptyCellError when no
// unit sits in the cell.
double discrete_conditional_mean(std::span<const double> zs,
                                 std::span<const double> vs, double z0);

}  // namespace gatekit

#endif  // GATEKIT_KERNELS_HPP_
