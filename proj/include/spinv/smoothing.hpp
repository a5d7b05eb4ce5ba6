//Copyright (c) 2026, spinv authors
//
//Licensed under the Apache License, Version 2.0 (the "License");
//you may not use this file except in compliance with the License.
//You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
//Unless required by applicable law or agreed to in writing, software
//distributed under the License is distributed on an "AS IS" BASIS,
//WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//See the License for the specific language governing permissions and
//limitations under the License.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "spinv/grid.hpp"

namespace spinv {

/// exp(-1 / (1 - r^2)) on r < 1, zero outside (not normalized).
double bump_profile(double r);

/// int |y|^j S(y) dy for the base kernel S normalized in `dim` dimensions.
double base_radial_moment(int j, int dim);

/// Composite kernel sum_m a_m S_{zeta_m}, S_zeta(y) = zeta^dim S(zeta y).
struct DeepKernel {
  std::string profile = "bump";
  std::vector<double> scales;    // zeta_0 < zeta_1 < ...
  std::vector<double> weights;   // a_0 ...
  int depth = 0;

  double radius() const { return 1.0 / scales.front(); }
};

/// Solve sum a_m = 1, sum a_m zeta_m^{-j} = 0 (j = 1..depth).
std::vector<double> deep_kernel_coefficients(const std::vector<double>& scales, int depth);

/// Ladder zeta_m = 2^m zeta_0.
DeepKernel make_deep_kernel(double zeta0, int depth);

/// Radial moments |y|^j of the composite kernel for j = 1..max_degree,
/// integrated numerically.
std::vector<double> verify_depth(const DeepKernel& k, int max_degree, int dim = 1);

/// Weights used on a grid: the even moment rows are taken from the sampled
/// kernels so that polynomial reproduction holds for the discrete sum.
std::vector<double> discrete_weights(const DeepKernel& k, const Chart& chart);

/// Discrete convolution with even reflection across the chart boundary.
Field smooth(const Field& f, const DeepKernel& k);

struct KernelSelection {
  DeepKernel kernel;
  std::size_t index = 0;             // position in the caller's candidate list
  std::vector<std::string> report;   // one line per candidate examined
};

/// First candidate, by increasing support radius, whose smoothed kappa keeps
/// |sin| <= root_tol on the locus nodes and keeps the Hessian determinant of
/// cos(kappa) nonzero wherever it was.
KernelSelection select_kernel(const std::vector<DeepKernel>& candidates, const Field& kappa,
                              const std::vector<std::size_t>& locus_nodes,
                              double root_tol = 1e-8);

}  // namespace spinv
