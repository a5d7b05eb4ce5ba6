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
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/interpolators/cubic_hermite.hpp>

#include "spinv/grid.hpp"

namespace spinv {

/// sin(x)/x, 1 at the origin; Taylor series below 1e-4.
double sinc(double x);

using ScalarClosure = std::function<double(const std::vector<double>&)>;

/// Metric coefficient g^{ij} = g+ / g-. Zeros of g- mark nondifferentiability
/// (N) loci and zeros of g+ rank deficiency (O) loci.
struct MetricCoefficient {
  ScalarClosure g_plus, g_minus;
  int i = 0, j = 0;
  std::string label;
};

enum class LocusKind { N, O, Coalesced };

std::string to_string(LocusKind k);

struct LocusRoot {
  double x1 = 0;
  LocusKind kind = LocusKind::N;
  bool touch = false;   // even order: the function touches zero without changing sign
};

/// Roots along one ray of the blow-up axis, ascending.
struct RayLoci {
  std::vector<double> transverse;   // coordinates of the other axes
  std::vector<LocusRoot> roots;
};

/// Loci sampled as x1-graphs over the transverse grid: one RayLoci per
/// transverse node, ordered by the flat index of the ray's first node.
struct LocusSet {
  int axis = 0;
  double lo = 0, hi = 0;            // extent of the blow-up axis
  double epsilon = 0;               // tube half-width
  std::vector<RayLoci> rays;
  std::vector<std::string> warnings;

  bool empty() const;
  std::size_t count(LocusKind k) const;
  /// True when x lies within epsilon of a root on its ray.
  bool in_tube(std::size_t ray, double x1) const;
};

/// Ray index of a chart node for the given blow-up axis.
std::size_t ray_of(const Chart& c, int axis, std::size_t node);
std::size_t ray_count(const Chart& c, int axis);

struct ClassifyOptions {
  int axis = 0;
  int samples = 512;
  double root_tol = 1e-10;       // bisection width in x1
  double touch_tol = 1e-12;      // relative height for even-order zeros
  double coalesce_tol = 1e-8;    // N and O roots closer than this merge
  double epsilon = 0;            // 0: a quarter of the smallest root-to-boundary distance
};

LocusSet classify_loci(const MetricCoefficient& c, const Chart& chart, const ClassifyOptions& opt = {});

/// |sinc(g-) sinc(g+)| without domain checks. Throws InputError when both
/// factors vanish at the point.
double standard_amplitude(const MetricCoefficient& c, const std::vector<double>& point);
/// Same, restricted to the locus tube; DomainError outside it.
double standard_amplitude(const MetricCoefficient& c, const std::vector<double>& point,
                          const LocusSet& loci, const Chart& chart);

/// Index 2s where s + 1 is the number of distinct roots of sin(g-) sin(g+)
/// along the x1 traverse through the centre of the transverse box (s >= 0).
int designated_index(const MetricCoefficient& c, const Chart& chart, int axis = 0, int samples = 4096);

/// kappa along one ray: plateaus at +-pi/4 (mod 2 pi) joined through each
/// locus by a monotone cubic Hermite piece with flat ends.
class RayProfile {
 public:
  RayProfile() = default;
  RayProfile(const std::vector<LocusRoot>& roots, double lo, double hi, double epsilon);

  double operator()(double x) const;
  const std::vector<double>& roots() const { return roots_; }
  const std::vector<double>& half_widths() const { return half_; }
  const std::vector<double>& targets() const { return target_; }

 private:
  using Hermite = boost::math::interpolators::cubic_hermite<std::vector<double>>;
  double lo_ = 0, hi_ = 1;
  std::vector<double> roots_, half_, target_, after_;
  std::vector<Hermite> pieces_;
};

struct NormalForm {
  Chart chart;
  int axis = 0;
  Field w, kappa;
  Field amplitude;
  int index = 0;
  LocusSet loci;
  std::vector<RayProfile> profiles;   // per ray, roots snapped to grid nodes
  std::string label;

  /// Grid fields plus a text manifest (loci, index, epsilon).
  void write(const std::string& stem) const;
};

/// Build (w, kappa) from the amplitude field and classified loci. Roots are
/// snapped to the nearest node of their ray so that sin kappa vanishes
/// there exactly.
NormalForm construct_kappa(const Field& amplitude, const LocusSet& loci, const Chart& chart);

/// Sample the amplitude and run construct_kappa in one go.
NormalForm normal_form(const MetricCoefficient& c, const Chart& chart, const ClassifyOptions& opt = {});

using MetricClosure = std::function<Eigen::MatrixXd(const std::vector<double>&)>;

struct LaplaceResidual {
  double sup = 0;
  std::size_t worst_node = 0;
  std::size_t excluded = 0;         // nodes in the locus or boundary band
  std::size_t overflow = 0;         // nonfinite metric data inside the band
  Field values;                     // Delta_g F, zero on excluded nodes
};

/// sup |Delta_g (e^w sin kappa)^lg| off a one-cell band around the loci.
LaplaceResidual laplace_beltrami_residual(const MetricClosure& g, const NormalForm& nf, int lg = 10);

}  // namespace spinv
