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

#include <array>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spinv/courant.hpp"
#include "spinv/hill.hpp"
#include "spinv/normal_form.hpp"
#include "spinv/period_matrix.hpp"

namespace spinv {

struct KerrParams {
  double m = 1.0;
  double a = 0.5;
  double epsilon = 0.05;   // tube half-width

  double r_plus() const;
  double r_minus() const;
  /// 0 < a < m, 0 < epsilon < (r+ - r-) / 4; throws InputError.
  void validate() const;
};

/// Nonnegative root of r^4 - (rho^2 - a^2) r^2 - a^2 z^2 = 0, evaluated
/// without cancellation inside the disc rho < a.
double kerr_r(double x, double y, double z, double a);

/// |r^4 - (rho^2 - a^2) r^2 - a^2 z^2| / (r^2 + a^2), the implicit relation
/// multiplied through by r^2 and normalized.
double kerr_r_residual(double x, double y, double z, double a, double r);

struct KerrMetric {
  Eigen::Matrix4d g, eta;   // coordinates (t, x, y, z)
  Eigen::Vector4d l;        // covector l_i
  double r = 0, f = 0;      // f = 2 m r^3 / (r^4 + a^2 z^2)
  double null_eta = 0;      // |eta^{ij} l_i l_j| / |l|^2
  double null_g = 0;        // |g_ij l^i l^j| / |l|^2 with l^i = eta^{ij} l_j
};

/// Kerr-Schild metric. Throws DomainError where r = 0 (the ring and the disc
/// it bounds), where the form is singular.
KerrMetric kerr_metric(double t, double x, double y, double z, const KerrParams& p);

// Chart axes are ordered (t, x, z, y) so that the Darboux pairing
// x_i <-> x_{i+2} realizes omega = dt ^ dz + dx ^ dy.
inline constexpr int kAxisT = 0, kAxisX = 1, kAxisZ = 2, kAxisY = 3;

/// Covariant metric at a chart point (t, x, z, y), permuted to chart order.
Eigen::MatrixXd kerr_metric_chart(const std::vector<double>& point, const KerrParams& p);

struct KerrSurface {
  std::string name;        // U0 .. U5
  std::string equation;
  /// Scalar whose sign change (or touching zero for U0) along z marks the surface.
  std::function<double(double x, double y, double z)> level;
};

struct KerrLoci {
  double r_plus = 0, r_minus = 0;
  std::vector<KerrSurface> surfaces;   // U0, U1, U2, U3, U4, U5

  const KerrSurface& surface(const std::string& name) const;
  /// Sign changes of the level along z in (z_lo, z_hi).
  std::vector<double> z_crossings(const std::string& name, double x, double y, double z_lo, double z_hi,
                                  int samples = 2048) const;
};

KerrLoci kerr_loci(const KerrParams& p);

/// The open box 0 < t < 1, 0 < x, y < sqrt(2) a / 2 + eps, z^2 < (r+ + eps)^2,
/// axes ordered (t, x, z, y), sampled at cell centres with n cells per axis.
/// Rays near the ring meet the inner ergosurface close to the disc, so z
/// needs far more cells than the transverse axes; the default keeps every
/// root pair at least four cells apart for m = 1, a = 1/2.
Chart representative_set(const KerrParams& p, const std::vector<int>& n = {4, 5, 2304, 5});

struct KerrCoefficientEntry {
  int i = 0, j = 0;
  std::string label;                    // "g00" ...
  MetricCoefficient coeff;              // closures on chart points (t, x, z, y)
  std::string n_locus = "U0";
  std::vector<std::string> o_loci;      // empty when U^O is empty
  int designated_index = 0;
};

/// Designated eigenvalue indices of the ten independent coefficients, in
/// the order 00 01 02 03 11 12 13 22 23 33.
const std::array<int, 10>& kerr_index_table();

/// The ten coefficient splits g+ / g- with their locus assignments.
std::vector<KerrCoefficientEntry> kerr_coefficients(const KerrParams& p);

struct KerrNormalForm {
  KerrCoefficientEntry entry;
  NormalForm nf;
  int root_count_index = 0;   // generic root-count rule, for comparison only
};

/// Normal forms on the chart with z as blow-up axis. Throws NumericError if
/// an entry's designated index disagrees with the table.
std::vector<KerrNormalForm> kerr_normal_forms(const KerrParams& p, const Chart& chart, int samples = 512);

struct KerrInvariantOptions {
  int truncation = 2;           // m
  int z_nodes = 1024;           // ray grid for the normal form; even, so z = 0 is not a node
  int spectrum_gaps = 6;        // gaps computed before truncation
  double t = 0.5;
  std::vector<std::string> coefficients;   // labels; empty means all ten
  FitOptions fit = default_fit();
  HillOptions spectrum = HillOptions::standard();
  QuadratureOptions quadrature;

  static FitOptions default_fit();
};

/// Truncated period matrix per coefficient and transverse point (x, y).
std::vector<InvariantEntry> kerr_invariants(const KerrParams& p,
                                            const std::vector<std::array<double, 2>>& points,
                                            const KerrInvariantOptions& opt = {});

struct KerrPreframe {
  Preframe frame;
  Preframe complement;          // bundle map of the frame
  PreframeCheck check;          // over the whole chart
  double min_off_tubes = 0;     // smallest singular value away from the locus tubes
  double min_off_tubes_relative = 0;   // the same relative to the largest
  bool ok = false;              // min_off_tubes above the tolerance
};

KerrPreframe build_kerr_preframe(const KerrParams& p, const Chart& chart,
                                 const std::vector<KerrNormalForm>& forms, double tolerance = 1e-8);

}  // namespace spinv
