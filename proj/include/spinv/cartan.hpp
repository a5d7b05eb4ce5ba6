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

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spinv/grid.hpp"

namespace spinv {

using Point = std::vector<double>;
/// Scalar field indexed by a coefficient pair (i, j), 0-based, i, j < 2k.
using PairField = std::function<double(int i, int j, const Point& x)>;

/// Prolonged weights and phases on the doubled chart (dimension 4k).
struct CoframeSpec {
  int k = 1;
  PairField w, kappa;
};

/// Base fields on a 2k-chart extended to the doubled chart, constant along
/// the fibers x_{2k+1} .. x_{4k}.
CoframeSpec prolong(int k, const PairField& w_base, const PairField& kappa_base);

/// Doubled chart: the base chart times the fiber box [-c, c]^{2k}.
Chart fiber_chart(const Chart& base, double c = 3.14159265358979323846, int samples = 5);

/// The 4k coframe Psi = A dx. Rows i < k pair dx_j with dx_{2k+j} for j < k
/// as (cos, sin); rows k <= i < 2k use j in [k, 2k) as (sin, -cos); row
/// i + 2k is the complement, obtained by sin -> cos, cos -> -sin.
/// Derivatives are central differences with the chart steps.
class LiftedCoframe {
 public:
  LiftedCoframe() = default;
  LiftedCoframe(CoframeSpec spec, Chart chart);

  int k() const { return spec_.k; }
  int n() const { return 4 * spec_.k; }
  const Chart& chart() const { return chart_; }
  const CoframeSpec& spec() const { return spec_; }

  Eigen::MatrixXd A(const Point& x) const;
  /// [b] with [b][Psi] = [dx], i.e. dx_l = sum_u b(l, u) Psi_u.
  Eigen::MatrixXd b(const Point& x) const;
  /// d/dx_l of A from central differences of w and kappa (chain rule).
  Eigen::MatrixXd dA(const Point& x, int l) const;
  /// Same, but differencing A itself.
  Eigen::MatrixXd dA_direct(const Point& x, int l) const;
  /// True when the stencil around x stays inside the chart.
  bool interior(const Point& x) const;

  /// Coframe with kappa_ij shifted by the rotation beta_i(x) of block
  /// (Psi_i, Psi_{i+2k}): Psi' = R(beta) Psi.
  LiftedCoframe rotated(const std::function<double(int i, const Point&)>& beta) const;

 private:
  CoframeSpec spec_;
  Chart chart_;
};

/// [b] over the chart nodes (dense solve per node) with the smallest
/// |det| on the interior; throws NumericError if [b] is singular there.
struct CoframeMatrices {
  std::vector<Eigen::MatrixXd> b;
  double min_abs_det = 0;
};
CoframeMatrices lift_coframe(const LiftedCoframe& cf, int band = 1);

/// Lexicographic index of the pair u < v among n(n-1)/2 pairs.
int pair_index(int u, int v, int n);
std::pair<int, int> pair_of(int p, int n);

/// Second compound matrix: C((u,v),(i,j)) = M(u,i) M(v,j) - M(u,j) M(v,i).
Eigen::MatrixXd compound_minors(const Eigen::MatrixXd& M);

/// dPsi_i = sum_{m<s} gamma^i_{ms} Psi_m ^ Psi_s at a point.
class TorsionTensor {
 public:
  TorsionTensor() = default;
  TorsionTensor(int k, Eigen::MatrixXd values);

  int n() const { return int(g_.rows()); }
  /// Antisymmetric in (m, s); zero on the diagonal.
  double operator()(int i, int m, int s) const;
  const Eigen::MatrixXd& matrix() const { return g_; }   // n x pairs
  /// Psi_m ^ Psi_{m+2k}: absorbed into the Maurer-Cartan form.
  bool absorbed(int m, int s) const;
  /// Retained coefficients ordered by (i, m, s).
  std::vector<double> retained() const;
  std::vector<std::string> retained_labels() const;

 private:
  int k_ = 1;
  Eigen::MatrixXd g_;
};

/// Four-term sum with derivatives of w, kappa by central differences.
/// Throws DomainError when the stencil leaves the chart.
TorsionTensor torsion(const LiftedCoframe& cf, const Point& x);
/// Same from differences of A; used where A is not of (w, kappa) form.
TorsionTensor torsion_direct(const LiftedCoframe& cf, const Point& x);

/// Cyclic sum d(dPsi) at a point: max over i and l < j < p of
/// |d_p F_lj + d_l F_jp + d_j F_pl| with F^i = gamma^i C2(A).
double closure_residual(const LiftedCoframe& cf, const Point& x);

struct GroupActionResult {
  double residual = 0;      // max |gamma' - R gamma C2(R^-1) - tau|
  double translation = 0;   // max |tau|
  double change = 0;        // max |gamma' - gamma|
  Eigen::MatrixXd tau;      // Maurer-Cartan translation, n x pairs
};

/// beta_i(x) = beta[i] (1 + sin(sum_l x_l)) on block i. The rotated torsion
/// must equal the covariantly rotated torsion plus a translation supported
/// on monomials containing the conjugate of the rotated row.
GroupActionResult group_action_check(const LiftedCoframe& cf, const std::vector<double>& beta,
                                     const std::vector<Point>& points);

struct InvariantSet {
  int depth = 0;
  std::vector<std::string> labels;   // "g^i_ms" then "|l" per covariant derivative
  std::vector<double> values;
  std::vector<int> level;            // derivative depth of each entry
};

/// Retained torsion and covariant derivatives f_{|l} = sum_u d_u f b(u, l)
/// up to the given depth, in lexicographic order of index tuples.
InvariantSet invariant_set(const LiftedCoframe& cf, int depth, const Point& x);

struct RankOrder {
  std::vector<int> ranks;   // r_0 .. r_{max_depth}
  int order = -1;           // smallest j with r_j = r_{j+1}; -1 if not reached
  bool regular = true;      // ranks agree at every sample point
  std::string diagnostic;
};

/// Numerical rank of the differentials of F_s with relative SVD threshold.
RankOrder rank_order(const LiftedCoframe& cf, const std::vector<Point>& points, int max_depth = 2,
                     double threshold = 1e-7);

struct EquivalenceResult {
  bool equivalent = false;
  bool indeterminate = false;
  std::string reason;
  int rank = 0, order = 0;
  double max_deviation = 0;
  std::vector<int> chosen;                      // indices into F_order
  std::vector<std::pair<Point, Point>> sigma;   // y -> sigma(y)
};

struct EquivalenceOptions {
  int max_depth = 2;
  double threshold = 1e-7;
  int newton_iterations = 30;
};

/// Compare F_{j+1} of two coframes through sigma = h_V^-1 o h_U built from
/// the first independent invariants in lexicographic order. samples1 fix
/// rank and order of cf1 and seed the inversion; sigma is sought for every
/// point of samples2.
EquivalenceResult e_structure_equivalent(const LiftedCoframe& cf1, const std::vector<Point>& samples1,
                                         const LiftedCoframe& cf2, const std::vector<Point>& samples2, double tol,
                                         const EquivalenceOptions& opt = {});

/// Rank of the first and second derivative family of the fields at x.
struct FreeFieldReport {
  int rank = 0, maximal = 0;
  bool free = false;
  bool perturbed = false;
};
FreeFieldReport free_field_check(const CoframeSpec& spec, const Chart& chart, const Point& x);
/// Adds a 1e-6 amplitude polynomial to w and kappa when the check fails.
CoframeSpec make_free(const CoframeSpec& spec, const Chart& chart, const Point& x, FreeFieldReport* report = nullptr);

}  // namespace spinv
