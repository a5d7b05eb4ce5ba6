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

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spinv/hill.hpp"

namespace spinv {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;

/// Real hyperelliptic curve y^2 = -prod (lambda - e_i) with real branch points.
///
/// Cycle convention: A_i encircles (e_{2i-1}, e_{2i}); B_i encircles
/// [e_0, e_{2i-1}], so A_i . B_j = delta_ij. Both odd (2g+1) and even
/// (2g+2) branch point counts are accepted.
struct CurveModel {
  std::vector<double> branch;   // strictly increasing
  int genus = 0;
  int requested = 0;            // truncation index m asked for
  std::vector<int> source_gaps; // spectrum gap indices retained, ascending

  static CurveModel from_branch_points(std::vector<double> e);
  bool degenerate() const { return genus == 0; }
  /// -prod(lambda - e_i); y is real where this is positive.
  double y_squared(double lambda) const;
};

struct PeriodMatrix {
  CMatrix R;                 // genus x genus, or requested x requested zeros when degenerate
  int truncation = 0;        // m
  int genus = 0;
  bool degenerate = false;
  std::string fingerprint;   // branch points at 17 digits
  bool sheet_flipped = false;
};

struct QuadratureOptions {
  int nodes = 128;           // Chebyshev-Gauss nodes per interval
  double tolerance = 1e-12;  // relative change allowed on node doubling
  int max_nodes = 4096;      // beyond this, fall back to tanh-sinh in the angle
};

/// Keep the m widest open gaps. Gaps flagged double or narrower than
/// min_width are skipped; fewer than m open gaps gives a lower genus.
CurveModel truncate_curve(const SpectrumBundle& spec, int m, double min_width = 0.0);

/// Cycle integral of p(lambda) dlambda / y over A_i (i = 1..g) or B_i.
/// p is given by ascending coefficients.
cplx a_period(const CurveModel& c, int i, const std::vector<cplx>& poly,
              const QuadratureOptions& q = {});
cplx b_period(const CurveModel& c, int i, const std::vector<cplx>& poly,
              const QuadratureOptions& q = {});

/// A-periods of lambda^{l-1} dlambda / y for every A-cycle, as a vector per monomial.
std::vector<cplx> a_periods(const CurveModel& c, const std::vector<cplx>& poly,
                            const QuadratureOptions& q = {});

struct NormalizedBasis {
  CMatrix coeff;            // coeff(j, l): phi_j = sum_l coeff(j, l) lambda^l dlambda / y
  double condition = 1.0;   // of the A-period matrix
  bool ill_conditioned = false;
};

NormalizedBasis normalized_basis(const CurveModel& c, const QuadratureOptions& q = {});

/// Riemann period matrix R_ij = oint_{B_j} phi_i, sheet sign fixed so Im R > 0.
PeriodMatrix b_periods(const CurveModel& c, const NormalizedBasis& basis,
                       const QuadratureOptions& q = {});
PeriodMatrix period_matrix(const CurveModel& c, const QuadratureOptions& q = {});

struct ThetaValue {
  cplx value;
  double tail_bound = 0;
};

/// theta(z | R) = sum_n exp(pi i n.R.n + 2 pi i n.z) over ||n||_inf <= radius.
ThetaValue theta(const std::vector<cplx>& z, const CMatrix& R, int radius);

struct Reconstruction {
  std::vector<double> xi;       // grid over one period
  std::vector<double> q;        // reconstructed potential samples
  double period = 1.0;          // 1 / v_1 for genus 1; the common period in general
  std::vector<double> v;        // winding vector
  double constant = 0.0;        // additive constant fixed by lambda_0
  double periodicity_error = 0;
  HillPotential potential() const;
};

/// Finite-gap potential -2 d^2/dxi^2 log theta(phi + xi v) + c, genus <= 2.
Reconstruction its_matveev_reconstruct(const CurveModel& c, const std::vector<double>& phi = {},
                                       int samples = 512, const QuadratureOptions& q = {});

struct InvariantEntry {
  std::string label;            // coefficient label, e.g. "g00"
  std::vector<double> point;    // transverse coordinates
  PeriodMatrix matrix;
  std::vector<double> spectrum; // unit-period edges behind the matrix, empty when degenerate
  double fit_T = 0;             // fitted period parameter, 0 on the constant branch
  double fit_objective = 0;
  bool fit_at_edge = false;     // fit minimum sits on the T grid boundary
};

struct CompareResult {
  bool equal = true;
  double max_deviation = 0;
  std::string worst;            // label and point of the largest deviation
};

/// Entrywise comparison of two fields in lexicographic label order.
CompareResult compare_invariants(std::vector<InvariantEntry> a, std::vector<InvariantEntry> b,
                                 double tol);

}  // namespace spinv
