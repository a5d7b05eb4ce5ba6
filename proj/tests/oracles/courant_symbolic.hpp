// Pointwise Courant bracket of analytic sections, differentiated by the
// complex-step rule (exact to rounding). Test-side only.
#pragma once

#include <complex>
#include <functional>
#include <vector>

namespace oracle {

using cvec = std::vector<std::complex<double>>;
// Returns (X_1..X_d, xi_1..xi_d) at a complex point.
using AnalyticSection = std::function<cvec(const cvec&)>;

// d/dx_a of every component at a real point.
inline std::vector<double> complex_step(const AnalyticSection& s, const std::vector<double>& x, int a) {
  const double h = 1e-30;
  cvec z(x.begin(), x.end());
  z[a] += std::complex<double>(0, h);
  const cvec v = s(z);
  std::vector<double> d(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) d[i] = v[i].imag() / h;
  return d;
}

inline std::vector<double> real_values(const AnalyticSection& s, const std::vector<double>& x) {
  const cvec v = s(cvec(x.begin(), x.end()));
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) r[i] = v[i].real();
  return r;
}

// [X1,X2] + L_{X1} xi2 - L_{X2} xi1 + d(e1,e2)_-, with the last term
// differentiated as a whole rather than by the product rule.
inline std::vector<double> bracket(const AnalyticSection& e1, const AnalyticSection& e2,
                                   const std::vector<double>& x) {
  const int d = int(x.size());
  const auto v1 = real_values(e1, x), v2 = real_values(e2, x);
  std::vector<std::vector<double>> D1(d), D2(d);
  for (int a = 0; a < d; ++a) {
    D1[a] = complex_step(e1, x, a);
    D2[a] = complex_step(e2, x, a);
  }
  AnalyticSection minus_pairing = [&](const cvec& z) {
    const cvec a = e1(z), b = e2(z);
    std::complex<double> p = 0;
    for (int i = 0; i < d; ++i) p += 0.5 * (a[d + i] * b[i] - b[d + i] * a[i]);
    return cvec{p};
  };
  std::vector<double> out(2 * d, 0.0);
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) {
      out[a] += v1[b] * D2[b][a] - v2[b] * D1[b][a];
      out[d + a] += v1[b] * D2[b][d + a] + v2[d + b] * D1[a][b];
      out[d + a] -= v2[b] * D1[b][d + a] + v1[d + b] * D2[a][b];
    }
    out[d + a] += complex_step(minus_pairing, x, a)[0];
  }
  return out;
}

}  // namespace oracle
