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

#include "spinv/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <locale>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "spinv/cartan.hpp"
#include "spinv/dynamics.hpp"
#include "spinv/errors.hpp"
#include "spinv/hill.hpp"
#include "spinv/kerr.hpp"
#include "spinv/period_matrix.hpp"

namespace spinv::cli {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(17);
  os << x;
  return os.str();
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string s = "\"";
  for (char c : field) {
    if (c == '"') s += '"';
    s += c;
  }
  return s + '"';
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c != '"') field += c;
      else if (i + 1 < text.size() && text[i + 1] == '"') field += '"', ++i;
      else quoted = false;
      continue;
    }
    if (c == '"') {
      quoted = any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw InputError("csv: unterminated quoted field");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

namespace fs = std::filesystem;

class Table {
 public:
  explicit Table(std::vector<std::string> header) : width_(header.size()) { add(header); }

  template <class... T>
  void row(const T&... cells) {
    static_assert(sizeof...(T) > 0);
    std::vector<std::string> r;
    (r.push_back(cell(cells)), ...);
    add(r);
  }
  std::string str() const { return text_; }

 private:
  static std::string cell(double x) { return format_number(x); }
  static std::string cell(int x) { return std::to_string(x); }
  static std::string cell(long x) { return std::to_string(x); }
  static std::string cell(std::size_t x) { return std::to_string(x); }
  static std::string cell(bool x) { return x ? "true" : "false"; }
  static std::string cell(const std::string& s) { return csv_escape(s); }
  static std::string cell(const char* s) { return csv_escape(s); }

  void add(const std::vector<std::string>& r) {
    if (r.size() != width_) throw std::logic_error("table row width mismatch");
    for (std::size_t i = 0; i < r.size(); ++i) text_ += (i ? "," : "") + r[i];
    text_ += "\n";
  }
  std::size_t width_;
  std::string text_;
};

struct Outputs {
  std::map<std::string, std::string> files;

  void commit(const std::string& dir) const {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InputError("cannot create output directory " + dir + ": " + ec.message());
    for (const auto& [name, text] : files) {
      std::ofstream f(fs::path(dir) / name, std::ios::binary);
      f << text;
      if (!f) throw InputError("cannot write " + (fs::path(dir) / name).string());
    }
  }
};

// Runs f(0..n-1) on up to `jobs` threads; the first failing index wins.
template <class F>
void parallel_for(int n, int jobs, F&& f) {
  jobs = std::max(1, std::min(jobs, n));
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  std::vector<std::thread> pool;
  for (int w = 0; w < jobs; ++w)
    pool.emplace_back([&] {
      for (int i; (i = next++) < n;) {
        try {
          f(i);
        } catch (...) {
          errors[std::size_t(i)] = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::string join(const std::vector<std::string>& v, const std::string& sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + v[i];
  return s;
}

double parse_double(const std::string& s, const std::string& what) {
  std::istringstream is(s);
  is.imbue(std::locale::classic());
  double x;
  if (!(is >> x) || !(is >> std::ws).eof()) throw InputError(what + ": not a number: '" + s + "'");
  return x;
}

// ---- shared options ----

struct Global {
  std::string out;
  int jobs = 1;
  std::uint64_t seed = 20261015;
  bool print_defaults = false;
};

HillOptions precision_options(const std::string& name) {
  if (name == "standard") return HillOptions::standard();
  if (name == "fast") return HillOptions::fast();
  return HillOptions::extended();
}

// ---- hill ----

struct HillConfig {
  std::string potential = "zero";
  double value = 0;
  double amplitude = 1;
  double a0 = 0;
  std::vector<double> cos_terms, sin_terms;
  std::string samples_file;
  int gaps = 5;
  std::string precision = "extended";
  int disc_samples = 401;
  double disc_margin = 5;
};

std::vector<double> read_samples(const std::string& path) {
  if (path.empty()) throw InputError("potential 'samples' needs --samples-file");
  std::ifstream f(path);
  if (!f) throw InputError("cannot open potential file " + path);
  std::vector<double> v;
  std::string line;
  while (std::getline(f, line)) {
    line = line.substr(0, line.find('#'));
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    for (std::string tok; ls >> tok;) {
      const double x = parse_double(tok, path);
      if (!std::isfinite(x)) throw InputError(path + ": non-finite sample");
      v.push_back(x);
    }
  }
  if (v.size() < 4) throw InputError(path + ": at least four samples are required");
  return v;
}

HillPotential make_potential(const HillConfig& c) {
  if (c.potential == "zero") return HillPotential::constant(0);
  if (c.potential == "constant") return HillPotential::constant(c.value);
  if (c.potential == "mathieu") return HillPotential::mathieu(c.amplitude);
  if (c.potential == "trig") return HillPotential::trigonometric(c.a0, c.cos_terms, c.sin_terms);
  return HillPotential::from_samples(read_samples(c.samples_file));
}

std::string potential_comment(const HillPotential& q) {
  return "# potential family = " + q.family + ", length = " + format_number(q.length) +
         ", mean = " + format_number(q.mean) + "\n";
}

Outputs run_hill(const HillConfig& c) {
  if (c.gaps < 1) throw InputError("--gaps must be at least 1");
  if (c.disc_samples < 2) throw InputError("--disc-samples must be at least 2");
  const HillPotential q = make_potential(c);
  const HillOptions opt = precision_options(c.precision);
  const SpectrumBundle s = periodic_spectrum(q, c.gaps, opt);

  Table spec({"index", "lambda", "delta", "gap", "gap_width"});
  for (int i = 0; i <= 2 * c.gaps; ++i) {
    const double d = s.disc.empty() ? discriminant(q, s.lambda[std::size_t(i)], opt) : s.disc[std::size_t(i)];
    const int g = (i + 1) / 2;
    if (i == 0) spec.row(i, s.lambda[0], d, std::string(), std::string());
    else spec.row(i, s.lambda[std::size_t(i)], d, g, s.gap_width(g));
  }
  Table gaps({"gap", "lower", "upper", "width", "mu", "double"});
  for (int g = 1; g <= c.gaps; ++g)
    gaps.row(g, s.gap_lo(g), s.gap_hi(g), s.gap_width(g), s.mu.at(std::size_t(g - 1)),
             bool(s.double_flag.at(std::size_t(g - 1))));
  Table refl({"index", "nu"});
  for (std::size_t i = 0; i < s.nu.size(); ++i) refl.row(i, s.nu[i]);

  Table disc({"lambda", "delta"});
  const double lo = s.lambda.front() - c.disc_margin, hi = s.lambda.back() + c.disc_margin;
  for (int k = 0; k < c.disc_samples; ++k) {
    const double l = lo + (hi - lo) * double(k) / double(c.disc_samples - 1);
    disc.row(l, discriminant(q, l, opt));
  }
  Outputs o;
  o.files["spectrum.csv"] = spec.str();
  o.files["gaps.csv"] = gaps.str();
  o.files["reflecting.csv"] = refl.str();
  o.files["discriminant.csv"] = disc.str();
  o.files["#comment"] = potential_comment(q) + "# open gaps = " + std::to_string(s.open_gaps()) + "\n";
  return o;
}

// ---- kerr ----

struct KerrConfig {
  double m = 1, a = 0.5, epsilon = 0.05;
  int truncation = 2;
  int z_nodes = 1024;
  int gaps = 6;
  double t = 0.5;
  std::vector<std::string> points;   // empty means the single point 0.45,0.3
  std::vector<std::string> coefficients;
};

std::vector<std::array<double, 2>> parse_points(const std::vector<std::string>& pts) {
  std::vector<std::array<double, 2>> out;
  for (const auto& s : pts) {
    if (s.empty()) continue;
    const auto comma = s.find(',');
    if (comma == std::string::npos) throw InputError("point '" + s + "' is not of the form x,y");
    out.push_back({parse_double(s.substr(0, comma), "point"), parse_double(s.substr(comma + 1), "point")});
  }
  if (out.empty()) out.push_back({0.45, 0.3});
  return out;
}

Outputs run_kerr(const KerrConfig& c, int jobs) {
  KerrParams p{c.m, c.a, c.epsilon};
  p.validate();
  const auto pts = parse_points(c.points);
  KerrInvariantOptions opt;
  opt.truncation = c.truncation;
  opt.z_nodes = c.z_nodes;
  opt.spectrum_gaps = c.gaps;
  opt.t = c.t;
  std::copy_if(c.coefficients.begin(), c.coefficients.end(), std::back_inserter(opt.coefficients),
               [](const std::string& l) { return !l.empty(); });
  const auto coeffs = kerr_coefficients(p);
  for (const auto& l : opt.coefficients)
    if (std::none_of(coeffs.begin(), coeffs.end(), [&](const auto& e) { return e.label == l; }))
      throw InputError("unknown coefficient label " + l);

  std::vector<std::vector<InvariantEntry>> per_point(pts.size());
  parallel_for(int(pts.size()), jobs, [&](int i) { per_point[std::size_t(i)] = kerr_invariants(p, {pts[std::size_t(i)]}, opt); });

  Table index({"i", "j", "label", "n_locus", "o_loci", "designated_index"});
  for (const auto& e : coeffs) index.row(e.i, e.j, e.label, e.n_locus, join(e.o_loci, ";"), e.designated_index);

  const KerrLoci loci = kerr_loci(p);
  const double Z = p.r_plus() + p.epsilon;
  Table locus({"surface", "equation", "x", "y", "z"});
  for (const auto& xy : pts)
    for (const auto& s : loci.surfaces)
      for (double z : loci.z_crossings(s.name, xy[0], xy[1], -Z, Z)) locus.row(s.name, s.equation, xy[0], xy[1], z);

  Table spec({"label", "x", "y", "index", "lambda"});
  Table pm({"label", "x", "y", "m", "genus", "degenerate", "row", "col", "re", "im"});
  Table fits({"label", "x", "y", "T", "objective", "at_grid_edge"});
  const std::size_t per = per_point.front().size();
  for (std::size_t k = 0; k < per; ++k)
    for (const auto& entries : per_point) {
      const auto& e = entries[k];
      fits.row(e.label, e.point[0], e.point[1], e.fit_T, e.fit_objective, e.fit_at_edge);
      for (std::size_t i = 0; i < e.spectrum.size(); ++i) spec.row(e.label, e.point[0], e.point[1], i, e.spectrum[i]);
      const auto& R = e.matrix.R;
      for (int r = 0; r < R.rows(); ++r)
        for (int col = 0; col < R.cols(); ++col)
          pm.row(e.label, e.point[0], e.point[1], e.matrix.truncation, e.matrix.genus, e.matrix.degenerate, r, col,
                 R(r, col).real(), R(r, col).imag());
    }
  Outputs o;
  o.files["index_table.csv"] = index.str();
  o.files["loci.csv"] = locus.str();
  o.files["spectrum.csv"] = spec.str();
  o.files["period_matrix.csv"] = pm.str();
  o.files["fits.csv"] = fits.str();
  o.files["#comment"] =
      "# coordinates (t, x, z, y); blow-up parameter z; r+ = " + format_number(p.r_plus()) +
      ", r- = " + format_number(p.r_minus()) +
      "\n# homology basis: A cycles around retained gaps, B cycles through bands, Im R positive definite"
      "\n# spectra are unit-period edges of the fitted potential; degenerate fits give the zero matrix\n";
  return o;
}

// ---- compare ----

struct CompareConfig {
  std::string mode = "bundle";
  std::string a, b;
  double tol = 1e-8;
  std::string coframe_a = "smooth", coframe_b = "smooth";
  int nodes = 33;
};

std::vector<InvariantEntry> read_bundle(const std::string& path) {
  fs::path p(path);
  if (fs::is_directory(p)) p /= "period_matrix.csv";
  std::ifstream f(p);
  if (!f) throw InputError("cannot open bundle " + p.string());
  std::stringstream ss;
  ss << f.rdbuf();
  const auto rows = parse_csv(ss.str());
  if (rows.empty() || rows[0].size() != 10 || rows[0][0] != "label")
    throw InputError(p.string() + ": not a period-matrix table");
  std::map<std::tuple<std::string, double, double>, InvariantEntry> by_key;
  std::vector<std::tuple<std::string, double, double>> order;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const auto& r = rows[k];
    if (r.size() != 10) throw InputError(p.string() + ": row " + std::to_string(k) + " has wrong width");
    const double x = parse_double(r[1], "x"), y = parse_double(r[2], "y");
    const auto key = std::make_tuple(r[0], x, y);
    auto it = by_key.find(key);
    if (it == by_key.end()) {
      InvariantEntry e;
      e.label = r[0];
      e.point = {x, y};
      e.matrix.truncation = int(parse_double(r[3], "m"));
      e.matrix.genus = int(parse_double(r[4], "genus"));
      e.matrix.degenerate = r[5] == "true";
      const int dim = e.matrix.degenerate ? e.matrix.truncation : e.matrix.genus;
      e.matrix.R = CMatrix::Zero(dim, dim);
      it = by_key.emplace(key, std::move(e)).first;
      order.push_back(key);
    }
    const int row = int(parse_double(r[6], "row")), col = int(parse_double(r[7], "col"));
    auto& R = it->second.matrix.R;
    if (row < 0 || col < 0 || row >= R.rows() || col >= R.cols())
      throw InputError(p.string() + ": entry index outside the matrix");
    R(row, col) = cplx(parse_double(r[8], "re"), parse_double(r[9], "im"));
  }
  std::vector<InvariantEntry> out;
  for (const auto& k : order) out.push_back(by_key.at(k));
  return out;
}

// fields shared with the cartan unit tests: a generic k = 1 coframe on the unit box
double preset_w(int r, const Point& x) {
  return r == 0 ? 0.3 * std::sin(x[0] + 2 * x[1]) + 0.2 * x[3] : 0.1 * x[0] * x[2];
}
double preset_kappa(int r, const Point& x) {
  return r == 0 ? 0.7 + 0.4 * std::cos(x[2] - x[3]) : 1.1 + 0.3 * std::sin(x[0] * x[1] + x[3]);
}

struct CoframePreset {
  CoframeSpec spec;
  Chart chart;
  std::vector<Point> samples;
};

CoframePreset coframe_preset(const std::string& name, int nodes, bool first) {
  const Point c = name == "shifted" ? Point{0.03125, -0.0625, 0.09375, 0.0} : Point{0, 0, 0, 0};
  const double bend = name == "bent" ? 0.05 : 0.0;
  auto at = [c](const Point& y) {
    Point x = y;
    for (int a = 0; a < 4; ++a) x[a] += c[a];
    return x;
  };
  CoframePreset p{CoframeSpec{}, Chart::cube(4, 0, 1, nodes), {}};
  p.spec.k = 1;
  p.spec.w = [at](int i, int, const Point& y) { return preset_w(i, at(y)); };
  p.spec.kappa = [at, bend](int i, int, const Point& y) {
    const Point x = at(y);
    return preset_kappa(i, x) + bend * std::sin(3 * x[0]) * x[1];
  };
  for (int a = 0; a < 4; ++a) p.chart.lo[a] -= c[a], p.chart.hi[a] -= c[a];
  if (first) p.samples = {{0.5, 0.5, 0.5, 0.5}, {0.4, 0.55, 0.5, 0.45}, {0.6, 0.45, 0.4, 0.55}};
  else p.samples = {{0.45, 0.55, 0.4, 0.5}, {0.52, 0.6, 0.38, 0.47}};
  return p;
}

struct ShapeMismatch : NumericError {
  using NumericError::NumericError;
};

Outputs run_compare(const CompareConfig& c, std::ostream& out) {
  std::ostringstream rep;
  rep.imbue(std::locale::classic());
  if (c.mode == "bundle") {
    if (c.a.empty() || c.b.empty()) throw InputError("compare needs --a and --b");
    const auto A = read_bundle(c.a), B = read_bundle(c.b);
    CompareResult r;
    try {
      r = compare_invariants(A, B, c.tol);
    } catch (const InputError& e) {
      throw ShapeMismatch(e.what());
    }
    rep << "verdict = " << (r.equal ? "equivalent" : "not equivalent") << "\n"
        << "entries = " << A.size() << "\n"
        << "tolerance = " << format_number(c.tol) << "\n"
        << "max_deviation = " << format_number(r.max_deviation) << "\n"
        << "worst = " << (r.worst.empty() ? "none" : r.worst) << "\n"
        << "ordering = entries sorted lexicographically by (label, point); deviation is the entrywise max norm\n";
    if (A.empty()) rep << "note = empty bundles, the condition is vacuous\n";
  } else {
    for (const auto& n : {c.coframe_a, c.coframe_b})
      if (n != "smooth" && n != "shifted" && n != "bent") throw InputError("unknown coframe preset " + n);
    const auto pa = coframe_preset(c.coframe_a, c.nodes, true), pb = coframe_preset(c.coframe_b, c.nodes, false);
    const LiftedCoframe ca(pa.spec, pa.chart), cb(pb.spec, pb.chart);
    const auto r = e_structure_equivalent(ca, pa.samples, cb, pb.samples, c.tol);
    rep << "verdict = " << (r.indeterminate ? "indeterminate" : r.equivalent ? "equivalent" : "not equivalent") << "\n"
        << "rank = " << r.rank << "\n"
        << "order = " << r.order << "\n"
        << "max_deviation = " << format_number(r.max_deviation) << "\n"
        << "invariant_indices =";
    for (int i : r.chosen) rep << " " << i;
    rep << "\n";
    rep << "ordering = invariant sets compared as lexicographically ordered label lists\n";
    if (!r.reason.empty()) rep << "reason = " << r.reason << "\n";
    for (const auto& [y, x] : r.sigma) {
      rep << "sigma";
      for (double v : y) rep << " " << format_number(v);
      rep << " ->";
      for (double v : x) rep << " " << format_number(v);
      rep << "\n";
    }
  }
  out << rep.str();
  Outputs o;
  o.files["report.txt"] = rep.str();
  return o;
}

// ---- collapse ----

struct CollapseConfig {
  std::string damping = "constant";
  double f0 = 0.2, slope = 0.05, rate = 0.3;
  double u0 = 1, du0 = 0;
  double dt = 1e-3, t_max = 40;
  int degree = 1;
  double candidate_scale = 1.0;
  double noise = 0;
  int stride = 10;
};

std::function<double(double)> damping_law(const CollapseConfig& c, double scale) {
  const double f0 = c.f0, s = c.slope, r = c.rate;
  if (c.damping == "linear") return [=](double t) { return scale * (f0 + s * t); };
  if (c.damping == "bump") return [=](double t) { return scale * (f0 + s * t * std::exp(-r * t)); };
  return [=](double) { return scale * f0; };
}

Outputs run_collapse(const CollapseConfig& c, std::uint64_t seed) {
  if (c.stride < 1) throw InputError("--stride must be at least 1");
  if (c.noise < 0) throw InputError("--noise must be nonnegative");
  const auto ref = simulate_collapse(damping_law(c, 1.0), c.u0, c.du0, c.dt, c.t_max);
  const auto ref_table = fit_damping(ref);
  const auto sig = polynomial_signature(ref_table, c.degree);

  auto cand = simulate_collapse(damping_law(c, c.candidate_scale), c.u0, c.du0, c.dt, c.t_max);
  if (c.noise > 0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0, c.noise);
    for (auto& u : cand.u) u += n(rng);
  }
  const auto cand_table = fit_damping(cand);
  const auto verdict = no_go_test(cand_table, sig);

  Table traj({"t", "u", "du", "energy", "F"});
  for (std::size_t k = 0; k < ref.t.size(); k += std::size_t(c.stride))
    traj.row(ref.t[k], ref.u[k], ref.du[k], ref.energy[k], ref.F[k]);
  Table damp({"series", "t", "amplitude", "F"});
  for (std::size_t k = 0; k < ref_table.F.size(); ++k)
    damp.row("reference", ref_table.t[k], ref_table.amplitude[k], ref_table.F[k]);
  for (std::size_t k = 0; k < cand_table.F.size(); ++k)
    damp.row("candidate", cand_table.t[k], cand_table.amplitude[k], cand_table.F[k]);

  std::ostringstream sg;
  sg << "# F = sum c_d x^d, x = 1 - A / A_first\ndegree = " << c.degree << "\n";
  for (std::size_t d = 0; d < sig.coeffs.size(); ++d) sg << "c" << d << " = " << format_number(sig.coeffs[d]) << "\n";

  std::ostringstream rep;
  rep << "F0 = " << format_number(ref_table.F0) << "\nslope = " << format_number(ref_table.slope) << "\n"
      << "energy_monotone = " << (ref.energy_monotone ? "true" : "false") << "\n";
  if (c.damping == "constant" && c.f0 < 1) {
    const double w = std::sqrt(1 - c.f0 * c.f0);
    double err = 0;
    for (std::size_t k = 0; k < ref.t.size(); ++k) {
      const double t = ref.t[k];
      const double u = std::exp(-c.f0 * t) * (c.u0 * std::cos(w * t) + (c.du0 + c.f0 * c.u0) / w * std::sin(w * t));
      err = std::max(err, std::abs(ref.u[k] - u));
    }
    rep << "closed_form_max_error = " << format_number(err) << "\n";
  }
  rep << "candidate_F0 = " << format_number(cand_table.F0) << "\n"
      << "verdict = " << (verdict.accept ? "accept" : "reject") << "\n";
  if (!verdict.accept) rep << "mismatch_degree = " << verdict.degree << "\n";
  rep << "message = " << verdict.message << "\n";

  Outputs o;
  o.files["trajectory.csv"] = traj.str();
  o.files["damping.csv"] = damp.str();
  o.files["signature.txt"] = sg.str();
  o.files["report.txt"] = rep.str();
  return o;
}

// ---- evaporate ----

struct EvaporateConfig {
  double q_amplitude = 1;
  int gaps = 4;
  std::string kind = "emission";
  int steps = 5;
  double t0 = 0, spacing = 0.01, planck = 1e-3;
  double amplitude = 0.2, center = 1, width = 2, coupling = 0.1, coupling_width = 1.5;
  int sweep_pairs = 200;
  double threshold = 1e-6;
};

Outputs run_evaporate(const EvaporateConfig& c, std::uint64_t seed) {
  if (c.steps < 1) throw InputError("--steps must be at least 1");
  if (c.gaps < 1) throw InputError("--gaps must be at least 1");
  const auto kind = c.kind == "absorption" ? OperatorKind::Absorption : OperatorKind::Emission;
  KernelParams kp;
  kp.amplitude = c.amplitude;
  kp.center = c.center;
  kp.width = c.width;
  kp.coupling = c.coupling;
  kp.coupling_width = c.coupling_width;
  const int dim = 2 * c.gaps + 1;
  std::vector<EvaporationOperator> ops;
  for (int m = 0; m < c.steps; ++m) ops.push_back(make_operator(kind, c.t0 + c.spacing * m, kp, dim));
  const auto prod = chronological_product(ops, c.planck);
  const auto inv = substitution_inverse(prod, c.planck);

  const auto s0 = SpectralState::from_spectrum(periodic_spectrum(HillPotential::mathieu(c.q_amplitude), c.gaps));
  Table widths({"step", "t", "gap", "lower", "upper", "width"});
  Table log({"step", "message"});
  auto record = [&](int step, double t, const SpectralState& s) {
    const auto w = s.widths();
    for (int g = 1; g <= s.gaps(); ++g)
      widths.row(step, t, g, s.edges[std::size_t(2 * g - 1)], s.edges[std::size_t(2 * g)], w[std::size_t(g - 1)]);
  };
  record(0, c.t0, s0);
  SpectralState s = s0;
  for (int m = 0; m < c.steps; ++m) {
    const auto r = apply(ops[std::size_t(m)], s);
    for (const auto& line : r.log) log.row(m + 1, line);
    s = r.state;
    record(m + 1, ops[std::size_t(m)].t, s);
  }
  const auto back = apply_product(inv, s);
  double trip = 0;
  for (std::size_t i = 0; i < s0.edges.size(); ++i) trip = std::max(trip, std::abs(back.edges[i] - s0.edges[i]));
  const auto sweep = commutator_sweep(dim, c.sweep_pairs, seed, c.threshold);

  std::ostringstream rep;
  rep << "kind = " << to_string(prod.kind) << "\ninverse_kind = " << to_string(inv.kind) << "\n"
      << "steps = " << c.steps << "\nroundtrip_max_error = " << format_number(trip) << "\n"
      << "sweep_pairs = " << sweep.pairs << "\nsweep_above = " << sweep.above << "\n"
      << "sweep_fraction = " << format_number(sweep.fraction) << "\n"
      << "sweep_min_norm = " << format_number(sweep.min_norm) << "\n";
  Outputs o;
  o.files["widths.csv"] = widths.str();
  o.files["log.csv"] = log.str();
  o.files["report.txt"] = rep.str();
  return o;
}

// ---- wiring ----

std::string section(const CLI::App& app, const CLI::App* sub, std::uint64_t seed, bool descriptions) {
  const auto& fmt = *app.get_config_formatter_base();
  return "seed=" + std::to_string(seed) + "\n[" + sub->get_name() + "]\n" + fmt.to_config(sub, true, descriptions, "");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectral invariants of nonsmooth metric data", "spinv"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(0, 1);
  app.fallthrough();
  Global g;
  app.set_config("--config", "", "TOML file with option values")->configurable(false);
  app.add_option("--out", g.out, "Output directory")->configurable(false);
  app.add_option("--jobs", g.jobs, "Worker threads for independent jobs")->check(CLI::Range(1, 256))->configurable(false);
  app.add_option("--seed", g.seed, "Seed for randomized sweeps and noise");
  app.add_flag("--print-defaults", g.print_defaults, "Print the configuration and exit")->configurable(false);

  HillConfig hc;
  auto* hill = app.add_subcommand("hill", "Periodic spectrum, gaps and discriminant samples")->configurable();
  hill->add_option("--potential", hc.potential)->check(CLI::IsMember({"zero", "constant", "mathieu", "trig", "samples"}));
  hill->add_option("--value", hc.value, "Constant potential value");
  hill->add_option("--amplitude", hc.amplitude, "Mathieu amplitude, q = 2 a cos(2 pi x)");
  hill->add_option("--a0", hc.a0, "Trigonometric mean term");
  hill->add_option("--cos", hc.cos_terms, "Trigonometric cosine coefficients")->default_str("");
  hill->add_option("--sin", hc.sin_terms, "Trigonometric sine coefficients")->default_str("");
  hill->add_option("--samples-file", hc.samples_file, "Uniform samples over one period");
  hill->add_option("--gaps", hc.gaps, "Number of gaps n");
  hill->add_option("--precision", hc.precision)->check(CLI::IsMember({"standard", "extended", "fast"}));
  hill->add_option("--disc-samples", hc.disc_samples, "Discriminant sample count");
  hill->add_option("--disc-margin", hc.disc_margin, "Sampling margin beyond the outer edges");

  KerrConfig kc;
  auto* kerr = app.add_subcommand("kerr", "Kerr loci, index table, spectra and period matrices")->configurable();
  kerr->add_option("--m", kc.m, "Mass");
  kerr->add_option("--a", kc.a, "Spin, 0 < a < m");
  kerr->add_option("--epsilon", kc.epsilon, "Locus tube half-width");
  kerr->add_option("--truncation", kc.truncation, "Period matrix truncation m");
  kerr->add_option("--z-nodes", kc.z_nodes, "Ray grid nodes");
  kerr->add_option("--gaps", kc.gaps, "Gaps computed before truncation");
  kerr->add_option("--t", kc.t, "Time coordinate of the slice");
  kerr->add_option("--point", kc.points, "Transverse point x,y (repeatable), empty for 0.45,0.3")->default_str("");
  kerr->add_option("--coefficients", kc.coefficients, "Coefficient labels, empty for all ten")->default_str("");

  CompareConfig cc;
  auto* compare = app.add_subcommand("compare", "Equivalence verdict for two invariant bundles or coframes")->configurable();
  compare->add_option("--mode", cc.mode)->check(CLI::IsMember({"bundle", "coframe"}));
  compare->add_option("--a", cc.a, "First bundle directory or period_matrix.csv");
  compare->add_option("--b", cc.b, "Second bundle directory or period_matrix.csv");
  compare->add_option("--tol", cc.tol, "Deviation tolerance");
  compare->add_option("--coframe-a", cc.coframe_a, "Preset: smooth, shifted, bent");
  compare->add_option("--coframe-b", cc.coframe_b, "Preset: smooth, shifted, bent");
  compare->add_option("--nodes", cc.nodes, "Chart nodes per axis for coframes");

  CollapseConfig oc;
  auto* collapse = app.add_subcommand("collapse", "Damped collapse oscillator and no-go test")->configurable();
  collapse->add_option("--damping", oc.damping)->check(CLI::IsMember({"constant", "linear", "bump"}));
  collapse->add_option("--f0", oc.f0, "Damping at t = 0");
  collapse->add_option("--slope", oc.slope, "Linear slope or bump height");
  collapse->add_option("--rate", oc.rate, "Bump decay rate");
  collapse->add_option("--u0", oc.u0);
  collapse->add_option("--du0", oc.du0);
  collapse->add_option("--dt", oc.dt, "Sampling step");
  collapse->add_option("--t-max", oc.t_max);
  collapse->add_option("--degree", oc.degree, "Signature degree, at most 3");
  collapse->add_option("--candidate-scale", oc.candidate_scale, "Damping scale of the tested trajectory");
  collapse->add_option("--noise", oc.noise, "Gaussian noise added to the candidate u");
  collapse->add_option("--stride", oc.stride, "Trajectory output stride");

  EvaporateConfig ec;
  auto* evap = app.add_subcommand("evaporate", "Absorption and emission operator algebra")->configurable();
  evap->add_option("--q-amplitude", ec.q_amplitude, "Mathieu amplitude of the initial state");
  evap->add_option("--gaps", ec.gaps);
  evap->add_option("--kind", ec.kind)->check(CLI::IsMember({"emission", "absorption"}));
  evap->add_option("--steps", ec.steps);
  evap->add_option("--t0", ec.t0);
  evap->add_option("--spacing", ec.spacing, "Time spacing of successive operators");
  evap->add_option("--planck", ec.planck, "Minimum allowed spacing");
  evap->add_option("--amplitude", ec.amplitude);
  evap->add_option("--center", ec.center);
  evap->add_option("--width", ec.width);
  evap->add_option("--coupling", ec.coupling);
  evap->add_option("--coupling-width", ec.coupling_width);
  evap->add_option("--sweep-pairs", ec.sweep_pairs);
  evap->add_option("--threshold", ec.threshold);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const auto subs = app.get_subcommands();
  if (g.print_defaults) {
    if (subs.empty())
      for (const auto* s : app.get_subcommands({})) out << section(app, s, g.seed, true) << "\n";
    else out << section(app, subs.front(), g.seed, true);
    return kExitOk;
  }
  if (subs.empty()) {
    err << "spinv: a subcommand is required\n" << app.help();
    return kExitUsage;
  }
  const CLI::App* sub = subs.front();
  const std::string name = sub->get_name();
  if (g.out.empty() && name != "compare") {
    err << "spinv: --out is required\n";
    return kExitUsage;
  }

  try {
    Outputs o;
    if (name == "hill") o = run_hill(hc);
    else if (name == "kerr") o = run_kerr(kc, g.jobs);
    else if (name == "compare") o = run_compare(cc, out);
    else if (name == "collapse") o = run_collapse(oc, g.seed);
    else o = run_evaporate(ec, g.seed);

    std::string manifest = "# spinv " + name + "; re-run with: spinv --config manifest.toml --out DIR\n";
    if (auto it = o.files.find("#comment"); it != o.files.end()) {
      manifest += it->second;
      o.files.erase(it);
    }
    o.files["manifest.toml"] = manifest + section(app, sub, g.seed, false);
    if (!g.out.empty()) o.commit(g.out);
    if (name != "compare") out << "spinv " << name << ": wrote " << o.files.size() << " files to " << g.out << "\n";
    return kExitOk;
  } catch (const ShapeMismatch& e) {
    err << "spinv: shape mismatch: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const InputError& e) {
    err << "spinv: invalid input: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "spinv: numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "spinv: failure: " << e.what() << "\n";
    return kExitNumeric;
  }
}

}  // namespace spinv::cli
