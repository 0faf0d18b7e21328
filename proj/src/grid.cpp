#include "bonnetlab/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <thread>

namespace bonnetlab {

int thread_count() {
  static int n = [] {
    if (const char* env = std::getenv("BONNETLAB_THREADS")) {
      int k = std::atoi(env);
      if (k >= 1) return k;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return int(std::min(hc == 0 ? 1u : hc, 8u));
  }();
  return n;
}

void parallel_for(int n, const std::function<void(int, int)>& block) {
  int nt = std::min(thread_count(), n);
  if (nt <= 1 || n < 64) {
    if (n > 0) block(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(nt);
  int chunk = (n + nt - 1) / nt;
  for (int t = 0; t < nt; ++t) {
    int b = t * chunk, e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&block, b, e] { block(b, e); });
  }
  for (auto& th : pool) th.join();
}

void ChartGrid::validate() const {
  if (nx < 8 || ny < 8) throw SchemaError("grid: nx and ny must be at least 8");
  if (!(x1 > x0) || !(y1 > y0)) throw SchemaError("grid: require x1 > x0 and y1 > y0");
  if (!std::isfinite(x0) || !std::isfinite(x1) || !std::isfinite(y0) || !std::isfinite(y1))
    throw SchemaError("grid: non-finite bounds");
}

ChartGrid make_grid(double x0, double x1, double y0, double y1, int nx, int ny,
                    bool periodic_x, bool periodic_y) {
  ChartGrid g{x0, x1, y0, y1, nx, ny, periodic_x, periodic_y};
  g.validate();
  return g;
}

ComplexField to_complex(const RealField& f) {
  ComplexField out(f.nx, f.ny);
  for (size_t k = 0; k < f.size(); ++k) out[k] = f[k];
  return out;
}

RealField re(const ComplexField& f) {
  RealField out(f.nx, f.ny);
  for (size_t k = 0; k < f.size(); ++k) out[k] = f[k].real();
  return out;
}

RealField im(const ComplexField& f) {
  RealField out(f.nx, f.ny);
  for (size_t k = 0; k < f.size(); ++k) out[k] = f[k].imag();
  return out;
}

RealField abs_field(const ComplexField& f) {
  RealField out(f.nx, f.ny);
  for (size_t k = 0; k < f.size(); ++k) out[k] = std::abs(f[k]);
  return out;
}

double max_abs(const RealField& f) {
  double m = 0;
  for (double x : f.v) m = std::max(m, std::abs(x));
  return m;
}

double max_abs(const ComplexField& f) {
  double m = 0;
  for (const cplx& x : f.v) m = std::max(m, std::abs(x));
  return m;
}

double max_abs_masked(const RealField& f, const Mask& keep) {
  double m = 0;
  for (size_t k = 0; k < f.size(); ++k)
    if (keep[k]) m = std::max(m, std::abs(f[k]));
  return m;
}

double median(std::vector<double> vals) {
  if (vals.empty()) return 0;
  std::sort(vals.begin(), vals.end());
  size_t n = vals.size();
  return n % 2 ? vals[n / 2] : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
}

Scheme parse_scheme(const std::string& name) {
  if (name == "fd2") return Scheme::Fd2;
  if (name == "fd4") return Scheme::Fd4;
  if (name == "spectral-auto") return Scheme::SpectralAuto;
  throw SchemaError("unknown scheme '" + name + "' (expected fd2|fd4|spectral-auto)");
}

std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::Fd2: return "fd2";
    case Scheme::Fd4: return "fd4";
    default: return "spectral-auto";
  }
}

AxisPlan resolve_scheme(Scheme s, const ChartGrid& g) {
  switch (s) {
    case Scheme::Fd2: return {AxisKind::Fd2, AxisKind::Fd2};
    case Scheme::Fd4: return {AxisKind::Fd4, AxisKind::Fd4};
    default:
      return {g.periodic_x ? AxisKind::Spectral : AxisKind::Fd4,
              g.periodic_y ? AxisKind::Spectral : AxisKind::Fd4};
  }
}

int formal_order(AxisKind k) {
  switch (k) {
    case AxisKind::Fd2: return 2;
    case AxisKind::Fd4: return 4;
    default: return 0;
  }
}

namespace {

struct StencilSet {
  std::vector<double> interior;  // centered weights, length 2*hw+1
  int hw;
  std::vector<std::vector<double>> closures;  // edge rows, applied to f[0..len)
};

// Boundary closures sit one order above the interior stencil.
const StencilSet& stencil(AxisKind k, int order) {
  static const StencilSet fd2_d1{
      {-0.5, 0.0, 0.5}, 1, {{-11.0 / 6, 18.0 / 6, -9.0 / 6, 2.0 / 6}}};
  static const StencilSet fd4_d1{
      {1.0 / 12, -8.0 / 12, 0.0, 8.0 / 12, -1.0 / 12},
      2,
      {{-137.0 / 60, 300.0 / 60, -300.0 / 60, 200.0 / 60, -75.0 / 60, 12.0 / 60},
       {-12.0 / 60, -65.0 / 60, 120.0 / 60, -60.0 / 60, 20.0 / 60, -3.0 / 60}}};
  static const StencilSet fd2_d2{
      {1.0, -2.0, 1.0}, 1, {{35.0 / 12, -104.0 / 12, 114.0 / 12, -56.0 / 12, 11.0 / 12}}};
  static const StencilSet fd4_d2{
      {-1.0 / 12, 16.0 / 12, -30.0 / 12, 16.0 / 12, -1.0 / 12},
      2,
      {{812.0 / 180, -3132.0 / 180, 5265.0 / 180, -5080.0 / 180, 2970.0 / 180,
        -972.0 / 180, 137.0 / 180},
       {137.0 / 180, -147.0 / 180, -255.0 / 180, 470.0 / 180, -285.0 / 180, 93.0 / 180,
        -13.0 / 180}}};
  if (order == 1) return k == AxisKind::Fd2 ? fd2_d1 : fd4_d1;
  return k == AxisKind::Fd2 ? fd2_d2 : fd4_d2;
}

void fd_line(const cplx* f, cplx* out, int n, double h, int order, bool periodic,
             const StencilSet& st) {
  const double scale = order == 1 ? 1.0 / h : 1.0 / (h * h);
  const int hw = st.hw;
  if (periodic) {
    for (int i = 0; i < n; ++i) {
      cplx acc = 0;
      for (int k = -hw; k <= hw; ++k) {
        int idx = i + k;
        if (idx < 0) idx += n;
        if (idx >= n) idx -= n;
        acc += st.interior[k + hw] * f[idx];
      }
      out[i] = acc * scale;
    }
    return;
  }
  for (int i = hw; i < n - hw; ++i) {
    cplx acc = 0;
    for (int k = -hw; k <= hw; ++k) acc += st.interior[k + hw] * f[i + k];
    out[i] = acc * scale;
  }
  const double edge_sign = order == 1 ? -1.0 : 1.0;
  for (size_t r = 0; r < st.closures.size(); ++r) {
    const auto& row = st.closures[r];
    cplx accL = 0, accR = 0;
    for (size_t m = 0; m < row.size(); ++m) {
      accL += row[m] * f[m];
      accR += row[m] * f[n - 1 - int(m)];
    }
    out[r] = accL * scale;
    out[n - 1 - int(r)] = edge_sign * accR * scale;
  }
}

}  // namespace

struct Deriv::Fft {
  // one shared line buffer per axis; spectral path runs sequentially
  fftw_complex* buf_x = nullptr;
  fftw_complex* buf_y = nullptr;
  fftw_plan fwd_x = nullptr, bwd_x = nullptr, fwd_y = nullptr, bwd_y = nullptr;

  void ensure(int axis, int n) {
    fftw_complex*& buf = axis == 0 ? buf_x : buf_y;
    fftw_plan& fwd = axis == 0 ? fwd_x : fwd_y;
    fftw_plan& bwd = axis == 0 ? bwd_x : bwd_y;
    if (buf) return;
    buf = fftw_alloc_complex(size_t(n));
    fwd = fftw_plan_dft_1d(n, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd = fftw_plan_dft_1d(n, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~Fft() {
    for (fftw_plan p : {fwd_x, bwd_x, fwd_y, bwd_y})
      if (p) fftw_destroy_plan(p);
    if (buf_x) fftw_free(buf_x);
    if (buf_y) fftw_free(buf_y);
  }
};

Deriv::Deriv(const ChartGrid& g, Scheme s)
    : grid_(g), scheme_(s), plan_(resolve_scheme(s, g)), fft_(new Fft) {
  g.validate();
  if (plan_.x == AxisKind::Spectral && !g.periodic_x)
    throw SchemaError("spectral x-axis requires periodic_x");
  if (plan_.y == AxisKind::Spectral && !g.periodic_y)
    throw SchemaError("spectral y-axis requires periodic_y");
}

Deriv::~Deriv() { delete fft_; }

ComplexField Deriv::axis_deriv(const ComplexField& f, int axis, int order) const {
  const int n = axis == 0 ? grid_.nx : grid_.ny;
  const int nlines = axis == 0 ? grid_.ny : grid_.nx;
  const double h = axis == 0 ? grid_.hx() : grid_.hy();
  const bool periodic = axis == 0 ? grid_.periodic_x : grid_.periodic_y;
  const AxisKind kind = axis == 0 ? plan_.x : plan_.y;
  ComplexField out(f.nx, f.ny);

  if (kind == AxisKind::Spectral) {
    fft_->ensure(axis, n);
    fftw_complex* buf = axis == 0 ? fft_->buf_x : fft_->buf_y;
    fftw_plan fwd = axis == 0 ? fft_->fwd_x : fft_->fwd_y;
    fftw_plan bwd = axis == 0 ? fft_->bwd_x : fft_->bwd_y;
    const double period = axis == 0 ? grid_.x1 - grid_.x0 : grid_.y1 - grid_.y0;
    const double base = 2.0 * M_PI / period;
    std::vector<cplx> mult((size_t)n);
    for (int idx = 0; idx < n; ++idx) {
      int k = idx <= n / 2 ? idx : idx - n;
      double kp = base * k;
      if (order == 1)
        mult[idx] = (n % 2 == 0 && idx == n / 2) ? cplx(0, 0) : cplx(0, kp);
      else
        mult[idx] = cplx(-kp * kp, 0);
    }
    for (int line = 0; line < nlines; ++line) {
      for (int i = 0; i < n; ++i) {
        cplx val = axis == 0 ? f(i, line) : f(line, i);
        buf[i][0] = val.real();
        buf[i][1] = val.imag();
      }
      fftw_execute(fwd);
      for (int i = 0; i < n; ++i) {
        cplx val = cplx(buf[i][0], buf[i][1]) * mult[size_t(i)];
        buf[i][0] = val.real();
        buf[i][1] = val.imag();
      }
      fftw_execute(bwd);
      for (int i = 0; i < n; ++i) {
        cplx val = cplx(buf[i][0], buf[i][1]) / double(n);
        (axis == 0 ? out(i, line) : out(line, i)) = val;
      }
    }
    return out;
  }

  const StencilSet& st = stencil(kind, order);
  parallel_for(nlines, [&](int lb, int le) {
    std::vector<cplx> fin((size_t)n), fout((size_t)n);
    for (int line = lb; line < le; ++line) {
      for (int i = 0; i < n; ++i) fin[size_t(i)] = axis == 0 ? f(i, line) : f(line, i);
      fd_line(fin.data(), fout.data(), n, h, order, periodic, st);
      for (int i = 0; i < n; ++i) (axis == 0 ? out(i, line) : out(line, i)) = fout[size_t(i)];
    }
  });
  return out;
}

ComplexField Deriv::dx(const ComplexField& f, int order) const {
  return axis_deriv(f, 0, order);
}
ComplexField Deriv::dy(const ComplexField& f, int order) const {
  return axis_deriv(f, 1, order);
}
RealField Deriv::dx(const RealField& f, int order) const {
  return re(axis_deriv(to_complex(f), 0, order));
}
RealField Deriv::dy(const RealField& f, int order) const {
  return re(axis_deriv(to_complex(f), 1, order));
}

ComplexField Deriv::d_z(const ComplexField& f) const {
  ComplexField fx = dx(f, 1), fy = dy(f, 1);
  ComplexField out(f.nx, f.ny);
  for (size_t k = 0; k < f.size(); ++k) out[k] = 0.5 * (fx[k] - cplx(0, 1) * fy[k]);
  return out;
}

ComplexField Deriv::d_zbar(const ComplexField& f) const {
  ComplexField fx = dx(f, 1), fy = dy(f, 1);
  ComplexField out(f.nx, f.ny);
  for (size_t k = 0; k < f.size(); ++k) out[k] = 0.5 * (fx[k] + cplx(0, 1) * fy[k]);
  return out;
}

ComplexField Deriv::d_zzbar(const ComplexField& f) const {
  ComplexField fxx = dx(f, 2), fyy = dy(f, 2);
  ComplexField out(f.nx, f.ny);
  for (size_t k = 0; k < f.size(); ++k) out[k] = 0.25 * (fxx[k] + fyy[k]);
  return out;
}

ComplexField Deriv::d_z(const RealField& f) const { return d_z(to_complex(f)); }
ComplexField Deriv::d_zbar(const RealField& f) const { return d_zbar(to_complex(f)); }

RealField Deriv::flat_laplacian(const RealField& f) const {
  RealField fxx = dx(f, 2), fyy = dy(f, 2);
  RealField out(f.nx, f.ny);
  for (size_t k = 0; k < f.size(); ++k) out[k] = fxx[k] + fyy[k];
  return out;
}

LaplaceField laplace_beltrami(const Deriv& d, const RealField& f, const RealField& u) {
  RealField lap = d.flat_laplacian(f);
  RealField out(f.nx, f.ny);
  for (size_t k = 0; k < f.size(); ++k) out[k] = std::exp(-2.0 * u[k]) * lap[k];
  ComplexField composed = d.d_z(d.d_zbar(to_complex(f)));
  double diag = max_abs(im(composed));
  return {std::move(out), diag};
}

ConvergenceTable refine_study(
    const std::vector<int>& levels,
    const std::function<std::map<std::string, double>(int)>& run) {
  if (levels.size() < 2) throw SchemaError("refine_study needs at least 2 levels");
  ConvergenceTable t;
  t.levels = levels;
  for (int lev : levels) {
    auto res = run(lev);
    if (t.names.empty())
      for (const auto& [k, v] : res) t.names.push_back(k);
    for (const auto& [k, v] : res) t.errors[k].push_back(v);
  }
  return t;
}

std::map<std::string, std::vector<double>> ConvergenceTable::orders() const {
  std::map<std::string, std::vector<double>> out;
  for (const auto& [name, errs] : errors) {
    std::vector<double> ord;
    for (size_t k = 0; k + 1 < errs.size(); ++k) {
      double num = errs[k], den = errs[k + 1];
      ord.push_back(den > 0 && num > 0 ? std::log2(num / den)
                                       : std::numeric_limits<double>::quiet_NaN());
    }
    out[name] = ord;
  }
  return out;
}

Interpolator::Interpolator(const ChartGrid& g, ComplexField f) : g_(g), f_(std::move(f)) {}

namespace {
inline void cr_weights(double t, double w[4]) {
  double t2 = t * t, t3 = t2 * t;
  w[0] = -0.5 * t3 + t2 - 0.5 * t;
  w[1] = 1.5 * t3 - 2.5 * t2 + 1.0;
  w[2] = -1.5 * t3 + 2.0 * t2 + 0.5 * t;
  w[3] = 0.5 * t3 - 0.5 * t2;
}
inline int wrap_or_clamp(int k, int n, bool periodic) {
  if (periodic) {
    k %= n;
    return k < 0 ? k + n : k;
  }
  return std::clamp(k, 0, n - 1);
}
}  // namespace

cplx Interpolator::operator()(double x, double y) const {
  double sx = (x - g_.x0) / g_.hx();
  double sy = (y - g_.y0) / g_.hy();
  int ix = int(std::floor(sx)), iy = int(std::floor(sy));
  double tx = sx - ix, ty = sy - iy;
  double wx[4], wy[4];
  cr_weights(tx, wx);
  cr_weights(ty, wy);
  cplx acc = 0;
  for (int jj = 0; jj < 4; ++jj) {
    int j = wrap_or_clamp(iy - 1 + jj, g_.ny, g_.periodic_y);
    cplx row = 0;
    for (int ii = 0; ii < 4; ++ii) {
      int i = wrap_or_clamp(ix - 1 + ii, g_.nx, g_.periodic_x);
      row += wx[ii] * f_(i, j);
    }
    acc += wy[jj] * row;
  }
  return acc;
}

void write_field_csv(std::ostream& os, const ChartGrid& g, const ComplexField& f) {
  os << "i,j,x,y,re,im\n";
  char buf[160];
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%.17g,%.17g\n", i, j, g.x(i),
                    g.y(j), f(i, j).real(), f(i, j).imag());
      os << buf;
    }
}

void write_field_csv(std::ostream& os, const ChartGrid& g, const RealField& f) {
  write_field_csv(os, g, to_complex(f));
}

}  // namespace bonnetlab
