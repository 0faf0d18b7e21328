#pragma once
#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "bonnetlab/errors.hpp"

namespace bonnetlab {

using cplx = std::complex<double>;

int thread_count();
// Calls block(begin, end) on disjoint chunks of [0, n); deterministic as long as
// chunks write disjoint slots.
void parallel_for(int n, const std::function<void(int, int)>& block);

struct ChartGrid {
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  int nx = 8, ny = 8;
  bool periodic_x = false, periodic_y = false;

  double hx() const { return (x1 - x0) / (periodic_x ? nx : nx - 1); }
  double hy() const { return (y1 - y0) / (periodic_y ? ny : ny - 1); }
  double x(int i) const { return x0 + i * hx(); }
  double y(int j) const { return y0 + j * hy(); }
  int size() const { return nx * ny; }
  bool compact() const { return periodic_x && periodic_y; }
  ChartGrid refined(int factor) const {
    ChartGrid g = *this;
    g.nx *= factor;
    g.ny *= factor;
    return g;
  }
  void validate() const;
};

ChartGrid make_grid(double x0, double x1, double y0, double y1, int nx, int ny,
                    bool periodic_x, bool periodic_y);

template <class T>
struct Field {
  int nx = 0, ny = 0;
  std::vector<T> v;

  Field() = default;
  Field(int nx_, int ny_, T fill = T{}) : nx(nx_), ny(ny_), v(size_t(nx_) * ny_, fill) {}
  explicit Field(const ChartGrid& g, T fill = T{}) : Field(g.nx, g.ny, fill) {}

  T& operator()(int i, int j) { return v[size_t(j) * nx + i]; }
  const T& operator()(int i, int j) const { return v[size_t(j) * nx + i]; }
  T& operator[](size_t k) { return v[k]; }
  const T& operator[](size_t k) const { return v[k]; }
  size_t size() const { return v.size(); }
};

using RealField = Field<double>;
using ComplexField = Field<cplx>;
using Mask = Field<std::uint8_t>;

ComplexField to_complex(const RealField& f);
RealField re(const ComplexField& f);
RealField im(const ComplexField& f);
RealField abs_field(const ComplexField& f);
double max_abs(const RealField& f);
double max_abs(const ComplexField& f);
double max_abs_masked(const RealField& f, const Mask& keep);
double median(std::vector<double> vals);

enum class AxisKind { Fd2, Fd4, Spectral };
enum class Scheme { Fd2, Fd4, SpectralAuto };

Scheme parse_scheme(const std::string& name);
std::string scheme_name(Scheme s);
// spectral-auto resolves to Spectral on periodic axes and Fd4 elsewhere
struct AxisPlan {
  AxisKind x, y;
};
AxisPlan resolve_scheme(Scheme s, const ChartGrid& g);
int formal_order(AxisKind k);  // 2, 4; Spectral reports 0 (meaning "beyond any fixed order")

// Differentiation engine bound to one grid+scheme. Finite-difference boundary
// closures are one order above the interior stencil so max-norm convergence is
// not lost at edges; second derivatives use dedicated stencils rather than two
// first-derivative passes for the same reason.
class Deriv {
 public:
  Deriv(const ChartGrid& g, Scheme s);
  ~Deriv();
  Deriv(const Deriv&) = delete;
  Deriv& operator=(const Deriv&) = delete;

  const ChartGrid& grid() const { return grid_; }
  AxisPlan plan() const { return plan_; }
  Scheme scheme() const { return scheme_; }

  ComplexField dx(const ComplexField& f, int order) const;
  ComplexField dy(const ComplexField& f, int order) const;
  RealField dx(const RealField& f, int order) const;
  RealField dy(const RealField& f, int order) const;

  ComplexField d_z(const ComplexField& f) const;      // (fx - i fy)/2
  ComplexField d_zbar(const ComplexField& f) const;   // (fx + i fy)/2
  ComplexField d_zzbar(const ComplexField& f) const;  // (fxx + fyy)/4
  ComplexField d_z(const RealField& f) const;
  ComplexField d_zbar(const RealField& f) const;
  RealField flat_laplacian(const RealField& f) const;  // fxx + fyy

 private:
  struct Fft;
  ComplexField axis_deriv(const ComplexField& f, int axis, int order) const;
  ChartGrid grid_;
  Scheme scheme_;
  AxisPlan plan_;
  Fft* fft_;
};

struct LaplaceField {
  RealField field;        // 4 e^{-2u} Re d_z d_zbar f
  double imag_diagnostic; // max |Im d_z(d_zbar f)|, scheme-health check
};
LaplaceField laplace_beltrami(const Deriv& d, const RealField& f, const RealField& u);

struct ConvergenceTable {
  std::vector<int> levels;
  std::vector<std::string> names;  // insertion order of first run's keys
  std::map<std::string, std::vector<double>> errors;
  // log2 of successive error ratios, one entry fewer than levels
  std::map<std::string, std::vector<double>> orders() const;
};
ConvergenceTable refine_study(
    const std::vector<int>& levels,
    const std::function<std::map<std::string, double>(int)>& run);

// Catmull-Rom bicubic point sampling; periodic axes wrap, others clamp.
class Interpolator {
 public:
  Interpolator(const ChartGrid& g, ComplexField f);
  cplx operator()(double x, double y) const;

 private:
  ChartGrid g_;
  ComplexField f_;
};

// CSV dump: header i,j,x,y,re,im then row-major rows, 17 significant digits.
void write_field_csv(std::ostream& os, const ChartGrid& g, const ComplexField& f);
void write_field_csv(std::ostream& os, const ChartGrid& g, const RealField& f);

}  // namespace bonnetlab
