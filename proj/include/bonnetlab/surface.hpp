#pragma once
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "bonnetlab/grid.hpp"

namespace bonnetlab {

struct Vec3 {
  double x = 0, y = 0, z = 0;
};
inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }

// forward jet in the two chart variables, through second order
struct Jet2 {
  double f = 0, fx = 0, fy = 0, fxx = 0, fxy = 0, fyy = 0;
  static Jet2 var_x(double v) { return {v, 1, 0, 0, 0, 0}; }
  static Jet2 var_y(double v) { return {v, 0, 1, 0, 0, 0}; }
  static Jet2 con(double v) { return {v, 0, 0, 0, 0, 0}; }
};

inline Jet2 operator+(const Jet2& a, const Jet2& b) {
  return {a.f + b.f, a.fx + b.fx, a.fy + b.fy, a.fxx + b.fxx, a.fxy + b.fxy, a.fyy + b.fyy};
}
inline Jet2 operator-(const Jet2& a, const Jet2& b) {
  return {a.f - b.f, a.fx - b.fx, a.fy - b.fy, a.fxx - b.fxx, a.fxy - b.fxy, a.fyy - b.fyy};
}
inline Jet2 operator-(const Jet2& a) { return {-a.f, -a.fx, -a.fy, -a.fxx, -a.fxy, -a.fyy}; }
inline Jet2 operator*(const Jet2& a, const Jet2& b) {
  return {a.f * b.f,
          a.fx * b.f + a.f * b.fx,
          a.fy * b.f + a.f * b.fy,
          a.fxx * b.f + 2 * a.fx * b.fx + a.f * b.fxx,
          a.fxy * b.f + a.fx * b.fy + a.fy * b.fx + a.f * b.fxy,
          a.fyy * b.f + 2 * a.fy * b.fy + a.f * b.fyy};
}
inline Jet2 operator*(double s, const Jet2& a) {
  return {s * a.f, s * a.fx, s * a.fy, s * a.fxx, s * a.fxy, s * a.fyy};
}
inline Jet2 operator+(const Jet2& a, double c) { return {a.f + c, a.fx, a.fy, a.fxx, a.fxy, a.fyy}; }
inline Jet2 operator+(double c, const Jet2& a) { return a + c; }
inline Jet2 operator-(const Jet2& a, double c) { return a + (-c); }
inline Jet2 operator-(double c, const Jet2& a) { return (-a) + c; }

// composition with a scalar function given value and two derivatives at a.f
inline Jet2 chain(const Jet2& a, double val, double d1, double d2) {
  return {val,
          d1 * a.fx,
          d1 * a.fy,
          d2 * a.fx * a.fx + d1 * a.fxx,
          d2 * a.fx * a.fy + d1 * a.fxy,
          d2 * a.fy * a.fy + d1 * a.fyy};
}
inline Jet2 sin(const Jet2& a) { return chain(a, std::sin(a.f), std::cos(a.f), -std::sin(a.f)); }
inline Jet2 cos(const Jet2& a) { return chain(a, std::cos(a.f), -std::sin(a.f), -std::cos(a.f)); }
inline Jet2 sinh(const Jet2& a) { return chain(a, std::sinh(a.f), std::cosh(a.f), std::sinh(a.f)); }
inline Jet2 cosh(const Jet2& a) { return chain(a, std::cosh(a.f), std::sinh(a.f), std::cosh(a.f)); }
inline Jet2 exp(const Jet2& a) {
  double e = std::exp(a.f);
  return chain(a, e, e, e);
}
inline Jet2 tanh(const Jet2& a) {
  double t = std::tanh(a.f), s = 1 - t * t;
  return chain(a, t, s, -2 * t * s);
}
inline Jet2 sech(const Jet2& a) {
  double c = std::cosh(a.f), s = std::sinh(a.f);
  double v = 1 / c;
  return chain(a, v, -s / (c * c), (2 * s * s - c * c) / (c * c * c));
}
inline Jet2 recip(const Jet2& a) {
  double v = a.f;
  return chain(a, 1 / v, -1 / (v * v), 2 / (v * v * v));
}
inline Jet2 operator/(const Jet2& a, const Jet2& b) { return a * recip(b); }
inline Jet2 operator/(const Jet2& a, double c) { return (1.0 / c) * a; }

struct ImmersionJet {
  Vec3 X, Xx, Xy, Xxx, Xxy, Xyy;
};
// pack three component jets into an immersion point jet
ImmersionJet pack_jet(const Jet2& a, const Jet2& b, const Jet2& c);

using JetEval = std::function<ImmersionJet(double, double)>;

enum class DerivativeSource { Analytic, Numerical };

struct ChartMetadata {
  bool compact = false;
  bool simply_connected = true;
  std::string notes;
};

struct ImmersionSample {
  ChartGrid grid;
  Field<Vec3> X, Xx, Xy, Xxx, Xxy, Xyy;
  DerivativeSource derivative_source = DerivativeSource::Analytic;
  ChartMetadata metadata;
  double tol_conf = 1e-6;
};

struct GalleryParam {
  std::string name;
  double value;
  std::string doc;
};

struct GalleryInfo {
  std::string name;
  std::vector<GalleryParam> params;
  std::string constraint;
  bool compact = false;
  std::string notes;
};

struct GalleryChart {
  std::string name;
  std::map<std::string, double> params;
  JetEval eval;
  ChartGrid default_grid;
  ChartMetadata metadata;
  double tol_conf = 1e-6;
};

std::vector<GalleryInfo> gallery_listing();
GalleryChart gallery_chart(const std::string& name,
                           const std::map<std::string, double>& overrides = {});
ImmersionSample sample_chart(const GalleryChart& chart, const ChartGrid& grid);
ImmersionSample sample_gallery(const std::string& name,
                               const std::map<std::string, double>& params,
                               const ChartGrid& grid);
ImmersionSample sample_gallery(const std::string& name,
                               const std::map<std::string, double>& params = {});

struct ProfileCurve {
  std::function<double(double)> rho, drho, d2rho, zeta, dzeta, d2zeta;
  double v0 = 0, v1 = 1;
  bool closed = false;
};

// isothermal coordinates for a surface of revolution:
// t(v) = integral of sqrt(rho'^2 + zeta'^2)/rho, inverted by Newton on a
// Gauss-Legendre table; chart (x,t) -> (rho cos x, rho sin x, zeta), e^u = rho
class RevolutionChart {
 public:
  explicit RevolutionChart(ProfileCurve p, int panels = 2048);
  double t_of_v(double v) const;
  double v_of_t(double t) const;
  double t_span() const { return ts_.back(); }  // t-length of [v0, v1]
  ImmersionJet eval(double x, double t) const;
  ImmersionSample sample(const ChartGrid& grid) const;

 private:
  double refine_t(double v) const;  // table + local quadrature
  ProfileCurve p_;
  std::vector<double> vs_, ts_;
};

ImmersionSample make_revolution_chart(const ProfileCurve& profile, const ChartGrid& grid);

Field<Vec3> unit_normal(const ImmersionSample& s);

// holomorphic reparametrization w = phi(z), described by the inverse jet z(w)
struct Reparam {
  std::string name;
  std::function<cplx(cplx)> z_of_w, dz_dw, d2z_dw2;
};
Reparam affine_reparam(cplx a, cplx b);      // w = a z + b
Reparam quadratic_reparam(double eps);       // w = z + eps z^2
ImmersionSample reparametrize(const JetEval& eval, const Reparam& phi, const ChartGrid& wgrid,
                              const ChartMetadata& meta = {}, double tol_conf = 1e-6);

// every factor-th node of s; numerical-source samples get their derivatives
// recomputed at the coarser spacing, analytic jets are copied through
ImmersionSample decimate_sample(const ImmersionSample& s, int factor, Scheme scheme);

void export_chart_table(const ImmersionSample& s, const std::string& table_path,
                        bool with_derivatives);
ImmersionSample ingest_table(const ChartGrid& grid, const ChartMetadata& meta,
                             const std::string& table_path, bool has_derivatives,
                             Scheme scheme, double tol_conf);

}  // namespace bonnetlab
