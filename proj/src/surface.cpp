#include "bonnetlab/surface.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace bonnetlab {

ImmersionJet pack_jet(const Jet2& a, const Jet2& b, const Jet2& c) {
  ImmersionJet out;
  out.X = {a.f, b.f, c.f};
  out.Xx = {a.fx, b.fx, c.fx};
  out.Xy = {a.fy, b.fy, c.fy};
  out.Xxx = {a.fxx, b.fxx, c.fxx};
  out.Xxy = {a.fxy, b.fxy, c.fxy};
  out.Xyy = {a.fyy, b.fyy, c.fyy};
  return out;
}

namespace {

struct TorusJets {
  Jet2 sv, cv, rho, beta_con;
  double beta;
};

// closed form for the isothermal torus chart: with s = sin(beta t/2),
// c = cos(beta t/2), kappa^2 = (R+a)/(R-a):
//   sin v = 2 kappa s c / (c^2 + kappa^2 s^2),  cos v = (c^2 - kappa^2 s^2)/(same)
TorusJets torus_jets(const Jet2& t, double R, double a) {
  double beta = std::sqrt(R * R - a * a) / a;
  double kap = std::sqrt((R + a) / (R - a));
  Jet2 s = sin(0.5 * beta * t), c = cos(0.5 * beta * t);
  Jet2 den = c * c + (kap * kap) * (s * s);
  Jet2 sv = (2 * kap) * s * c / den;
  Jet2 cv = (c * c - (kap * kap) * (s * s)) / den;
  Jet2 rho = a * cv + R;
  return {sv, cv, rho, Jet2::con(beta), beta};
}

ImmersionJet eval_plane(double x, double y) {
  Jet2 X = Jet2::var_x(x), Y = Jet2::var_y(y);
  return pack_jet(X, Y, Jet2::con(0));
}

ImmersionJet eval_cylinder(double x, double y, double r) {
  Jet2 X = Jet2::var_x(x), Y = Jet2::var_y(y);
  return pack_jet(r * cos(X), r * sin(X), r * Y);
}

ImmersionJet eval_sphere(double x, double y, double r) {
  Jet2 X = Jet2::var_x(x), Y = Jet2::var_y(y);
  Jet2 sy = sech(Y);
  return pack_jet(r * (sy * cos(X)), r * (sy * sin(X)), r * tanh(Y));
}

ImmersionJet eval_catenoid(double x, double y) {
  Jet2 X = Jet2::var_x(x), Y = Jet2::var_y(y);
  Jet2 cy = cosh(Y);
  return pack_jet(cy * cos(X), cy * sin(X), Y);
}

ImmersionJet eval_helicoid(double x, double y) {
  Jet2 X = Jet2::var_x(x), Y = Jet2::var_y(y);
  Jet2 sy = sinh(Y);
  return pack_jet(sy * sin(X), -(sy * cos(X)), X);
}

ImmersionJet eval_torus(double x, double t, double R, double a) {
  Jet2 X = Jet2::var_x(x), T = Jet2::var_y(t);
  TorusJets tj = torus_jets(T, R, a);
  return pack_jet(tj.rho * cos(X), tj.rho * sin(X), a * tj.sv);
}

struct PerturbMode {
  double c;
  int m, k;
  double delta;
};
const std::vector<PerturbMode>& perturb_modes() {
  static const std::vector<PerturbMode> modes{{0.10, 1, 1, 0.5}, {0.06, 2, -1, 1.1}};
  return modes;
}

// torus plus eps*(rho B e3 + Re(tau) X_x + Im(tau) X_t); the tangential part
// cancels the O(eps) conformality defect of the normal bump, leaving O(eps^2)
ImmersionJet eval_perturbed_torus(double x, double t, double R, double a, double eps) {
  Jet2 X = Jet2::var_x(x), T = Jet2::var_y(t);
  TorusJets tj = torus_jets(T, R, a);
  double Om = tj.beta;
  Jet2 cx = cos(X), sx = sin(X);
  Jet2 e3c[3] = {tj.cv * cx, tj.cv * sx, tj.sv};
  Jet2 rho_t = -(tj.sv * tj.rho);
  Jet2 Xxc[3] = {-(tj.rho * sx), tj.rho * cx, Jet2::con(0)};
  Jet2 Xtc[3] = {rho_t * cx, rho_t * sx, tj.rho * tj.cv};
  Jet2 B = Jet2::con(0), p = Jet2::con(0), q = Jet2::con(0);
  for (const PerturbMode& md : perturb_modes()) {
    Jet2 th = double(md.m) * X + (md.k * Om) * T + md.delta;
    Jet2 sth = sin(th);
    double den = md.m * md.m + md.k * md.k * Om * Om;
    B = B + md.c * cos(th);
    p = p + (R * md.c / a) * (md.m / den) * sth;
    q = q + (R * md.c / a) * (-md.k * Om / den) * sth;
  }
  Jet2 base[3] = {tj.rho * cx, tj.rho * sx, a * tj.sv};
  Jet2 comp[3];
  for (int i = 0; i < 3; ++i)
    comp[i] = base[i] + eps * (tj.rho * B * e3c[i] + p * Xxc[i] + q * Xtc[i]);
  return pack_jet(comp[0], comp[1], comp[2]);
}

double get_param(const std::map<std::string, double>& params, const std::string& key) {
  return params.at(key);
}

void check_keys(const std::string& name, const std::map<std::string, double>& overrides,
                const std::map<std::string, double>& defaults) {
  for (const auto& [k, v] : overrides)
    if (!defaults.count(k))
      throw SchemaError("gallery entry '" + name + "' has no parameter '" + k + "'");
}

std::map<std::string, double> merge_params(const std::string& name,
                                           const std::map<std::string, double>& defaults,
                                           const std::map<std::string, double>& overrides) {
  check_keys(name, overrides, defaults);
  std::map<std::string, double> out = defaults;
  for (const auto& [k, v] : overrides) out[k] = v;
  return out;
}

}  // namespace

std::vector<GalleryInfo> gallery_listing() {
  std::vector<GalleryInfo> out;
  out.push_back({"plane", {}, "", false, "totally umbilic, h = 0"});
  out.push_back({"cylinder", {{"radius", 1.0, "cylinder radius"}}, "radius > 0", false,
                 "CMC chart, conformal scaling (r cos x, r sin x, r y)"});
  out.push_back({"sphere-mercator", {{"radius", 1.0, "sphere radius"}}, "radius > 0", true,
                 "totally umbilic; chart omits the poles"});
  out.push_back({"catenoid", {}, "", false, "minimal, e^{2u} h = -1"});
  out.push_back({"helicoid", {}, "", false, "minimal; both axes non-periodic"});
  out.push_back({"torus-of-revolution",
                 {{"R", 2.0, "distance from axis to tube center"}, {"a", 1.0, "tube radius"}},
                 "0 < a < R", true, "compact isothermic chart, doubly periodic"});
  out.push_back({"ellipsoid-of-revolution",
                 {{"A", 1.0, "equatorial radius"},
                  {"C", 1.5, "polar radius"},
                  {"tmax", 1.1, "half-extent of the isothermal parameter"}},
                 "A > 0, C > 0", true,
                 "umbilics sit at the poles, outside the chart's t-range"});
  out.push_back({"perturbed-torus",
                 {{"R", 2.0, "distance from axis to tube center"},
                  {"a", 1.0, "tube radius"},
                  {"eps", 0.05, "perturbation amplitude"}},
                 "0 < a < R", true,
                 "non-symmetric bump with tangential correction; conformality holds to O(eps^2), "
                 "accepted under tol_conf = 1e-3"});
  return out;
}

GalleryChart gallery_chart(const std::string& name,
                           const std::map<std::string, double>& overrides) {
  GalleryChart c;
  c.name = name;
  if (name == "plane") {
    c.params = merge_params(name, {}, overrides);
    c.eval = [](double x, double y) { return eval_plane(x, y); };
    c.default_grid = make_grid(-1, 1, -1, 1, 128, 128, false, false);
    c.metadata = {false, true, "totally umbilic"};
  } else if (name == "cylinder") {
    c.params = merge_params(name, {{"radius", 1.0}}, overrides);
    double r = get_param(c.params, "radius");
    if (!(r > 0)) throw SchemaError("cylinder: radius must be positive");
    c.eval = [r](double x, double y) { return eval_cylinder(x, y, r); };
    c.default_grid = make_grid(0, 2 * M_PI, -1, 1, 128, 128, true, false);
    c.metadata = {false, true, ""};
  } else if (name == "sphere-mercator") {
    c.params = merge_params(name, {{"radius", 1.0}}, overrides);
    double r = get_param(c.params, "radius");
    if (!(r > 0)) throw SchemaError("sphere-mercator: radius must be positive");
    c.eval = [r](double x, double y) { return eval_sphere(x, y, r); };
    c.default_grid = make_grid(0, 2 * M_PI, -1, 1, 128, 128, true, false);
    c.metadata = {true, true, "chart omits the poles"};
  } else if (name == "catenoid") {
    c.params = merge_params(name, {}, overrides);
    c.eval = [](double x, double y) { return eval_catenoid(x, y); };
    c.default_grid = make_grid(0, 2 * M_PI, -1, 1, 128, 128, true, false);
    c.metadata = {false, true, ""};
  } else if (name == "helicoid") {
    c.params = merge_params(name, {}, overrides);
    c.eval = [](double x, double y) { return eval_helicoid(x, y); };
    c.default_grid = make_grid(0, 2 * M_PI, -1, 1, 128, 128, false, false);
    c.metadata = {false, true, "x-axis not periodic: the chart unrolls the full turn"};
  } else if (name == "torus-of-revolution" || name == "perturbed-torus") {
    std::map<std::string, double> defs{{"R", 2.0}, {"a", 1.0}};
    bool perturbed = name == "perturbed-torus";
    if (perturbed) defs["eps"] = 0.05;
    c.params = merge_params(name, defs, overrides);
    double R = get_param(c.params, "R"), a = get_param(c.params, "a");
    if (!(a > 0 && a < R)) throw SchemaError(name + ": require 0 < a < R");
    double beta = std::sqrt(R * R - a * a) / a;
    double T = 2 * M_PI / beta;
    if (perturbed) {
      double eps = get_param(c.params, "eps");
      c.eval = [R, a, eps](double x, double t) { return eval_perturbed_torus(x, t, R, a, eps); };
      c.tol_conf = 1e-3;
      c.metadata = {true, false,
                    "perturbation breaks the revolution symmetry; conformality residual is "
                    "O(eps^2) by the tangential correction"};
    } else {
      c.eval = [R, a](double x, double t) { return eval_torus(x, t, R, a); };
      c.metadata = {true, false, ""};
    }
    c.default_grid = make_grid(0, 2 * M_PI, 0, T, 128, 128, true, true);
  } else if (name == "ellipsoid-of-revolution") {
    c.params = merge_params(name, {{"A", 1.0}, {"C", 1.5}, {"tmax", 1.1}}, overrides);
    double A = get_param(c.params, "A"), C = get_param(c.params, "C");
    double tmax = get_param(c.params, "tmax");
    if (!(A > 0 && C > 0)) throw SchemaError("ellipsoid-of-revolution: require A > 0, C > 0");
    ProfileCurve prof;
    prof.rho = [A](double v) { return A * std::sin(v); };
    prof.drho = [A](double v) { return A * std::cos(v); };
    prof.d2rho = [A](double v) { return -A * std::sin(v); };
    prof.zeta = [C](double v) { return C * std::cos(v); };
    prof.dzeta = [C](double v) { return -C * std::sin(v); };
    prof.d2zeta = [C](double v) { return -C * std::cos(v); };
    prof.v0 = 0.02;
    prof.v1 = M_PI - 0.02;
    auto rev = std::make_shared<RevolutionChart>(prof);
    double t_mid = rev->t_of_v(M_PI / 2);  // center t = 0 on the equator
    c.eval = [rev, t_mid](double x, double t) { return rev->eval(x, t + t_mid); };
    c.default_grid = make_grid(0, 2 * M_PI, -tmax, tmax, 128, 128, true, false);
    c.metadata = {true, true, "umbilics lie at the excluded poles"};
  } else {
    throw SchemaError("unknown gallery entry '" + name + "'");
  }
  return c;
}

ImmersionSample sample_chart(const GalleryChart& chart, const ChartGrid& grid) {
  grid.validate();
  ImmersionSample s;
  s.grid = grid;
  s.X = Field<Vec3>(grid);
  s.Xx = Field<Vec3>(grid);
  s.Xy = Field<Vec3>(grid);
  s.Xxx = Field<Vec3>(grid);
  s.Xxy = Field<Vec3>(grid);
  s.Xyy = Field<Vec3>(grid);
  s.derivative_source = DerivativeSource::Analytic;
  s.metadata = chart.metadata;
  s.tol_conf = chart.tol_conf;
  parallel_for(grid.ny, [&](int jb, int je) {
    for (int j = jb; j < je; ++j)
      for (int i = 0; i < grid.nx; ++i) {
        ImmersionJet jet = chart.eval(grid.x(i), grid.y(j));
        s.X(i, j) = jet.X;
        s.Xx(i, j) = jet.Xx;
        s.Xy(i, j) = jet.Xy;
        s.Xxx(i, j) = jet.Xxx;
        s.Xxy(i, j) = jet.Xxy;
        s.Xyy(i, j) = jet.Xyy;
      }
  });
  return s;
}

ImmersionSample sample_gallery(const std::string& name,
                               const std::map<std::string, double>& params,
                               const ChartGrid& grid) {
  return sample_chart(gallery_chart(name, params), grid);
}

ImmersionSample sample_gallery(const std::string& name,
                               const std::map<std::string, double>& params) {
  GalleryChart c = gallery_chart(name, params);
  return sample_chart(c, c.default_grid);
}

namespace {
// 5-point Gauss-Legendre on [-1, 1]
const double kGlX[5] = {-0.906179845938664, -0.5384693101056831, 0.0, 0.5384693101056831,
                        0.906179845938664};
const double kGlW[5] = {0.23692688505618908, 0.47862867049936647, 0.5688888888888889,
                        0.47862867049936647, 0.23692688505618908};
}  // namespace

RevolutionChart::RevolutionChart(ProfileCurve p, int panels) : p_(std::move(p)) {
  if (!(p_.v1 > p_.v0)) throw SchemaError("profile: require v1 > v0");
  auto integrand = [this](double v) {
    double rho = p_.rho(v);
    if (!(rho > 0)) throw PreconditionError("profile: rho must stay positive");
    double dr = p_.drho(v), dz = p_.dzeta(v);
    double speed = std::hypot(dr, dz);
    if (speed == 0) throw PreconditionError("profile: (rho', zeta') must not vanish");
    return speed / rho;
  };
  vs_.resize(size_t(panels) + 1);
  ts_.resize(size_t(panels) + 1);
  double h = (p_.v1 - p_.v0) / panels;
  vs_[0] = p_.v0;
  ts_[0] = 0;
  for (int k = 0; k < panels; ++k) {
    double a = p_.v0 + k * h, b = a + h;
    double acc = 0;
    for (int q = 0; q < 5; ++q) acc += kGlW[q] * integrand(0.5 * (a + b) + 0.5 * h * kGlX[q]);
    vs_[size_t(k) + 1] = b;
    ts_[size_t(k) + 1] = ts_[size_t(k)] + 0.5 * h * acc;
    if (!(ts_[size_t(k) + 1] > ts_[size_t(k)]))
      throw PreconditionError("profile: t(v) failed to be strictly monotone");
  }
}

double RevolutionChart::refine_t(double v) const {
  v = std::clamp(v, p_.v0, p_.v1);
  size_t i = size_t(std::upper_bound(vs_.begin(), vs_.end(), v) - vs_.begin());
  if (i > 0) --i;
  if (i >= vs_.size() - 1) i = vs_.size() - 2;
  double a = vs_[i], h = v - a;
  if (h == 0) return ts_[i];
  double acc = 0;
  for (int q = 0; q < 5; ++q) {
    double vv = 0.5 * (a + v) + 0.5 * h * kGlX[q];
    double speed = std::hypot(p_.drho(vv), p_.dzeta(vv));
    acc += kGlW[q] * speed / p_.rho(vv);
  }
  return ts_[i] + 0.5 * h * acc;
}

double RevolutionChart::t_of_v(double v) const {
  if (v < p_.v0 - 1e-12 || v > p_.v1 + 1e-12)
    throw PreconditionError("t_of_v: v outside the profile range");
  return refine_t(v);
}

double RevolutionChart::v_of_t(double t) const {
  double span = ts_.back();
  if (p_.closed) {
    t = std::fmod(t, span);
    if (t < 0) t += span;
  } else if (t < -1e-12 || t > span + 1e-12) {
    throw PreconditionError("v_of_t: t outside the chart's isothermal range");
  }
  t = std::clamp(t, 0.0, span);
  size_t i = size_t(std::upper_bound(ts_.begin(), ts_.end(), t) - ts_.begin());
  if (i > 0) --i;
  if (i >= ts_.size() - 1) i = ts_.size() - 2;
  double frac = (t - ts_[i]) / (ts_[i + 1] - ts_[i]);
  double v = vs_[i] + frac * (vs_[i + 1] - vs_[i]);
  for (int it = 0; it < 8; ++it) {
    double f = refine_t(v) - t;
    double speed = std::hypot(p_.drho(v), p_.dzeta(v));
    double step = f * p_.rho(v) / speed;
    v -= step;
    v = std::clamp(v, p_.v0, p_.v1);
    if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(v))) break;
  }
  return v;
}

ImmersionJet RevolutionChart::eval(double x, double t) const {
  double v = v_of_t(t);
  double rho = p_.rho(v), drho = p_.drho(v), d2rho = p_.d2rho(v);
  double zeta = p_.zeta(v), dzeta = p_.dzeta(v), d2zeta = p_.d2zeta(v);
  double s = std::hypot(drho, dzeta);
  double ds = (drho * d2rho + dzeta * d2zeta) / s;
  double vt = rho / s;
  double vtt = ((drho * s - rho * ds) / (s * s)) * vt;
  Jet2 vj{v, 0, vt, 0, 0, vtt};
  Jet2 rj = chain(vj, rho, drho, d2rho);
  Jet2 zj = chain(vj, zeta, dzeta, d2zeta);
  Jet2 X = Jet2::var_x(x);
  return pack_jet(rj * cos(X), rj * sin(X), zj);
}

ImmersionSample RevolutionChart::sample(const ChartGrid& grid) const {
  GalleryChart c;
  c.eval = [this](double x, double t) { return eval(x, t); };
  c.metadata.compact = p_.closed && grid.periodic_y;
  c.metadata.simply_connected = !c.metadata.compact;
  return sample_chart(c, grid);
}

ImmersionSample make_revolution_chart(const ProfileCurve& profile, const ChartGrid& grid) {
  RevolutionChart rc(profile);
  return rc.sample(grid);
}

Field<Vec3> unit_normal(const ImmersionSample& s) {
  Field<Vec3> n(s.grid);
  for (int j = 0; j < s.grid.ny; ++j)
    for (int i = 0; i < s.grid.nx; ++i) {
      Vec3 c = cross(s.Xx(i, j), s.Xy(i, j));
      double len = norm(c);
      if (len < 1e-12)
        throw PreconditionError("degenerate immersion at node (" + std::to_string(i) + "," +
                                std::to_string(j) + "): |X_x x X_y| < 1e-12");
      n(i, j) = (1.0 / len) * c;
    }
  return n;
}

Reparam affine_reparam(cplx a, cplx b) {
  if (std::abs(a) == 0) throw SchemaError("affine reparametrization needs a != 0");
  Reparam r;
  r.name = "affine";
  r.z_of_w = [a, b](cplx w) { return (w - b) / a; };
  r.dz_dw = [a](cplx) { return cplx(1, 0) / a; };
  r.d2z_dw2 = [](cplx) { return cplx(0, 0); };
  return r;
}

Reparam quadratic_reparam(double eps) {
  Reparam r;
  r.name = "quadratic";
  r.z_of_w = [eps](cplx w) { return (std::sqrt(cplx(1, 0) + 4.0 * eps * w) - 1.0) / (2 * eps); };
  r.dz_dw = [eps](cplx w) { return std::pow(cplx(1, 0) + 4.0 * eps * w, -0.5); };
  r.d2z_dw2 = [eps](cplx w) {
    return -2.0 * eps * std::pow(cplx(1, 0) + 4.0 * eps * w, -1.5);
  };
  return r;
}

ImmersionSample reparametrize(const JetEval& eval, const Reparam& phi, const ChartGrid& wgrid,
                              const ChartMetadata& meta, double tol_conf) {
  GalleryChart c;
  c.metadata = meta;
  c.tol_conf = tol_conf;
  c.eval = [&eval, &phi](double sig, double eta) {
    cplx w(sig, eta);
    cplx z = phi.z_of_w(w), zp = phi.dz_dw(w), zpp = phi.d2z_dw2(w);
    if (!(std::abs(zp) > 0))
      throw PreconditionError("reparametrization: phi' vanishes on the chart");
    // Cauchy-Riemann seeds of x(sig,eta), y(sig,eta) from z' and z''
    double xs = zp.real(), xe = -zp.imag(), ys = zp.imag(), ye = zp.real();
    double xss = zpp.real(), xse = -zpp.imag(), xee = -zpp.real();
    double yss = zpp.imag(), yse = zpp.real(), yee = -zpp.imag();
    ImmersionJet J = eval(z.real(), z.imag());
    ImmersionJet out;
    out.X = J.X;
    out.Xx = xs * J.Xx + ys * J.Xy;
    out.Xy = xe * J.Xx + ye * J.Xy;
    out.Xxx = (xs * xs) * J.Xxx + (2 * xs * ys) * J.Xxy + (ys * ys) * J.Xyy + xss * J.Xx +
              yss * J.Xy;
    out.Xxy = (xs * xe) * J.Xxx + (xs * ye + xe * ys) * J.Xxy + (ys * ye) * J.Xyy +
              xse * J.Xx + yse * J.Xy;
    out.Xyy = (xe * xe) * J.Xxx + (2 * xe * ye) * J.Xxy + (ye * ye) * J.Xyy + xee * J.Xx +
              yee * J.Xy;
    return out;
  };
  return sample_chart(c, wgrid);
}

void export_chart_table(const ImmersionSample& s, const std::string& table_path,
                        bool with_derivatives) {
  std::ofstream os(table_path);
  if (!os) throw SchemaError("cannot open table file for writing: " + table_path);
  os << "i,j,X0,X1,X2";
  if (with_derivatives)
    os << ",Xx0,Xx1,Xx2,Xy0,Xy1,Xy2,Xxx0,Xxx1,Xxx2,Xxy0,Xxy1,Xxy2,Xyy0,Xyy1,Xyy2";
  os << "\n";
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, ",%.17g", v);
    os << buf;
  };
  for (int j = 0; j < s.grid.ny; ++j)
    for (int i = 0; i < s.grid.nx; ++i) {
      os << i << "," << j;
      for (double v : {s.X(i, j).x, s.X(i, j).y, s.X(i, j).z}) put(v);
      if (with_derivatives) {
        for (const Field<Vec3>* f : {&s.Xx, &s.Xy, &s.Xxx, &s.Xxy, &s.Xyy}) {
          Vec3 val = (*f)(i, j);
          put(val.x);
          put(val.y);
          put(val.z);
        }
      }
      os << "\n";
    }
}

namespace {
std::vector<double> parse_row(const std::string& line, const std::string& path) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      size_t pos = 0;
      double v = std::stod(tok, &pos);
      out.push_back(v);
    } catch (...) {
      throw SchemaError("table " + path + ": non-numeric entry '" + tok + "'");
    }
  }
  return out;
}

RealField component(const Field<Vec3>& f, int c) {
  RealField out(f.nx, f.ny);
  for (size_t k = 0; k < f.size(); ++k)
    out[k] = c == 0 ? f[k].x : (c == 1 ? f[k].y : f[k].z);
  return out;
}

void set_component(Field<Vec3>& f, int c, const RealField& v) {
  for (size_t k = 0; k < f.size(); ++k) {
    if (c == 0) f[k].x = v[k];
    if (c == 1) f[k].y = v[k];
    if (c == 2) f[k].z = v[k];
  }
}
}  // namespace

ImmersionSample ingest_table(const ChartGrid& grid, const ChartMetadata& meta,
                             const std::string& table_path, bool has_derivatives,
                             Scheme scheme, double tol_conf) {
  grid.validate();
  std::ifstream is(table_path);
  if (!is) throw SchemaError("cannot open table file: " + table_path);
  std::string header;
  if (!std::getline(is, header)) throw SchemaError("table " + table_path + ": empty file");
  const size_t want_cols = has_derivatives ? 20 : 5;
  ImmersionSample s;
  s.grid = grid;
  s.X = Field<Vec3>(grid);
  s.Xx = Field<Vec3>(grid);
  s.Xy = Field<Vec3>(grid);
  s.Xxx = Field<Vec3>(grid);
  s.Xxy = Field<Vec3>(grid);
  s.Xyy = Field<Vec3>(grid);
  s.metadata = meta;
  s.tol_conf = tol_conf;
  s.derivative_source = has_derivatives ? DerivativeSource::Analytic : DerivativeSource::Numerical;
  std::string line;
  size_t rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> vals = parse_row(line, table_path);
    if (vals.size() != want_cols)
      throw SchemaError("table " + table_path + ": expected " + std::to_string(want_cols) +
                        " columns, got " + std::to_string(vals.size()));
    int i = int(vals[0]), j = int(vals[1]);
    if (i < 0 || i >= grid.nx || j < 0 || j >= grid.ny)
      throw SchemaError("table " + table_path + ": node index out of range");
    for (double v : vals)
      if (!std::isfinite(v)) throw SchemaError("table " + table_path + ": non-finite entry");
    s.X(i, j) = {vals[2], vals[3], vals[4]};
    if (has_derivatives) {
      s.Xx(i, j) = {vals[5], vals[6], vals[7]};
      s.Xy(i, j) = {vals[8], vals[9], vals[10]};
      s.Xxx(i, j) = {vals[11], vals[12], vals[13]};
      s.Xxy(i, j) = {vals[14], vals[15], vals[16]};
      s.Xyy(i, j) = {vals[17], vals[18], vals[19]};
    }
    ++rows;
  }
  if (rows != size_t(grid.size()))
    throw SchemaError("table " + table_path + ": expected " + std::to_string(grid.size()) +
                      " rows, got " + std::to_string(rows));
  if (!has_derivatives) {
    Deriv d(grid, scheme);
    for (int comp = 0; comp < 3; ++comp) {
      RealField pos = component(s.X, comp);
      set_component(s.Xx, comp, d.dx(pos, 1));
      set_component(s.Xy, comp, d.dy(pos, 1));
      set_component(s.Xxx, comp, d.dx(pos, 2));
      set_component(s.Xyy, comp, d.dy(pos, 2));
      set_component(s.Xxy, comp, d.dy(d.dx(pos, 1), 1));
    }
  }
  unit_normal(s);  // enforces the immersion condition
  return s;
}

ImmersionSample decimate_sample(const ImmersionSample& s, int factor, Scheme scheme) {
  if (factor < 1) throw SchemaError("decimation factor must be positive");
  if (factor == 1) return s;
  const ChartGrid& g = s.grid;
  ChartGrid c = g;
  auto reduce = [&](int n, bool periodic, const char* axis) {
    int span = periodic ? n : n - 1;
    if (span % factor != 0)
      throw SchemaError(std::string("grid ") + axis + " count " + std::to_string(n) +
                        " cannot be decimated by " + std::to_string(factor));
    return periodic ? n / factor : span / factor + 1;
  };
  c.nx = reduce(g.nx, g.periodic_x, "x");
  c.ny = reduce(g.ny, g.periodic_y, "y");
  c.validate();

  ImmersionSample out;
  out.grid = c;
  out.metadata = s.metadata;
  out.tol_conf = s.tol_conf;
  out.derivative_source = s.derivative_source;
  for (Field<Vec3>* f : {&out.X, &out.Xx, &out.Xy, &out.Xxx, &out.Xxy, &out.Xyy})
    *f = Field<Vec3>(c);
  for (int j = 0; j < c.ny; ++j)
    for (int i = 0; i < c.nx; ++i) {
      out.X(i, j) = s.X(i * factor, j * factor);
      out.Xx(i, j) = s.Xx(i * factor, j * factor);
      out.Xy(i, j) = s.Xy(i * factor, j * factor);
      out.Xxx(i, j) = s.Xxx(i * factor, j * factor);
      out.Xxy(i, j) = s.Xxy(i * factor, j * factor);
      out.Xyy(i, j) = s.Xyy(i * factor, j * factor);
    }
  if (s.derivative_source == DerivativeSource::Numerical) {
    Deriv d(c, scheme);
    for (int comp = 0; comp < 3; ++comp) {
      RealField pos = component(out.X, comp);
      set_component(out.Xx, comp, d.dx(pos, 1));
      set_component(out.Xy, comp, d.dy(pos, 1));
      set_component(out.Xxx, comp, d.dx(pos, 2));
      set_component(out.Xyy, comp, d.dy(pos, 2));
      set_component(out.Xxy, comp, d.dy(d.dx(pos, 1), 1));
    }
  }
  unit_normal(out);
  return out;
}

}  // namespace bonnetlab
