#include "bonnetlab/invariants.hpp"

#include <algorithm>
#include <cmath>

#include "bonnetlab/errors.hpp"

namespace bonnetlab {

FundamentalForms fundamental_forms(const ImmersionSample& s) {
  const ChartGrid& g = s.grid;
  Field<Vec3> n = unit_normal(s);
  FundamentalForms ff;
  ff.grid = g;
  ff.metadata = s.metadata;
  ff.tol_conf = s.tol_conf;
  ff.E = RealField(g.nx, g.ny);
  ff.F = RealField(g.nx, g.ny);
  ff.G = RealField(g.nx, g.ny);
  ff.e2 = RealField(g.nx, g.ny);
  ff.f2 = RealField(g.nx, g.ny);
  ff.g2 = RealField(g.nx, g.ny);
  int total = int(ff.E.v.size());
  parallel_for(total, [&](int begin, int end) {
    for (int k = begin; k < end; ++k) {
      ff.E.v[k] = dot(s.Xx.v[k], s.Xx.v[k]);
      ff.F.v[k] = dot(s.Xx.v[k], s.Xy.v[k]);
      ff.G.v[k] = dot(s.Xy.v[k], s.Xy.v[k]);
      ff.e2.v[k] = dot(n.v[k], s.Xxx.v[k]);
      ff.f2.v[k] = dot(n.v[k], s.Xxy.v[k]);
      ff.g2.v[k] = dot(n.v[k], s.Xyy.v[k]);
    }
  });
  double worst = 0;
  for (int k = 0; k < total; ++k) {
    double scale = std::max(ff.E.v[k], ff.G.v[k]);
    double defect = std::max(std::abs(ff.E.v[k] - ff.G.v[k]), std::abs(ff.F.v[k])) / scale;
    worst = std::max(worst, defect);
  }
  ff.conformality_residual = worst;
  return ff;
}

ConformalInvariants conformal_invariants(const FundamentalForms& ff, double tol_conf) {
  if (!(ff.conformality_residual <= tol_conf)) {
    throw ConformalityError(
        "chart is not conformal: residual " + std::to_string(ff.conformality_residual) +
            " exceeds tolerance " + std::to_string(tol_conf),
        ff.conformality_residual);
  }
  const ChartGrid& g = ff.grid;
  ConformalInvariants ci;
  ci.grid = g;
  ci.metadata = ff.metadata;
  ci.conformality_residual = ff.conformality_residual;
  ci.tol_conf = tol_conf;
  ci.u = RealField(g.nx, g.ny);
  ci.e2u = RealField(g.nx, g.ny);
  ci.H = RealField(g.nx, g.ny);
  ci.h = ComplexField(g.nx, g.ny);
  ci.K = RealField(g.nx, g.ny);
  parallel_for(int(ci.u.v.size()), [&](int begin, int end) {
    for (int k = begin; k < end; ++k) {
      double E = ff.E.v[k];
      ci.e2u.v[k] = E;
      ci.u.v[k] = 0.5 * std::log(E);
      double H = (ff.e2.v[k] + ff.g2.v[k]) / (2.0 * E);
      cplx h((ff.e2.v[k] - ff.g2.v[k]) / (2.0 * E), -ff.f2.v[k] / E);
      ci.H.v[k] = H;
      ci.h.v[k] = h;
      ci.K.v[k] = H * H - std::norm(h);
    }
  });
  return ci;
}

ConformalInvariants conformal_invariants(const ImmersionSample& s) {
  return conformal_invariants(fundamental_forms(s), s.tol_conf);
}

RealField gauss_residual(const ConformalInvariants& ci, const Deriv& d) {
  RealField lap = d.flat_laplacian(ci.u);
  RealField res(ci.grid.nx, ci.grid.ny);
  for (size_t k = 0; k < res.v.size(); ++k) {
    double lhs = -lap.v[k] / ci.e2u.v[k];  // -4 e^{-2u} u_{z zbar}
    res.v[k] = std::abs(lhs - ci.K.v[k]);
  }
  return res;
}

RealField codazzi_residual(const ConformalInvariants& ci, const Deriv& d) {
  const ChartGrid& g = ci.grid;
  ComplexField W(g.nx, g.ny);
  for (size_t k = 0; k < W.v.size(); ++k) W.v[k] = ci.e2u.v[k] * ci.h.v[k];
  ComplexField lhs = d.d_zbar(W);
  ComplexField Hz = d.d_z(to_complex(ci.H));
  RealField res(g.nx, g.ny);
  for (size_t k = 0; k < res.v.size(); ++k) {
    res.v[k] = std::abs(lhs.v[k] - ci.e2u.v[k] * Hz.v[k]);
  }
  return res;
}

StructureStats structure_stats(const ConformalInvariants& ci, const Deriv& d) {
  StructureStats st;
  st.gauss_max = max_abs(gauss_residual(ci, d));
  st.codazzi_max = max_abs(codazzi_residual(ci, d));
  return st;
}

double nonconstancy_fraction(const ConformalInvariants& ci, const Deriv& d, double tol) {
  ComplexField Hz = d.d_z(to_complex(ci.H));
  double hmax = max_abs(ci.H);
  double lx = ci.grid.x1 - ci.grid.x0;
  double ly = ci.grid.y1 - ci.grid.y0;
  double lchar = std::max(lx, ly);
  double threshold = tol * std::max(1.0, hmax) / lchar;
  size_t count = 0;
  for (const cplx& v : Hz.v) {
    if (std::abs(v) > threshold) ++count;
  }
  return double(count) / double(Hz.v.size());
}

}  // namespace bonnetlab
