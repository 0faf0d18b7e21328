#include "bonnetlab/hopf.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <queue>

#include "bonnetlab/errors.hpp"

namespace bonnetlab {

namespace {

int wrap_index(int i, int n, bool periodic) {
  if (periodic) return ((i % n) + n) % n;
  return (i < 0 || i >= n) ? -1 : i;
}

std::string format_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

UmbilicReport umbilic_mask(const ConformalInvariants& ci, double tol_umb) {
  const ChartGrid& g = ci.grid;
  int n = g.nx * g.ny;
  std::vector<double> q((size_t)n);
  double scale_ref = 0;
  for (int k = 0; k < n; ++k) {
    q[size_t(k)] = ci.e2u.v[size_t(k)] * std::abs(ci.h.v[size_t(k)]);
    scale_ref = std::max(
        scale_ref, ci.e2u.v[size_t(k)] * (std::abs(ci.h.v[size_t(k)]) + std::abs(ci.H.v[size_t(k)])));
  }
  double med = median(q);
  // the median alone collapses on totally umbilic charts, so keep a scale floor
  double threshold = tol_umb * std::max(med, 1e-6 * scale_ref);

  UmbilicReport rep;
  rep.threshold = threshold;
  rep.mask = Mask(g.nx, g.ny);
  for (int k = 0; k < n; ++k) {
    bool m = q[size_t(k)] <= threshold;
    rep.mask.v[size_t(k)] = m ? 1 : 0;
    if (m) ++rep.masked_count;
  }
  rep.totally_umbilic = (rep.masked_count == n);
  if (rep.totally_umbilic) {
    rep.component_count = 1;
    rep.largest_component = n;
    rep.discrete = false;
    return rep;
  }

  std::vector<int> label((size_t)n, -1);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      int k = j * g.nx + i;
      if (!rep.mask.v[size_t(k)] || label[size_t(k)] >= 0) continue;
      int size = 0;
      std::queue<std::pair<int, int>> bfs;
      bfs.push({i, j});
      label[size_t(k)] = rep.component_count;
      while (!bfs.empty()) {
        auto [ci_, cj] = bfs.front();
        bfs.pop();
        ++size;
        const int di[4] = {1, -1, 0, 0};
        const int dj[4] = {0, 0, 1, -1};
        for (int t = 0; t < 4; ++t) {
          int ni = wrap_index(ci_ + di[t], g.nx, g.periodic_x);
          int nj = wrap_index(cj + dj[t], g.ny, g.periodic_y);
          if (ni < 0 || nj < 0) continue;
          int nk = nj * g.nx + ni;
          if (rep.mask.v[size_t(nk)] && label[size_t(nk)] < 0) {
            label[size_t(nk)] = rep.component_count;
            bfs.push({ni, nj});
          }
        }
      }
      rep.largest_component = std::max(rep.largest_component, size);
      ++rep.component_count;
    }
  }
  rep.discrete = rep.largest_component <= kDiscreteComponentMax;
  return rep;
}

LogHopfDerivatives log_hopf_derivatives(const ConformalInvariants& ci, const Deriv& d,
                                        double tol_umb) {
  const ChartGrid& g = ci.grid;
  LogHopfDerivatives lh;
  lh.grid = g;
  lh.e2u = ci.e2u;
  lh.report = umbilic_mask(ci, tol_umb);

  ComplexField W(g.nx, g.ny);
  for (size_t k = 0; k < W.v.size(); ++k) W.v[k] = ci.e2u.v[k] * ci.h.v[k];
  ComplexField Wz = d.d_z(W);
  ComplexField Wzb = d.d_zbar(W);
  ComplexField Wzzb = d.d_zzbar(W);

  lh.Phi = ComplexField(g.nx, g.ny);
  lh.Psi = ComplexField(g.nx, g.ny);
  lh.delta_g = RealField(g.nx, g.ny);
  for (size_t k = 0; k < W.v.size(); ++k) {
    if (lh.report.mask.v[k]) continue;  // leave zeros at umbilic nodes
    cplx w = W.v[k];
    lh.Phi.v[k] = Wzb.v[k] / w;
    lh.Psi.v[k] = Wzzb.v[k] / w - Wzb.v[k] * Wz.v[k] / (w * w);
    lh.delta_g.v[k] = 4.0 / ci.e2u.v[k] * lh.Psi.v[k].imag();
  }

  // derivatives within stencil reach of a masked node inherit its contamination
  int reach = (d.scheme() == Scheme::Fd2) ? 1 : 2;
  lh.low_confidence = Mask(g.nx, g.ny);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      bool flagged = false;
      for (int dj = -reach; dj <= reach && !flagged; ++dj)
        for (int di = -reach; di <= reach && !flagged; ++di) {
          int ni = wrap_index(i + di, g.nx, g.periodic_x);
          int nj = wrap_index(j + dj, g.ny, g.periodic_y);
          if (ni < 0 || nj < 0) continue;
          if (lh.report.mask(ni, nj)) flagged = true;
        }
      lh.low_confidence(i, j) = flagged ? 1 : 0;
    }
  return lh;
}

InvarianceCheck chart_invariance_check(const JetEval& eval, const ChartGrid& zgrid,
                                       const Reparam& phi, const ChartGrid& wgrid,
                                       Scheme scheme, double tol_conf) {
  if (wgrid.periodic_x || wgrid.periodic_y) {
    throw SchemaError("chart invariance window must be non-periodic");
  }
  ChartMetadata meta;
  GalleryChart base;
  base.eval = eval;

  ImmersionSample sz = sample_chart(base, zgrid);
  sz.tol_conf = tol_conf;
  ConformalInvariants cz = conformal_invariants(sz);
  Deriv dz(zgrid, scheme);
  LogHopfDerivatives lz = log_hopf_derivatives(cz, dz);

  ImmersionSample sw = reparametrize(eval, phi, wgrid, meta, tol_conf);
  ConformalInvariants cw = conformal_invariants(sw);
  Deriv dw(wgrid, scheme);
  LogHopfDerivatives lw = log_hopf_derivatives(cw, dw);

  InvarianceCheck chk;
  chk.floor = std::max(structure_floor(cz, dz), structure_floor(cw, dw));

  Interpolator interp(zgrid, to_complex(lz.delta_g));
  double margin_x = zgrid.periodic_x ? 0.0 : 2.5 * zgrid.hx();
  double margin_y = zgrid.periodic_y ? 0.0 : 2.5 * zgrid.hy();
  int skirt = 3;  // keep clear of the w-chart closure rows
  for (int j = skirt; j < wgrid.ny - skirt; ++j)
    for (int i = skirt; i < wgrid.nx - skirt; ++i) {
      if (lw.low_confidence(i, j)) continue;
      cplx z = phi.z_of_w(cplx(wgrid.x(i), wgrid.y(j)));
      if (!zgrid.periodic_x &&
          (z.real() < zgrid.x0 + margin_x || z.real() > zgrid.x1 - margin_x))
        continue;
      if (!zgrid.periodic_y &&
          (z.imag() < zgrid.y0 + margin_y || z.imag() > zgrid.y1 - margin_y))
        continue;
      double ref = interp(z.real(), z.imag()).real();
      chk.max_difference = std::max(chk.max_difference, std::abs(lw.delta_g(i, j) - ref));
      ++chk.compared;
    }
  if (chk.compared < 16) {
    throw PreconditionError("chart invariance window shares too few trusted nodes");
  }
  chk.passed = chk.max_difference <= chk.floor;
  return chk;
}

const char* kind_name(SurfaceKind k) {
  switch (k) {
    case SurfaceKind::TotallyUmbilic: return "totally-umbilic";
    case SurfaceKind::Cmc: return "cmc";
    case SurfaceKind::Isothermic: return "isothermic";
    case SurfaceKind::TotallyNonisothermic: return "totally-nonisothermic";
    case SurfaceKind::Mixed: return "mixed";
  }
  return "mixed";
}

double structure_floor(const ConformalInvariants& ci, const Deriv& d) {
  RealField gauss = gauss_residual(ci, d);
  RealField cod = codazzi_residual(ci, d);
  double worst = 0;
  for (size_t k = 0; k < gauss.v.size(); ++k) {
    double scaled_cod = cod.v[k] / std::pow(ci.e2u.v[k], 1.5);
    worst = std::max({worst, gauss.v[k], scaled_cod});
  }
  return 10.0 * worst;
}

Classification classify(const ConformalInvariants& ci, const LogHopfDerivatives& lh,
                        const Deriv& d) {
  Classification cl;
  cl.floor = structure_floor(ci, d);
  cl.nonconstancy = nonconstancy_fraction(ci, d);

  if (lh.report.totally_umbilic) {
    cl.kind = SurfaceKind::TotallyUmbilic;
    cl.detail = "second form is umbilic at every node";
    return cl;
  }
  if (cl.nonconstancy < kCmcNonconstancyGate) {
    cl.kind = SurfaceKind::Cmc;
    cl.detail = "H is constant to measurement precision (nonconstancy fraction " +
                format_num(cl.nonconstancy) + ")";
    return cl;
  }

  int trusted = 0, above = 0, pos = 0, neg = 0;
  for (size_t k = 0; k < lh.delta_g.v.size(); ++k) {
    if (lh.low_confidence.v[k]) continue;
    ++trusted;
    double dg = lh.delta_g.v[k];
    cl.max_delta_g = std::max(cl.max_delta_g, std::abs(dg));
    if (std::abs(dg) > cl.floor) {
      ++above;
      (dg > 0 ? pos : neg)++;
    }
  }
  if (trusted == 0) {
    cl.kind = SurfaceKind::Mixed;
    cl.detail = "no trusted nodes outside the umbilic skirt";
    return cl;
  }
  cl.above_floor_fraction = double(above) / double(trusted);
  if (above > 0) {
    cl.positive_fraction = double(pos) / double(above);
    cl.negative_fraction = double(neg) / double(above);
  }

  if (cl.max_delta_g <= cl.floor) {
    cl.kind = SurfaceKind::Isothermic;
    cl.detail = "max |delta_g| " + format_num(cl.max_delta_g) +
                " stays under the structure floor " + format_num(cl.floor);
  } else if (cl.above_floor_fraction >= kSignFractionGate &&
             std::max(cl.positive_fraction, cl.negative_fraction) >= kSignFractionGate) {
    cl.kind = SurfaceKind::TotallyNonisothermic;
    cl.detail = "delta_g clears the floor on " + format_num(100 * cl.above_floor_fraction) +
                "% of trusted nodes with a single sign";
  } else {
    cl.kind = SurfaceKind::Mixed;
    cl.detail = format_num(100 * cl.above_floor_fraction) +
                "% of trusted nodes clear the floor; sign split " +
                format_num(cl.positive_fraction) + " / " + format_num(cl.negative_fraction);
  }
  return cl;
}

}  // namespace bonnetlab
