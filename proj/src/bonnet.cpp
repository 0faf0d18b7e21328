#include "bonnetlab/bonnet.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "bonnetlab/errors.hpp"

namespace bonnetlab {

namespace {

const double kPi = 3.14159265358979323846;

std::string format_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

int wrap_index(int i, int n, bool periodic) {
  if (periodic) return ((i % n) + n) % n;
  return (i < 0 || i >= n) ? -1 : i;
}

}  // namespace

DeformationDifferential deformation_differential(const ConformalInvariants& ci,
                                                 const ConformalInvariants& mate, const Deriv& d,
                                                 double tol_pair) {
  const ChartGrid& g = ci.grid;
  if (mate.grid.nx != g.nx || mate.grid.ny != g.ny) {
    throw PreconditionError("not a candidate pair: charts use different grids");
  }
  double du = 0, dH = 0, uscale = 1.0, hscale = 1.0;
  for (size_t k = 0; k < ci.u.v.size(); ++k) {
    du = std::max(du, std::abs(ci.u.v[k] - mate.u.v[k]));
    dH = std::max(dH, std::abs(ci.H.v[k] - mate.H.v[k]));
    uscale = std::max(uscale, std::abs(ci.u.v[k]));
    hscale = std::max(hscale, std::abs(ci.H.v[k]));
  }
  if (du > tol_pair * uscale) {
    throw PreconditionError("not a candidate pair: metrics disagree, max |u - u'| = " +
                            format_num(du));
  }
  if (dH > tol_pair * hscale) {
    throw PreconditionError("not a candidate pair: mean curvatures disagree, max |H - H'| = " +
                            format_num(dH));
  }

  DeformationDifferential dd;
  dd.F = ComplexField(g.nx, g.ny);
  for (size_t k = 0; k < dd.F.v.size(); ++k) {
    dd.F.v[k] = ci.e2u.v[k] * (mate.h.v[k] - ci.h.v[k]);
  }
  dd.holomorphy_residual = max_abs(d.d_zbar(dd.F));
  for (size_t k = 0; k < dd.F.v.size(); ++k) {
    double W = ci.e2u.v[k] * std::abs(ci.h.v[k]);
    double shifted = std::abs(dd.F.v[k] + ci.e2u.v[k] * ci.h.v[k]);
    dd.modulus_residual = std::max(dd.modulus_residual, std::abs(shifted - W));
  }
  return dd;
}

ConformalInvariants associate_family(const ConformalInvariants& ci, double theta, const Deriv& d) {
  UmbilicReport umb = umbilic_mask(ci);
  if (umb.totally_umbilic) {
    throw PreconditionError(
        "associate family is trivial on a totally umbilic chart: rotating h = 0 changes nothing");
  }
  double nc = nonconstancy_fraction(ci, d);
  if (nc >= 0.01) {
    throw PreconditionError(
        "associate family needs constant H: rotating the Hopf field of a chart with "
        "nonconstant H (fraction " +
        format_num(nc) + ") violates the Codazzi equation");
  }
  ConformalInvariants out = ci;
  cplx phase = std::exp(cplx(0, theta));
  for (size_t k = 0; k < out.h.v.size(); ++k) {
    out.h.v[k] = phase * ci.h.v[k];
    out.K.v[k] = ci.H.v[k] * ci.H.v[k] - std::norm(out.h.v[k]);
  }
  return out;
}

int zero_winding(const ChartGrid& g, const ComplexField& F, cplx center, double radius,
                 int samples) {
  if (samples < 16) throw SchemaError("zero_winding needs at least 16 contour samples");
  if (radius <= 0) throw SchemaError("zero_winding needs a positive radius");
  Interpolator interp(g, F);
  std::vector<cplx> vals((size_t)samples);
  for (int k = 0; k < samples; ++k) {
    double ang = 2.0 * kPi * k / samples;
    cplx p = center + radius * std::exp(cplx(0, ang));
    if (!g.periodic_x && (p.real() < g.x0 || p.real() > g.x1)) {
      throw PreconditionError("zero_winding contour leaves the chart window");
    }
    if (!g.periodic_y && (p.imag() < g.y0 || p.imag() > g.y1)) {
      throw PreconditionError("zero_winding contour leaves the chart window");
    }
    vals[(size_t)k] = interp(p.real(), p.imag());
    if (std::abs(vals[(size_t)k]) < 1e-13) {
      throw PreconditionError("zero_winding contour passes through a zero of the field");
    }
  }
  double total = 0;
  for (int k = 0; k < samples; ++k) {
    cplx ratio = vals[size_t((k + 1) % samples)] / vals[(size_t)k];
    double step = std::arg(ratio);
    if (std::abs(step) >= kPi * 0.999) {
      throw PreconditionError(
          "zero_winding contour is invalid: a phase step reached pi, refine the sampling or "
          "move the contour");
    }
    total += step;
  }
  double turns = total / (2.0 * kPi);
  long nearest = std::lround(turns);
  if (std::abs(turns - double(nearest)) > 0.05) {
    throw PreconditionError("zero_winding accumulated a non-integer turn count " +
                            format_num(turns));
  }
  return int(nearest);
}

CandidateRotation candidate_mate_rotation(const LogHopfDerivatives& lh, double floor) {
  const ChartGrid& g = lh.grid;
  CandidateRotation cr;
  cr.grid = g;
  cr.A = ComplexField(g.nx, g.ny);
  cr.r = RealField(g.nx, g.ny);
  cr.degenerate = Mask(g.nx, g.ny);
  cr.near_identity = Mask(g.nx, g.ny);
  cr.degenerate_nodes = Mask(g.nx, g.ny);

  for (size_t k = 0; k < cr.A.v.size(); ++k) {
    cplx Phi = lh.Phi.v[k];
    cplx Psi = lh.Psi.v[k];
    double L = std::norm(Phi) - Psi.real();
    double gzz = Psi.imag();
    double D = gzz * gzz + L * L;
    double dg_floor = floor * (1.0 + std::norm(Psi));
    bool degen = D < 10.0 * dg_floor || lh.low_confidence.v[k] != 0;
    cplx A(1.0, 0.0);
    if (D > 0) {
      A = cplx(1.0, 0.0) + (-2.0 * gzz / D) * cplx(gzz, L);
    }
    cr.A.v[k] = A;
    double ang = std::atan2(A.imag(), A.real());
    cr.r.v[k] = (ang <= 0) ? ang + 2.0 * kPi : ang;
    bool near_id = std::abs(lh.delta_g.v[k]) <= floor;
    cr.degenerate.v[k] = degen ? 1 : 0;
    cr.near_identity.v[k] = near_id ? 1 : 0;
    bool either = degen || near_id;
    cr.degenerate_nodes.v[k] = either ? 1 : 0;
    if (either) {
      ++cr.degenerate_count;
    } else {
      cr.max_unit_defect = std::max(cr.max_unit_defect, std::abs(std::abs(A) - 1.0));
    }
  }
  int total = g.size();
  double frac = double(cr.degenerate_count) / double(total);
  if (cr.degenerate_count == total) {
    cr.diagnostic = "candidate degenerate: isothermic locus covers the whole chart";
  } else if (frac > 0.5) {
    cr.diagnostic = "candidate mostly degenerate (" + format_num(100 * frac) +
                    "% of nodes on the isothermic locus)";
  } else {
    cr.diagnostic = "candidate rotation defined on " + format_num(100 * (1 - frac)) +
                    "% of nodes";
  }
  return cr;
}

ConformalInvariants rotation_benchmark_chart(int n) {
  if (n < 8) throw SchemaError("rotation benchmark needs n >= 8");
  ChartGrid g = make_grid(-1, 1, -1, 1, n, n, false, false);
  ConformalInvariants ci;
  ci.grid = g;
  ci.u = RealField(g, 0.0);
  ci.e2u = RealField(g, 1.0);
  ci.H = RealField(g, 0.0);
  ci.h = ComplexField(g);
  ci.K = RealField(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      double x = g.x(i), t = g.y(j);
      double y = 1.2 - 0.45 * (x * x + t * t) - 0.03 * x;
      ci.h(i, j) = cplx(-0.5, y);
      ci.K(i, j) = -std::norm(ci.h(i, j));
    }
  return ci;
}

MateResiduals mate_consistency_residuals(const LogHopfDerivatives& lh,
                                         const CandidateRotation& cr, const Deriv& d) {
  const ChartGrid& g = lh.grid;
  MateResiduals mr;
  mr.support = Mask(g.nx, g.ny);

  // a node is wrapped when r jumps by more than pi toward any 4-neighbor
  Mask wrapped(g.nx, g.ny);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const int di[4] = {1, -1, 0, 0};
      const int dj[4] = {0, 0, 1, -1};
      bool bad = false;
      for (int t = 0; t < 4 && !bad; ++t) {
        int ni = wrap_index(i + di[t], g.nx, g.periodic_x);
        int nj = wrap_index(j + dj[t], g.ny, g.periodic_y);
        if (ni < 0 || nj < 0) continue;
        if (std::abs(cr.r(ni, nj) - cr.r(i, j)) > kPi) bad = true;
      }
      wrapped(i, j) = bad ? 1 : 0;
    }

  int reach = (d.scheme() == Scheme::Fd2) ? 1 : 2;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      bool ok = !cr.degenerate_nodes(i, j) && !lh.low_confidence(i, j);
      for (int dj2 = -reach; dj2 <= reach && ok; ++dj2)
        for (int di2 = -reach; di2 <= reach && ok; ++di2) {
          int ni = wrap_index(i + di2, g.nx, g.periodic_x);
          int nj = wrap_index(j + dj2, g.ny, g.periodic_y);
          if (ni < 0 || nj < 0) continue;
          if (wrapped(ni, nj)) ok = false;
        }
      mr.support(i, j) = ok ? 1 : 0;
      if (ok) ++mr.support_count;
    }
  if (mr.support_count < 16) {
    throw PreconditionError(
        "mate residuals have insufficient support: fewer than 16 trusted wrap-free nodes");
  }

  ComplexField rz_bar = d.d_zbar(cr.r);
  ComplexField rzz = d.d_zzbar(to_complex(cr.r));
  RealField lap = d.flat_laplacian(cr.r);

  mr.R1 = RealField(g.nx, g.ny);
  mr.R3 = RealField(g.nx, g.ny);
  mr.R1a = RealField(g.nx, g.ny);
  mr.drpdg = RealField(g.nx, g.ny);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      size_t k = size_t(j) * g.nx + i;
      cplx phase = std::exp(cplx(0, -cr.r.v[k]));
      cplx r1 = rz_bar.v[k] - cplx(0, 1) * lh.Phi.v[k] * (cplx(1, 0) - phase);
      mr.R1.v[k] = std::abs(r1);
      mr.R3.v[k] = std::abs(rzz.v[k] + 2.0 * lh.Psi.v[k].imag());
      mr.R1a.v[k] = std::abs(rzz.v[k]);
      mr.drpdg.v[k] = std::abs(lap.v[k] / lh.e2u.v[k] + 2.0 * lh.delta_g.v[k]);
      if (mr.support.v[k]) {
        mr.r1_max = std::max(mr.r1_max, mr.R1.v[k]);
        mr.r3_max = std::max(mr.r3_max, mr.R3.v[k]);
        mr.r1a_max = std::max(mr.r1a_max, mr.R1a.v[k]);
        mr.drpdg_max = std::max(mr.drpdg_max, mr.drpdg.v[k]);
      }
    }
  return mr;
}

BonnetVerdict theorem_verdict(bool compact, bool simply_connected, bool umbilics_discrete,
                              const Classification& cl) {
  BonnetVerdict v;
  auto held = [&](const std::string& name, bool ok) {
    v.hypotheses.push_back(name + ": " + (ok ? "holds" : "fails"));
  };
  held("compact", compact);
  held("simply connected", simply_connected);
  held("umbilic set discrete", umbilics_discrete);
  v.hypotheses.push_back(std::string("classification: ") + kind_name(cl.kind));

  if (cl.kind == SurfaceKind::TotallyUmbilic) {
    v.verdict = "totally-umbilic";
    v.narrative =
        "the second form is umbilic everywhere, so the chart is a piece of a round sphere or "
        "plane; every isometry preserving H is a congruence";
    return v;
  }
  if (cl.kind == SurfaceKind::Cmc) {
    if (simply_connected) {
      v.verdict = "cmc-associate-family-exists";
      v.narrative =
          "H is constant on a simply connected chart, so rotating the Hopf field through any "
          "angle yields a one-parameter family of noncongruent isometric mates";
    } else {
      v.verdict = "inconclusive";
      v.narrative =
          "H is constant but the chart is not simply connected; the associate family exists "
          "only locally and period closure is not checked here";
    }
    return v;
  }
  if (!compact || !umbilics_discrete) {
    v.verdict = "inconclusive";
    v.narrative = std::string("H varies, but ") +
                  (!compact ? "the chart is not compact" : "the umbilic set is not discrete") +
                  ", so the no-mate argument does not apply";
    return v;
  }
  if (cl.kind == SurfaceKind::Isothermic) {
    v.verdict = "no-mate-theorem-1";
    v.narrative =
        "compact, H nonconstant (fraction " + std::to_string(cl.nonconstancy).substr(0, 6) +
        "), umbilics discrete, and delta_g vanishes at the structure floor: the isothermic "
        "no-mate case applies, so no noncongruent Bonnet mate exists";
    return v;
  }
  if (cl.kind == SurfaceKind::TotallyNonisothermic) {
    bool positive = cl.positive_fraction >= cl.negative_fraction;
    std::string sign = positive ? "positive" : "negative";
    std::string branch = positive ? "r is superharmonic (laplace r = -2 delta_g < 0)"
                                  : "r is subharmonic (laplace r = -2 delta_g > 0)";
    v.verdict = "no-mate-theorem-2";
    v.narrative =
        "compact, H nonconstant, umbilics discrete, and delta_g keeps a single " + sign +
        " sign on the trusted nodes; any mate rotation angle would satisfy " + branch +
        ", and on a compact chart that forces r constant, which only produces congruent "
        "mates: the totally nonisothermic no-mate case applies";
    return v;
  }
  v.verdict = "inconclusive";
  v.narrative =
      "delta_g changes sign or dips below the floor on parts of the chart, so neither "
      "no-mate case applies and no mate construction is attempted";
  return v;
}

}  // namespace bonnetlab
