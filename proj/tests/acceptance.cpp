// Acceptance gate: one pass/fail line per criterion, exit code = number of
// failures. Tolerances are pinned here, next to the checks they gate.
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "bonnetlab/bonnet.hpp"
#include "bonnetlab/grid.hpp"
#include "bonnetlab/hopf.hpp"
#include "bonnetlab/invariants.hpp"
#include "bonnetlab/surface.hpp"

using namespace bonnetlab;

namespace {

constexpr double kResidualCeiling = 1e-6;   // structure residuals at 128^2
constexpr double kOrderGateFd2 = 1.9;       // refinement order floors
constexpr double kOrderGateFd4 = 3.8;
constexpr double kOracleTol = 1e-10;        // closed-form invariant agreement
constexpr double kRoundingTol = 1e-13;      // shared-invariant agreement of a pair
constexpr double kHolomorphyTol = 1e-8;     // d_zbar F on the associate pair
constexpr double kModulusTol = 1e-10;       // | |F + W| - |W| |
constexpr double kUnitDefectTol = 1e-10;    // | |A| - 1 | on trusted nodes
constexpr double kBenchFloor = 1e-8;        // rotation floor on the benchmark

int g_failures = 0;

void report(int id, const char* label, bool pass, const std::string& detail) {
  std::printf("%s  %d %s: %s\n", pass ? "PASS" : "FAIL", id, label, detail.c_str());
  if (!pass) ++g_failures;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

ChartGrid sized_grid(const ChartGrid& base, int n) {
  return make_grid(base.x0, base.x1, base.y0, base.y1, n, n, base.periodic_x, base.periodic_y);
}

ConformalInvariants invariants_at(const std::string& name, int n) {
  GalleryChart c = gallery_chart(name, {});
  ImmersionSample s = sample_chart(c, sized_grid(c.default_grid, n));
  return conformal_invariants(s);
}

void criterion_structure_residuals() {
  const std::vector<std::string> charts = {"catenoid", "cylinder", "sphere-mercator",
                                           "torus-of-revolution"};
  double worst = 0;
  std::string worst_chart;
  bool pass = true;
  for (const std::string& name : charts) {
    ConformalInvariants ci = invariants_at(name, 128);
    Deriv d(ci.grid, Scheme::SpectralAuto);
    StructureStats st = structure_stats(ci, d);
    double m = std::max(st.gauss_max, st.codazzi_max);
    if (m > worst) {
      worst = m;
      worst_chart = name;
    }
    pass = pass && st.gauss_max < kResidualCeiling && st.codazzi_max < kResidualCeiling;
  }

  // refinement orders on the charts whose Gauss residual is not identically
  // zero and which have a non-periodic axis: catenoid and sphere-mercator
  double worst_fd2 = 1e30, worst_fd4 = 1e30;
  for (const std::string& name : {std::string("catenoid"), std::string("sphere-mercator")}) {
    for (Scheme sch : {Scheme::Fd2, Scheme::Fd4}) {
      ConvergenceTable tab = refine_study({32, 64, 128}, [&](int n) {
        ConformalInvariants ci = invariants_at(name, n);
        Deriv d(ci.grid, sch);
        StructureStats st = structure_stats(ci, d);
        return std::map<std::string, double>{{"gauss", st.gauss_max}};
      });
      double order = tab.orders().at("gauss").back();
      if (sch == Scheme::Fd2)
        worst_fd2 = std::min(worst_fd2, order);
      else
        worst_fd4 = std::min(worst_fd4, order);
    }
  }
  pass = pass && worst_fd2 >= kOrderGateFd2 && worst_fd4 >= kOrderGateFd4;

  report(1, "structure residuals", pass,
         "gauss/codazzi max " + num(worst) + " on " + worst_chart + " at 128^2 (ceiling " +
             num(kResidualCeiling) + "); refinement orders fd2 " + num(worst_fd2) + " (>= " +
             num(kOrderGateFd2) + "), fd4 " + num(worst_fd4) + " (>= " + num(kOrderGateFd4) + ")");
}

void criterion_invariant_oracles() {
  double worst = 0;
  auto track = [&](double v) { worst = std::max(worst, v); };

  {
    ConformalInvariants ci = invariants_at("cylinder", 128);
    track(max_abs(ci.u));
    double dH = 0, dh = 0, dK = 0;
    for (size_t k = 0; k < ci.H.v.size(); ++k) {
      dH = std::max(dH, std::abs(ci.H.v[k] + 0.5));
      dh = std::max(dh, std::abs(ci.h.v[k] + 0.5));
      dK = std::max(dK, std::abs(ci.K.v[k]));
    }
    track(dH), track(dh), track(dK);
  }
  {
    ConformalInvariants ci = invariants_at("catenoid", 128);
    double dW = 0, dH = 0, dK = 0;
    for (int j = 0; j < ci.grid.ny; ++j) {
      double sech = 1.0 / std::cosh(ci.grid.y(j));
      double Kref = -(sech * sech * sech * sech);
      for (int i = 0; i < ci.grid.nx; ++i) {
        dW = std::max(dW, std::abs(ci.e2u(i, j) * ci.h(i, j) + 1.0));
        dH = std::max(dH, std::abs(ci.H(i, j)));
        dK = std::max(dK, std::abs(ci.K(i, j) - Kref));
      }
    }
    track(dW), track(dH), track(dK);
  }
  {
    ConformalInvariants ci = invariants_at("sphere-mercator", 128);
    double dh = 0, dH = 0, dK = 0;
    for (size_t k = 0; k < ci.H.v.size(); ++k) {
      dh = std::max(dh, std::abs(ci.h.v[k]));
      dH = std::max(dH, std::abs(ci.H.v[k] + 1.0));
      dK = std::max(dK, std::abs(ci.K.v[k] - 1.0));
    }
    track(dh), track(dH), track(dK);
  }

  report(2, "invariant oracles", worst < kOracleTol,
         "worst closed-form deviation " + num(worst) + " across cylinder, catenoid, "
         "sphere-mercator (tolerance " + num(kOracleTol) + ")");
}

void criterion_associate_pair() {
  ConformalInvariants ci = invariants_at("catenoid", 128);
  Deriv d(ci.grid, Scheme::SpectralAuto);
  ConformalInvariants mate = associate_family(ci, 2.0 * std::atan2(1.0, 0.0), d);
  DeformationDifferential dd = deformation_differential(ci, mate, d);

  double du = 0, dH = 0;
  for (size_t k = 0; k < ci.u.v.size(); ++k) {
    du = std::max(du, std::abs(ci.u.v[k] - mate.u.v[k]));
    dH = std::max(dH, std::abs(ci.H.v[k] - mate.H.v[k]));
  }
  cplx fmean(0, 0);
  for (const cplx& f : dd.F.v) fmean += f;
  fmean /= double(dd.F.v.size());
  double fdev = 0;
  for (const cplx& f : dd.F.v) fdev = std::max(fdev, std::abs(f - fmean));

  bool pass = du < kRoundingTol && dH < kRoundingTol && fdev < kHolomorphyTol &&
              dd.holomorphy_residual < kHolomorphyTol && dd.modulus_residual < kModulusTol;
  report(3, "associate pair", pass,
         "catenoid theta=pi/2: |u-u'| " + num(du) + ", |H-H'| " + num(dH) +
             ", F constancy deviation " + num(fdev) + ", d_zbar F " +
             num(dd.holomorphy_residual) + " (< " + num(kHolomorphyTol) + "), modulus defect " +
             num(dd.modulus_residual) + " (< " + num(kModulusTol) + ")");
}

void criterion_isothermic_torus() {
  GalleryChart c = gallery_chart("torus-of-revolution", {});
  ImmersionSample s = sample_chart(c, c.default_grid);
  ConformalInvariants ci = conformal_invariants(s);
  Deriv d(ci.grid, Scheme::SpectralAuto);
  LogHopfDerivatives lh = log_hopf_derivatives(ci, d);
  Classification cl = classify(ci, lh, d);
  BonnetVerdict v = theorem_verdict(true, false, lh.report.discrete, cl);
  double floor = structure_floor(ci, d);

  ChartGrid wg = make_grid(1.0, 2.2, 0.4, 1.6, 96, 96, false, false);
  InvarianceCheck chk =
      chart_invariance_check(c.eval, c.default_grid, quadratic_reparam(0.1), wg,
                             Scheme::SpectralAuto);

  bool pass = cl.max_delta_g < floor && cl.kind == SurfaceKind::Isothermic &&
              v.verdict == "no-mate-theorem-1" && chk.passed && chk.max_difference < chk.floor;
  report(4, "isothermic detection", pass,
         "torus max |delta_g| " + num(cl.max_delta_g) + " vs floor " + num(floor) +
             ", classified " + kind_name(cl.kind) + ", verdict " + v.verdict +
             ", z+0.1z^2 invariance " + num(chk.max_difference) + " vs floor " + num(chk.floor));
}

void criterion_rotation_identities() {
  double worst_fd2 = 1e30, worst_fd4 = 1e30, unit_defect = 0;
  for (Scheme sch : {Scheme::Fd2, Scheme::Fd4}) {
    ConvergenceTable tab = refine_study({64, 128, 256}, [&](int n) {
      ConformalInvariants ci = rotation_benchmark_chart(n);
      Deriv d(ci.grid, sch);
      LogHopfDerivatives lh = log_hopf_derivatives(ci, d);
      CandidateRotation cr = candidate_mate_rotation(lh, kBenchFloor);
      MateResiduals mr = mate_consistency_residuals(lh, cr, d);
      unit_defect = std::max(unit_defect, cr.max_unit_defect);
      return std::map<std::string, double>{{"r3", mr.r3_max}, {"drpdg", mr.drpdg_max}};
    });
    auto orders = tab.orders();
    double o = std::min(orders.at("r3").back(), orders.at("drpdg").back());
    if (sch == Scheme::Fd2)
      worst_fd2 = std::min(worst_fd2, o);
    else
      worst_fd4 = std::min(worst_fd4, o);
  }
  bool pass = worst_fd2 >= kOrderGateFd2 && worst_fd4 >= kOrderGateFd4 &&
              unit_defect < kUnitDefectTol;
  report(5, "rotation identities", pass,
         "benchmark R3 and laplace r + 2 delta_g orders: fd2 " + num(worst_fd2) + " (>= " +
             num(kOrderGateFd2) + "), fd4 " + num(worst_fd4) + " (>= " + num(kOrderGateFd4) +
             "); | |A|-1 | " + num(unit_defect) + " (< " + num(kUnitDefectTol) + ")");
}

void criterion_degeneracy_law() {
  int isothermic_seen = 0;
  bool pass = true;
  std::string detail;
  for (const GalleryInfo& info : gallery_listing()) {
    ImmersionSample s = sample_gallery(info.name, {});
    ConformalInvariants ci = conformal_invariants(s);
    Deriv d(ci.grid, Scheme::SpectralAuto);
    LogHopfDerivatives lh = log_hopf_derivatives(ci, d);
    Classification cl = classify(ci, lh, d);
    if (cl.kind != SurfaceKind::Isothermic) continue;
    ++isothermic_seen;
    CandidateRotation cr = candidate_mate_rotation(lh, structure_floor(ci, d));
    bool all = cr.degenerate_count == ci.grid.size();
    pass = pass && all;
    detail += (detail.empty() ? "" : ", ") + info.name + " " +
              std::to_string(cr.degenerate_count) + "/" + std::to_string(ci.grid.size());
  }
  pass = pass && isothermic_seen >= 2;
  report(6, "degeneracy law", pass,
         "isothermic charts report only degenerate candidate nodes: " + detail);
}

void criterion_winding() {
  ChartGrid g = make_grid(-2, 2, -2, 2, 256, 256, false, false);
  bool pass = true;
  std::string detail;
  for (int k = 1; k <= 3; ++k) {
    ComplexField F(g);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) F(i, j) = std::pow(cplx(g.x(i), g.y(j)), k);
    int w = zero_winding(g, F, cplx(0, 0), 1.3, 2048);
    pass = pass && w == k;
    detail += "z^" + std::to_string(k) + " -> " + std::to_string(w) + ", ";
  }

  ChartGrid gd = make_grid(-2, 2, -2, 2, 512, 512, false, false);
  ComplexField F(gd);
  auto f = [](cplx z) { return z * z * z - 0.1 * z; };
  for (int j = 0; j < gd.ny; ++j)
    for (int i = 0; i < gd.nx; ++i) F(i, j) = f(cplx(gd.x(i), gd.y(j)));
  int w = zero_winding(gd, F, cplx(0, 0), 1.0, 2048);

  int brute = 0;
  for (int j = 1; j < gd.ny - 1; ++j)
    for (int i = 1; i < gd.nx - 1; ++i) {
      if (gd.x(i) * gd.x(i) + gd.y(j) * gd.y(j) >= 1.0) continue;
      double c = std::abs(F(i, j));
      if (c >= 0.01) continue;
      bool strict_min = true;
      for (int dj = -1; dj <= 1 && strict_min; ++dj)
        for (int di = -1; di <= 1; ++di) {
          if (di == 0 && dj == 0) continue;
          if (std::abs(F(i + di, j + dj)) <= c) {
            strict_min = false;
            break;
          }
        }
      if (strict_min) ++brute;
    }

  pass = pass && w == 3 && brute == 3;
  report(7, "winding oracle", pass,
         detail + "z^3 - 0.1z winding " + std::to_string(w) + " vs brute-force zero count " +
             std::to_string(brute) + " (expected 3)");
}

void criterion_verdict_soundness() {
  const SurfaceKind kinds[] = {SurfaceKind::TotallyUmbilic, SurfaceKind::Cmc,
                               SurfaceKind::Isothermic, SurfaceKind::TotallyNonisothermic,
                               SurfaceKind::Mixed};
  int combos = 0, bad = 0;
  std::string first_bad;
  for (int c = 0; c <= 1; ++c)
    for (int s = 0; s <= 1; ++s)
      for (int ud = 0; ud <= 1; ++ud)
        for (SurfaceKind kind : kinds) {
          ++combos;
          Classification cl;
          cl.kind = kind;
          cl.nonconstancy = kind == SurfaceKind::Cmc ? 0.0 : 0.5;
          cl.positive_fraction = kind == SurfaceKind::TotallyNonisothermic ? 0.995 : 0.6;
          cl.negative_fraction = 1.0 - cl.positive_fraction;
          BonnetVerdict v = theorem_verdict(c, s, ud, cl);

          bool ok = true;
          bool expect1 = c && ud && kind == SurfaceKind::Isothermic;
          bool expect2 = c && ud && kind == SurfaceKind::TotallyNonisothermic;
          ok = ok && (v.verdict == "no-mate-theorem-1") == expect1;
          ok = ok && (v.verdict == "no-mate-theorem-2") == expect2;
          if (kind == SurfaceKind::TotallyUmbilic) ok = ok && v.verdict == "totally-umbilic";
          if (kind == SurfaceKind::Cmc)
            ok = ok && v.verdict == (s ? "cmc-associate-family-exists" : "inconclusive");
          if (kind == SurfaceKind::Mixed) ok = ok && v.verdict == "inconclusive";
          if (v.verdict.rfind("no-mate", 0) == 0) {
            bool compact_holds = false, discrete_holds = false;
            for (const std::string& h : v.hypotheses) {
              if (h == "compact: holds") compact_holds = true;
              if (h == "umbilic set discrete: holds") discrete_holds = true;
            }
            ok = ok && compact_holds && discrete_holds;
          }
          if (!ok) {
            ++bad;
            if (first_bad.empty())
              first_bad = std::string(" first failure: compact=") + std::to_string(c) +
                          " sc=" + std::to_string(s) + " discrete=" + std::to_string(ud) +
                          " kind=" + kind_name(kind) + " -> " + v.verdict;
          }
        }
  report(8, "verdict soundness", bad == 0,
         std::to_string(combos) + " combinations checked exhaustively, " + std::to_string(bad) +
             " violations" + first_bad);
}

}  // namespace

int main() {
  criterion_structure_residuals();
  criterion_invariant_oracles();
  criterion_associate_pair();
  criterion_isothermic_torus();
  criterion_rotation_identities();
  criterion_degeneracy_law();
  criterion_winding();
  criterion_verdict_soundness();
  std::printf("acceptance: %d/8 passed\n", 8 - g_failures);
  return g_failures;
}
