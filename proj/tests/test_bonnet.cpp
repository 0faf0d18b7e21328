#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <complex>

#include "bonnetlab/bonnet.hpp"
#include "bonnetlab/errors.hpp"
#include "bonnetlab/hopf.hpp"
#include "bonnetlab/invariants.hpp"
#include "bonnetlab/surface.hpp"
#include "doctest.h"

using namespace bonnetlab;

namespace {

const double kPi = 3.14159265358979323846;

ConformalInvariants invariants_of(const std::string& name) {
  GalleryChart c = gallery_chart(name, {});
  return conformal_invariants(sample_chart(c, c.default_grid));
}

// the benchmark family Re W = const admits an exact mate rotation; yfun is
// kept here as the oracle for the closed-form angle
double yfun(double x, double t) { return 1.2 - 0.45 * (x * x + t * t) - 0.03 * x; }

ConformalInvariants normal_form(int n) {
  ConformalInvariants ci = rotation_benchmark_chart(n);
  double w = 0;
  for (int j = 0; j < ci.grid.ny; ++j)
    for (int i = 0; i < ci.grid.nx; ++i)
      w = std::max(w, std::abs(ci.h(i, j) - cplx(-0.5, yfun(ci.grid.x(i), ci.grid.y(j)))));
  REQUIRE(w == 0.0);
  return ci;
}

double exact_rotation(double x, double t) {
  double y = yfun(x, t);
  cplx ratio = cplx(0.5, y) / cplx(-0.5, y);
  double ang = std::atan2(ratio.imag(), ratio.real());
  return (ang <= 0) ? ang + 2 * kPi : ang;
}

ComplexField plane_field(const ChartGrid& g, const std::function<cplx(cplx)>& f) {
  ComplexField F(g.nx, g.ny);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) F(i, j) = f(cplx(g.x(i), g.y(j)));
  return F;
}

}  // namespace

TEST_CASE("catenoid quarter-turn associate carries helicoid invariants") {
  GalleryChart cat = gallery_chart("catenoid", {});
  ChartGrid g = cat.default_grid;
  ConformalInvariants ci = conformal_invariants(sample_chart(cat, g));
  Deriv d(g, Scheme::SpectralAuto);
  ConformalInvariants assoc = associate_family(ci, kPi / 2, d);

  // helicoid jets evaluated on the same nodes; invariants are pointwise
  GalleryChart hel = gallery_chart("helicoid", {});
  ConformalInvariants href = conformal_invariants(sample_chart(hel, g));
  double wu = 0, wH = 0, wh = 0;
  for (size_t k = 0; k < ci.u.v.size(); ++k) {
    wu = std::max(wu, std::abs(assoc.u.v[k] - href.u.v[k]));
    wH = std::max(wH, std::abs(assoc.H.v[k] - href.H.v[k]));
    wh = std::max(wh, std::abs(assoc.h.v[k] - href.h.v[k]));
  }
  CHECK(wu < 1e-12);
  CHECK(wH < 1e-12);
  CHECK(wh < 1e-12);
}

TEST_CASE("deformation differential of an associate pair is the constant 1 - e^{i theta}") {
  GalleryChart cat = gallery_chart("catenoid", {});
  ChartGrid g = cat.default_grid;
  ConformalInvariants ci = conformal_invariants(sample_chart(cat, g));
  Deriv d(g, Scheme::SpectralAuto);
  for (double theta : {0.7, kPi / 2, 2.9}) {
    ConformalInvariants assoc = associate_family(ci, theta, d);
    DeformationDifferential dd = deformation_differential(ci, assoc, d);
    cplx expect = cplx(1, 0) - std::exp(cplx(0, theta));
    double w = 0;
    for (const cplx& v : dd.F.v) w = std::max(w, std::abs(v - expect));
    CHECK(w < 1e-12);
    CHECK(dd.holomorphy_residual < 1e-8);
    CHECK(dd.modulus_residual < 1e-10);
  }
}

TEST_CASE("zero and full turns reproduce the chart") {
  ConformalInvariants ci = invariants_of("cylinder");
  Deriv d(ci.grid, Scheme::SpectralAuto);
  for (double theta : {0.0, 2 * kPi}) {
    ConformalInvariants assoc = associate_family(ci, theta, d);
    double w = 0;
    for (size_t k = 0; k < ci.h.v.size(); ++k)
      w = std::max(w, std::abs(assoc.h.v[k] - ci.h.v[k]));
    CHECK(w < 1e-12);
  }
}

TEST_CASE("associate family refuses non-CMC and totally umbilic charts") {
  ConformalInvariants tor = invariants_of("torus-of-revolution");
  Deriv dt(tor.grid, Scheme::SpectralAuto);
  bool threw = false;
  try {
    associate_family(tor, 0.5, dt);
  } catch (const PreconditionError& e) {
    threw = true;
    CHECK(std::string(e.what()).find("Codazzi") != std::string::npos);
    CHECK(e.exit_code == 4);
  }
  CHECK(threw);

  ConformalInvariants sph = invariants_of("sphere-mercator");
  Deriv ds(sph.grid, Scheme::SpectralAuto);
  CHECK_THROWS_AS(associate_family(sph, 0.5, ds), PreconditionError);
}

TEST_CASE("scaled Hopf field is flagged through the modulus residual") {
  ConformalInvariants ci = invariants_of("catenoid");
  Deriv d(ci.grid, Scheme::SpectralAuto);
  ConformalInvariants fake = ci;
  for (size_t k = 0; k < fake.h.v.size(); ++k) {
    fake.h.v[k] *= 1.1;
    fake.K.v[k] = fake.H.v[k] * fake.H.v[k] - std::norm(fake.h.v[k]);
  }
  DeformationDifferential dd = deformation_differential(ci, fake, d);
  CHECK(dd.holomorphy_residual < 1e-8);  // a plain rescaling stays holomorphic
  CHECK(dd.modulus_residual == doctest::Approx(0.1).epsilon(1e-6));
}

TEST_CASE("mismatched metric or H is not a candidate pair") {
  ConformalInvariants cat = invariants_of("catenoid");
  ConformalInvariants cyl = invariants_of("cylinder");
  Deriv d(cat.grid, Scheme::SpectralAuto);
  bool threw = false;
  try {
    deformation_differential(cat, cyl, d);
  } catch (const PreconditionError& e) {
    threw = true;
    CHECK(std::string(e.what()).find("not a candidate pair") != std::string::npos);
  }
  CHECK(threw);

  // same metric, shifted H
  ConformalInvariants shifted = cat;
  for (auto& v : shifted.H.v) v += 0.25;
  CHECK_THROWS_AS(deformation_differential(cat, shifted, d), PreconditionError);
}

TEST_CASE("zero winding counts zeros inside circle contours") {
  ChartGrid g = make_grid(-1, 1, -1, 1, 192, 192, false, false);
  ComplexField f1 = plane_field(g, [](cplx z) { return z; });
  ComplexField f2 = plane_field(g, [](cplx z) { return z * z; });
  ComplexField f3 = plane_field(g, [](cplx z) { return z * z * z; });
  CHECK(zero_winding(g, f1, cplx(0, 0), 0.5) == 1);
  CHECK(zero_winding(g, f2, cplx(0, 0), 0.5) == 2);
  CHECK(zero_winding(g, f3, cplx(0, 0), 0.5) == 3);

  ComplexField cubic = plane_field(g, [](cplx z) { return z * z * z - 0.1 * z; });
  CHECK(zero_winding(g, cubic, cplx(0, 0), 0.7) == 3);
  // only the simple zero at the origin sits inside a tight contour
  CHECK(zero_winding(g, cubic, cplx(0, 0), 0.15) == 1);

  ComplexField nowhere = plane_field(g, [](cplx z) { return 1.0 + 0.5 * std::sin(z.real()); });
  CHECK(zero_winding(g, nowhere, cplx(0, 0), 0.8) == 0);
}

TEST_CASE("zero winding is additive over products") {
  ChartGrid g = make_grid(-1, 1, -1, 1, 192, 192, false, false);
  auto fa = [](cplx z) { return z - cplx(0.2, 0.1); };
  auto fb = [](cplx z) { return z + cplx(0.3, -0.2); };
  ComplexField A = plane_field(g, fa);
  ComplexField B = plane_field(g, fb);
  ComplexField AB = plane_field(g, [&](cplx z) { return fa(z) * fb(z); });
  int wa = zero_winding(g, A, cplx(0, 0), 0.6);
  int wb = zero_winding(g, B, cplx(0, 0), 0.6);
  int wab = zero_winding(g, AB, cplx(0, 0), 0.6);
  CHECK(wa == 1);
  CHECK(wb == 1);
  CHECK(wab == wa + wb);
}

TEST_CASE("zero winding rejects bad contours") {
  ChartGrid g = make_grid(-1, 1, -1, 1, 128, 128, false, false);
  ComplexField f = plane_field(g, [](cplx z) { return z; });
  // contour through the zero: phase steps blow past the principal branch
  CHECK_THROWS_AS(zero_winding(g, f, cplx(0.3, 0), 0.3, 64), PreconditionError);
  // contour escaping the window
  CHECK_THROWS_AS(zero_winding(g, f, cplx(0.8, 0), 0.5), PreconditionError);
  CHECK_THROWS_AS(zero_winding(g, f, cplx(0, 0), -1.0), SchemaError);
}

TEST_CASE("candidate rotation reproduces the exact mate angle on the normal form") {
  ConformalInvariants ci = normal_form(128);
  Deriv d(ci.grid, Scheme::Fd4);
  LogHopfDerivatives lh = log_hopf_derivatives(ci, d);
  CandidateRotation cr = candidate_mate_rotation(lh, 1e-8);
  CHECK(cr.degenerate_count == 0);
  CHECK(cr.max_unit_defect < 1e-10);

  double w = 0;
  for (int j = 0; j < ci.grid.ny; ++j)
    for (int i = 0; i < ci.grid.nx; ++i)
      w = std::max(w, std::abs(cr.r(i, j) - exact_rotation(ci.grid.x(i), ci.grid.y(j))));
  CHECK(w < 1e-4);  // differentiation error only
}

TEST_CASE("mate consistency residuals vanish at scheme order on the normal form") {
  auto run = [&](Scheme sch, int n) {
    ConformalInvariants ci = normal_form(n);
    Deriv d(ci.grid, sch);
    LogHopfDerivatives lh = log_hopf_derivatives(ci, d);
    CandidateRotation cr = candidate_mate_rotation(lh, 1e-8);
    MateResiduals mr = mate_consistency_residuals(lh, cr, d);
    REQUIRE(mr.support_count > n * n / 2);
    return mr;
  };
  MateResiduals a2 = run(Scheme::Fd2, 64), b2 = run(Scheme::Fd2, 128);
  MateResiduals a4 = run(Scheme::Fd4, 64), b4 = run(Scheme::Fd4, 128);
  CHECK(std::log2(a2.r3_max / b2.r3_max) > 1.9);
  CHECK(std::log2(a2.drpdg_max / b2.drpdg_max) > 1.9);
  CHECK(std::log2(a4.r3_max / b4.r3_max) > 3.8);
  CHECK(std::log2(a4.drpdg_max / b4.drpdg_max) > 3.8);
  // first-order consistency converges too; Re W is constant on this family
  CHECK(std::log2(a4.r1_max / b4.r1_max) > 3.5);
  // the isothermic specialization is genuinely violated here
  CHECK(b4.r1a_max > 0.1);
}

TEST_CASE("isothermic chart degenerates the whole candidate") {
  ConformalInvariants ci = invariants_of("torus-of-revolution");
  Deriv d(ci.grid, Scheme::SpectralAuto);
  LogHopfDerivatives lh = log_hopf_derivatives(ci, d);
  double floor = structure_floor(ci, d);
  CandidateRotation cr = candidate_mate_rotation(lh, floor);
  CHECK(cr.degenerate_count == ci.grid.size());
  CHECK(cr.diagnostic.find("isothermic locus") != std::string::npos);
  CHECK_THROWS_AS(mate_consistency_residuals(lh, cr, d), PreconditionError);
}

TEST_CASE("theorem verdict covers the full flag matrix") {
  auto mk = [](SurfaceKind k, double posfrac) {
    Classification cl;
    cl.kind = k;
    cl.nonconstancy = (k == SurfaceKind::Cmc) ? 0.0 : 0.98;
    cl.positive_fraction = posfrac;
    cl.negative_fraction = 1.0 - posfrac;
    return cl;
  };
  const SurfaceKind kinds[5] = {SurfaceKind::TotallyUmbilic, SurfaceKind::Cmc,
                                SurfaceKind::Isothermic, SurfaceKind::TotallyNonisothermic,
                                SurfaceKind::Mixed};
  for (int mask = 0; mask < 8; ++mask) {
    bool compact = mask & 1, simply = mask & 2, discrete = mask & 4;
    for (SurfaceKind k : kinds) {
      BonnetVerdict v = theorem_verdict(compact, simply, discrete, mk(k, 1.0));
      std::string expect;
      if (k == SurfaceKind::TotallyUmbilic) {
        expect = "totally-umbilic";
      } else if (k == SurfaceKind::Cmc) {
        expect = simply ? "cmc-associate-family-exists" : "inconclusive";
      } else if (k == SurfaceKind::Isothermic) {
        expect = (compact && discrete) ? "no-mate-theorem-1" : "inconclusive";
      } else if (k == SurfaceKind::TotallyNonisothermic) {
        expect = (compact && discrete) ? "no-mate-theorem-2" : "inconclusive";
      } else {
        expect = "inconclusive";
      }
      CHECK(v.verdict == expect);
      CHECK(v.hypotheses.size() == 4);
      CHECK(!v.narrative.empty());
    }
  }
}

TEST_CASE("theorem-2 narrative reports the sign branch") {
  Classification cl;
  cl.kind = SurfaceKind::TotallyNonisothermic;
  cl.nonconstancy = 0.99;
  cl.positive_fraction = 1.0;
  cl.negative_fraction = 0.0;
  BonnetVerdict pos = theorem_verdict(true, false, true, cl);
  CHECK(pos.verdict == "no-mate-theorem-2");
  CHECK(pos.narrative.find("positive") != std::string::npos);
  CHECK(pos.narrative.find("superharmonic") != std::string::npos);

  cl.positive_fraction = 0.0;
  cl.negative_fraction = 1.0;
  BonnetVerdict neg = theorem_verdict(true, false, true, cl);
  CHECK(neg.narrative.find("negative") != std::string::npos);
  CHECK(neg.narrative.find("subharmonic") != std::string::npos);
}

TEST_CASE("gallery verdicts line up end to end") {
  struct Row {
    const char* name;
    const char* expect;
  };
  const Row rows[] = {
      {"sphere-mercator", "totally-umbilic"},
      {"catenoid", "cmc-associate-family-exists"},
      {"cylinder", "cmc-associate-family-exists"},
      {"torus-of-revolution", "no-mate-theorem-1"},
  };
  for (const Row& row : rows) {
    GalleryChart c = gallery_chart(row.name, {});
    ConformalInvariants ci = conformal_invariants(sample_chart(c, c.default_grid));
    Deriv d(ci.grid, Scheme::SpectralAuto);
    LogHopfDerivatives lh = log_hopf_derivatives(ci, d);
    Classification cl = classify(ci, lh, d);
    BonnetVerdict v = theorem_verdict(ci.metadata.compact, ci.metadata.simply_connected,
                                      lh.report.discrete || lh.report.masked_count == 0, cl);
    CHECK(v.verdict == row.expect);
  }
}
