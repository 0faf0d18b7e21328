#pragma once
#include "bonnetlab/grid.hpp"
#include "bonnetlab/surface.hpp"

namespace bonnetlab {

struct FundamentalForms {
  ChartGrid grid;
  RealField E, F, G;     // first form
  RealField e2, f2, g2;  // second form against the unit normal
  double conformality_residual = 0;  // max of max(|E-G|,|F|)/max(E,G)
  ChartMetadata metadata;
  double tol_conf = 1e-6;
};

FundamentalForms fundamental_forms(const ImmersionSample& s);

struct ConformalInvariants {
  ChartGrid grid;
  RealField u;      // e^{2u} = E
  RealField e2u;
  RealField H;
  ComplexField h;
  RealField K;      // defined as H^2 - |h|^2; the metric curvature lives in gauss_residual
  ChartMetadata metadata;
  double conformality_residual = 0;
  double tol_conf = 1e-6;
};

// rejects non-conformal charts (ConformalityError) instead of reparametrizing
ConformalInvariants conformal_invariants(const FundamentalForms& ff, double tol_conf);
ConformalInvariants conformal_invariants(const ImmersionSample& s);

// residual of -4 e^{-2u} u_{z zbar} = H^2 - |h|^2, per node
RealField gauss_residual(const ConformalInvariants& ci, const Deriv& d);
// residual of (e^{2u} h)_zbar = e^{2u} H_z, per node
RealField codazzi_residual(const ConformalInvariants& ci, const Deriv& d);

struct StructureStats {
  double gauss_max = 0;
  double codazzi_max = 0;
};
StructureStats structure_stats(const ConformalInvariants& ci, const Deriv& d);

inline constexpr double kDefaultNonconstancyTol = 1e-6;

// fraction of nodes where |d_z H| clears tol * max(1, max|H|) / L_char,
// L_char = larger chart extent; CMC charts score 0
double nonconstancy_fraction(const ConformalInvariants& ci, const Deriv& d,
                             double tol = kDefaultNonconstancyTol);

}  // namespace bonnetlab
