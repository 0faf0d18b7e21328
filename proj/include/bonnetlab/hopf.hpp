#pragma once
#include <string>

#include "bonnetlab/grid.hpp"
#include "bonnetlab/invariants.hpp"
#include "bonnetlab/surface.hpp"

namespace bonnetlab {

// gates echoed into reports so every threshold that shaped a verdict is visible
inline constexpr double kDefaultTolUmb = 1e-4;
inline constexpr int kDiscreteComponentMax = 8;
inline constexpr double kCmcNonconstancyGate = 0.01;
inline constexpr double kSignFractionGate = 0.99;

struct UmbilicReport {
  Mask mask;  // 1 where e^{2u}|h| sits at the umbilic floor
  int masked_count = 0;
  int component_count = 0;
  int largest_component = 0;
  bool discrete = false;        // every masked component spans a handful of nodes
  bool totally_umbilic = false;
  double threshold = 0;
};

UmbilicReport umbilic_mask(const ConformalInvariants& ci, double tol_umb = kDefaultTolUmb);

struct LogHopfDerivatives {
  ChartGrid grid;
  ComplexField Phi;     // W_zbar / W for W = e^{2u} h
  ComplexField Psi;     // d_z Phi through the quotient rule, no phase unwrapping
  RealField delta_g;    // 4 e^{-2u} Im Psi
  RealField e2u;        // conformal factor carried along for metric operators
  Mask low_confidence;  // umbilic mask dilated by the stencil halfwidth
  UmbilicReport report;
};

LogHopfDerivatives log_hopf_derivatives(const ConformalInvariants& ci, const Deriv& d,
                                        double tol_umb = kDefaultTolUmb);

struct InvarianceCheck {
  double max_difference = 0;  // max |delta_g_w - delta_g_z(phi)| over shared trusted nodes
  double floor = 0;           // 10 x the larger chart's structure residual
  int compared = 0;
  bool passed = false;
};

// rebuilds the same immersion in the w chart and compares delta_g pointwise;
// wgrid must be non-periodic so the window can sit inside the z chart
InvarianceCheck chart_invariance_check(const JetEval& eval, const ChartGrid& zgrid,
                                       const Reparam& phi, const ChartGrid& wgrid,
                                       Scheme scheme, double tol_conf = 1e-6);

enum class SurfaceKind { TotallyUmbilic, Cmc, Isothermic, TotallyNonisothermic, Mixed };
const char* kind_name(SurfaceKind k);

// 10 x the structure residual ceiling, expressed in delta_g units: the Codazzi
// part is divided by e^{3u} pointwise so both parts scale like 1/lambda^2 under
// X -> lambda X, which keeps classifications stable across rescalings
double structure_floor(const ConformalInvariants& ci, const Deriv& d);

struct Classification {
  SurfaceKind kind = SurfaceKind::Mixed;
  double floor = 0;           // 10 x max structure residual
  double max_delta_g = 0;     // over nodes outside low_confidence
  double above_floor_fraction = 0;
  double positive_fraction = 0;  // among nodes above the floor
  double negative_fraction = 0;
  double nonconstancy = 0;    // of H
  std::string detail;
};

Classification classify(const ConformalInvariants& ci, const LogHopfDerivatives& lh,
                        const Deriv& d);

}  // namespace bonnetlab
