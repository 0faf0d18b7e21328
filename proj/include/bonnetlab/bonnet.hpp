#pragma once
#include <string>
#include <vector>

#include "bonnetlab/grid.hpp"
#include "bonnetlab/hopf.hpp"
#include "bonnetlab/invariants.hpp"

namespace bonnetlab {

struct DeformationDifferential {
  ComplexField F;                  // e^{2u} (h_mate - h)
  double holomorphy_residual = 0;  // max |d_zbar F|
  double modulus_residual = 0;     // max | |F + W| - |W| | for W = e^{2u} h
};

// requires matching metric and mean curvature; anything else is not a
// candidate pair and is refused
DeformationDifferential deformation_differential(const ConformalInvariants& ci,
                                                 const ConformalInvariants& mate, const Deriv& d,
                                                 double tol_pair = 1e-6);

// rotates the Hopf field of a CMC chart; refuses non-CMC charts, where the
// rotated field would break the Codazzi equation, and totally umbilic charts,
// where the rotation does nothing
ConformalInvariants associate_family(const ConformalInvariants& ci, double theta, const Deriv& d);

// winding number of F around the circle contour, counted from principal-value
// phase steps; every step must stay under pi or the contour is invalid
int zero_winding(const ChartGrid& g, const ComplexField& F, cplx center, double radius,
                 int samples = 1024);

struct CandidateRotation {
  ChartGrid grid;
  ComplexField A;
  RealField r;            // arg A shifted into (0, 2pi]
  Mask degenerate;        // quotient D too small against the floor
  Mask near_identity;     // |delta_g| at the structure floor
  Mask degenerate_nodes;  // union of the two
  int degenerate_count = 0;
  double max_unit_defect = 0;  // max | |A| - 1 | where the rotation is trusted
  std::string diagnostic;
};

CandidateRotation candidate_mate_rotation(const LogHopfDerivatives& lh, double floor);

// synthetic flat-metric chart on [-1,1]^2 whose Hopf field has constant real
// part, so an exact mate rotation exists and the rotation identities hold
// pointwise; drives convergence studies of the candidate residuals
ConformalInvariants rotation_benchmark_chart(int n);

struct MateResiduals {
  RealField R1;     // |d_zbar r - i Phi (1 - e^{-i r})|
  RealField R3;     // |d_z d_zbar r + 2 Im Psi|
  RealField R1a;    // |d_z d_zbar r|, the isothermic specialization
  RealField drpdg;  // |laplace r + 2 delta_g|
  Mask support;     // trusted nodes: wrap-free, confident, nondegenerate
  int support_count = 0;
  double r1_max = 0, r3_max = 0, r1a_max = 0, drpdg_max = 0;  // over the support
};

MateResiduals mate_consistency_residuals(const LogHopfDerivatives& lh,
                                         const CandidateRotation& cr, const Deriv& d);

struct BonnetVerdict {
  std::string verdict;  // no-mate-theorem-1 | no-mate-theorem-2 |
                        // cmc-associate-family-exists | totally-umbilic | inconclusive
  std::string narrative;
  std::vector<std::string> hypotheses;  // which premises held or failed
};

BonnetVerdict theorem_verdict(bool compact, bool simply_connected, bool umbilics_discrete,
                              const Classification& cl);

}  // namespace bonnetlab
