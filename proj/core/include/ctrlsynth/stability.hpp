// Discrete-time stability machinery: exact-rational characteristic
// polynomials (Faddeev-LeVerrier), the Jury/Schur-Cohn strict unit-circle
// test, eigenvalue estimates from the companion matrix, the unfolding depth
// after which a stable loop cannot produce new violations, and the
// steady-state offset set induced by controller round-off.

#ifndef CTRLSYNTH_STABILITY_HPP
#define CTRLSYNTH_STABILITY_HPP

#include <Eigen/Dense>
#include <complex>
#include <cstddef>
#include <vector>

#include "ctrlsynth/interval.hpp"
#include "ctrlsynth/model.hpp"
#include "ctrlsynth/rational.hpp"

namespace ctrlsynth {

// monic real polynomial in descending powers; coeffs[0] is exactly 1
struct char_poly {
  std::vector<rational> coeffs;

  char_poly() = default;
  explicit char_poly(std::vector<rational> coeffs);

  // det(zI - A), computed exactly
  static char_poly of(const rat_matrix& a);
  static char_poly of(const Eigen::MatrixXd& a);

  std::size_t degree() const { return coeffs.size() - 1; }
  Eigen::VectorXd to_doubles() const;
};

// true iff every root lies strictly inside the unit circle; any boundary
// contact (including a vanishing leading coefficient of a reduced row)
// counts as unstable
bool jury_check(const char_poly& p);

// true iff every root satisfies |z| < rho, via the substitution z -> rho z
// carried out in exact arithmetic
bool jury_check_margin(const char_poly& p, double rho);

// roots of the exact characteristic polynomial, estimated by a long-double
// QR iteration on the companion matrix; advisory only, never the soundness
// authority
std::vector<std::complex<double>> poly_roots(const char_poly& p);
std::vector<std::complex<double>> eigenvalues(const Eigen::MatrixXd& a);

// unfolding depth guarantee for a stable loop
struct completeness_threshold {
  enum class basis_kind { complex_rotation, real_monotone };
  int k_bar = 1;
  double theta = 0.0;  // rotation per step, radians; 0 for all-real spectra
  basis_kind basis = basis_kind::real_monotone;
};

// k_bar combines the full-rotation bound ceil(2 pi / min nonzero |arg z|)
// (when the spectrum has a non-real eigenvalue) with the smallest power j
// whose certified infinity-norm drops below box_ratio, so trajectories
// confined to a safe box for k_bar steps stay confined forever.  box_ratio
// is the smallest-to-largest safe-radius ratio the guarantee must cover
// (1 for uniform boxes).  Throws unstable_plant when the Jury test fails and
// repeated_eigenvalues when two roots coincide within 1e-9.
completeness_threshold completeness_bound(const Eigen::MatrixXd& a_cl,
                                          double t_s, double box_ratio = 1.0);

// certified upper bound on ||a^power||_inf via interval powers
double certified_power_norm(const Eigen::MatrixXd& a, int power);

// symmetric box of possible steady states under a persistent per-coordinate
// disturbance of magnitude delta routed through the gain path:
// +- (I - A_d + B_d K)^{-1} B_d K delta, solved in interval arithmetic.
// Throws singular_matrix when I - A_cl is not certifiably invertible.
box fwl_convergence_set(const discrete_plant& plant, const controller& ctrl,
                        double delta);

}  // namespace ctrlsynth

#endif
