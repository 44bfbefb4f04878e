// Plant models, safety specifications, and the state-feedback controller.
// Discretization is zero-order hold via scaling-and-squaring of the augmented
// matrix [[A, B], [0, 0]] * T_s, evaluated in interval arithmetic so every
// returned entry carries a certified error radius.

#ifndef CTRLSYNTH_MODEL_HPP
#define CTRLSYNTH_MODEL_HPP

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "ctrlsynth/errors.hpp"
#include "ctrlsynth/fixedpoint.hpp"
#include "ctrlsynth/interval.hpp"
#include "ctrlsynth/rational.hpp"

namespace ctrlsynth {

// x'(t) = A x(t) + B u(t)
struct continuous_plant {
  Eigen::MatrixXd A;  // n x n
  Eigen::MatrixXd B;  // n x m

  continuous_plant() = default;
  continuous_plant(Eigen::MatrixXd A, Eigen::MatrixXd B);

  std::size_t n() const { return static_cast<std::size_t>(A.rows()); }
  std::size_t m() const { return static_cast<std::size_t>(B.cols()); }
};

// x_{k+1} = A_d x_k + B_d u_k at sample time T_s.  a_rad and b_rad are
// per-entry certified error radii: the exact discretized entries lie within
// them.  Plants stated directly in discrete time carry zero radii.
struct discrete_plant {
  Eigen::MatrixXd A_d;
  Eigen::MatrixXd B_d;
  Eigen::MatrixXd a_rad;
  Eigen::MatrixXd b_rad;
  double T_s = 0.0;

  discrete_plant() = default;
  discrete_plant(Eigen::MatrixXd A_d, Eigen::MatrixXd B_d, double T_s);
  discrete_plant(Eigen::MatrixXd A_d, Eigen::MatrixXd B_d,
                 Eigen::MatrixXd a_rad, Eigen::MatrixXd b_rad, double T_s);

  std::size_t n() const { return static_cast<std::size_t>(A_d.rows()); }
  std::size_t m() const { return static_cast<std::size_t>(B_d.cols()); }

  // entries as intervals around the certified radii
  interval_matrix a_interval() const;
  interval_matrix b_interval() const;
};

// per-coordinate state bounds, scalar input bounds, and the initial set
struct safety_spec {
  box state_box;
  interval input_bounds;
  box init_box;

  safety_spec() = default;
  safety_spec(box state_box, interval input_bounds, box init_box);

  std::size_t n() const { return state_box.size(); }
};

// single-input gain row; every entry is exactly representable in its format
struct controller {
  std::vector<fixed_value> k;

  controller() = default;
  explicit controller(std::vector<fixed_value> k);
  // quantizes each gain and rejects values that do not round-trip exactly
  static controller from_doubles(const Eigen::VectorXd& gains,
                                 fixed_format fmt);

  std::size_t n() const { return k.size(); }
  fixed_format format() const;
  Eigen::VectorXd gains() const;
  double abs_gain_sum() const;
};

// A_d = exp(A T_s), B_d = (integral of exp(A tau) over [0, T_s]) B, with a
// certified per-entry radius <= tol * |entry| + 1e-14.  Throws non_finite,
// reporting the scaling depth, if the series cannot be certified.
discrete_plant discretize(const continuous_plant& plant, double t_s,
                          double tol = 1e-12);

// A_d - B_d K with gains read at their exact stored values
Eigen::MatrixXd closed_loop_matrix(const discrete_plant& plant,
                                   const controller& ctrl);
rat_matrix closed_loop_rational(const discrete_plant& plant,
                                const controller& ctrl);

// interval closed loop covering the discretization radii; with a plant
// format, each A_d/B_d entry additionally covers its representation at that
// format (the value a fixed-point simulation actually multiplies by)
interval_matrix closed_loop_interval(const discrete_plant& plant,
                                     const controller& ctrl);
interval_matrix closed_loop_interval(const discrete_plant& plant,
                                     const controller& ctrl,
                                     fixed_format plant_fmt);

}  // namespace ctrlsynth

#endif
