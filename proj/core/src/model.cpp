#include "ctrlsynth/model.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace ctrlsynth {

namespace {

void require_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw non_finite(std::string(what) + ": non-finite entry");
}

interval_matrix scale(const interval_matrix& m, const interval& s) {
  interval_matrix r(m.rows, m.cols);
  for (std::size_t i = 0; i < m.data.size(); ++i) r.data[i] = m.data[i] * s;
  return r;
}

interval_matrix widen(const interval_matrix& m, double rad) {
  interval_matrix r(m.rows, m.cols);
  interval slack(-rad, rad);
  for (std::size_t i = 0; i < m.data.size(); ++i) r.data[i] = m.data[i] + slack;
  return r;
}

// upper bound on the Taylor tail sum_{k>terms} theta^k / k! for theta <= 1
double taylor_tail(double theta, int terms) {
  double num = 1.0;
  for (int k = 0; k < terms + 1; ++k) num = mul_up(num, theta);
  double den = 1.0;
  for (int k = 2; k <= terms + 1; ++k) den = mul_down(den, static_cast<double>(k));
  double head = div_up(num, den);
  // geometric envelope of the remaining ratio theta / (terms + 2)
  double ratio = div_up(theta, static_cast<double>(terms + 2));
  return div_up(head, sub_down(1.0, ratio));
}

}  // namespace

continuous_plant::continuous_plant(Eigen::MatrixXd A_in, Eigen::MatrixXd B_in)
    : A(std::move(A_in)), B(std::move(B_in)) {
  if (A.rows() < 1 || A.rows() != A.cols())
    throw validation_error("continuous plant: A must be square, n >= 1");
  if (B.rows() != A.rows() || B.cols() < 1)
    throw validation_error("continuous plant: B must be n x m, m >= 1");
  require_finite(A, "continuous plant A");
  require_finite(B, "continuous plant B");
}

discrete_plant::discrete_plant(Eigen::MatrixXd A_in, Eigen::MatrixXd B_in,
                               double t_s)
    : discrete_plant(std::move(A_in), std::move(B_in), Eigen::MatrixXd(),
                     Eigen::MatrixXd(), t_s) {}

discrete_plant::discrete_plant(Eigen::MatrixXd A_in, Eigen::MatrixXd B_in,
                               Eigen::MatrixXd a_rad_in,
                               Eigen::MatrixXd b_rad_in, double t_s)
    : A_d(std::move(A_in)),
      B_d(std::move(B_in)),
      a_rad(std::move(a_rad_in)),
      b_rad(std::move(b_rad_in)),
      T_s(t_s) {
  if (A_d.rows() < 1 || A_d.rows() != A_d.cols())
    throw validation_error("discrete plant: A_d must be square, n >= 1");
  if (B_d.rows() != A_d.rows() || B_d.cols() < 1)
    throw validation_error("discrete plant: B_d must be n x m, m >= 1");
  if (!(T_s > 0.0)) throw validation_error("discrete plant: T_s must be > 0");
  require_finite(A_d, "discrete plant A_d");
  require_finite(B_d, "discrete plant B_d");
  if (a_rad.size() == 0) a_rad = Eigen::MatrixXd::Zero(A_d.rows(), A_d.cols());
  if (b_rad.size() == 0) b_rad = Eigen::MatrixXd::Zero(B_d.rows(), B_d.cols());
  if (a_rad.rows() != A_d.rows() || a_rad.cols() != A_d.cols() ||
      b_rad.rows() != B_d.rows() || b_rad.cols() != B_d.cols())
    throw dimension_mismatch("discrete plant: radius shapes");
  if ((a_rad.array() < 0).any() || (b_rad.array() < 0).any())
    throw validation_error("discrete plant: negative error radius");
}

interval_matrix discrete_plant::a_interval() const {
  return interval_matrix::centered(A_d, a_rad);
}

interval_matrix discrete_plant::b_interval() const {
  return interval_matrix::centered(B_d, b_rad);
}

safety_spec::safety_spec(box state_box_in, interval input_bounds_in,
                         box init_box_in)
    : state_box(std::move(state_box_in)),
      input_bounds(input_bounds_in),
      init_box(std::move(init_box_in)) {
  if (state_box.size() == 0 || state_box.size() != init_box.size())
    throw validation_error("safety spec: state and init boxes must share n >= 1");
  for (std::size_t i = 0; i < state_box.size(); ++i) {
    if (!(state_box[i].lo < state_box[i].hi))
      throw validation_error("safety spec: empty state bound at coordinate " +
                             std::to_string(i + 1));
  }
  if (!(input_bounds.lo < input_bounds.hi))
    throw validation_error("safety spec: empty input bounds");
  if (!state_box.contains(init_box))
    throw validation_error("safety spec: init box must lie inside state box");
}

controller::controller(std::vector<fixed_value> k_in) : k(std::move(k_in)) {
  if (k.empty()) throw validation_error("controller: empty gain vector");
  for (const auto& v : k)
    if (!(v.format == k.front().format))
      throw validation_error("controller: mixed gain formats");
}

controller controller::from_doubles(const Eigen::VectorXd& gains,
                                    fixed_format fmt) {
  std::vector<fixed_value> k;
  k.reserve(static_cast<std::size_t>(gains.size()));
  for (Eigen::Index i = 0; i < gains.size(); ++i) {
    fixed_value v = quantize(gains[i], fmt);
    if (v.value() != gains[i])
      throw validation_error("controller gain " + std::to_string(i + 1) +
                             " is not representable in " + fmt.str());
    k.push_back(v);
  }
  return controller(std::move(k));
}

fixed_format controller::format() const { return k.front().format; }

Eigen::VectorXd controller::gains() const {
  Eigen::VectorXd g(static_cast<Eigen::Index>(k.size()));
  for (std::size_t i = 0; i < k.size(); ++i)
    g[static_cast<Eigen::Index>(i)] = k[i].value();
  return g;
}

double controller::abs_gain_sum() const {
  double s = 0.0;
  for (const auto& v : k) s += std::abs(v.value());
  return s;
}

discrete_plant discretize(const continuous_plant& plant, double t_s,
                          double tol) {
  if (!(t_s > 0.0)) throw validation_error("discretize: T_s must be > 0");
  if (!(tol > 0.0)) throw validation_error("discretize: tol must be > 0");
  const std::size_t n = plant.n();
  const std::size_t m = plant.m();
  const std::size_t d = n + m;

  // augmented generator [[A, B], [0, 0]] * T_s; exp of it packs A_d and B_d
  interval_matrix gen(d, d);
  interval ts(t_s);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j)
      gen(i, j) = interval(plant.A(static_cast<Eigen::Index>(i),
                                   static_cast<Eigen::Index>(j))) *
                  ts;
    for (std::size_t j = 0; j < m; ++j)
      gen(i, n + j) = interval(plant.B(static_cast<Eigen::Index>(i),
                                       static_cast<Eigen::Index>(j))) *
                      ts;
  }

  int base_depth = 0;
  const double norm = gen.inf_norm_upper();
  if (!std::isfinite(norm)) throw non_finite("discretize: generator overflow");
  while (std::ldexp(norm, -base_depth) > 0.5 && base_depth < 60) ++base_depth;

  int depth = base_depth;
  for (int attempt = 0; attempt < 4; ++attempt) {
    depth = base_depth + 2 * attempt;
    const int terms = 20 + 4 * attempt;

    interval_matrix ms = scale(gen, interval(std::ldexp(1.0, -depth)));
    interval_matrix sum = interval_matrix::identity(d);
    interval_matrix term = interval_matrix::identity(d);
    for (int kk = 1; kk <= terms; ++kk) {
      term = term * ms;
      term = scale(term, interval(1.0) / interval(static_cast<double>(kk)));
      sum = sum + term;
    }
    sum = widen(sum, taylor_tail(ms.inf_norm_upper(), terms));
    for (int sq = 0; sq < depth; ++sq) sum = sum * sum;

    Eigen::MatrixXd mid(d, d), rad(d, d);
    bool finite = true;
    for (std::size_t i = 0; i < d && finite; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        const interval& e = sum(i, j);
        if (!std::isfinite(e.lo) || !std::isfinite(e.hi)) {
          finite = false;
          break;
        }
        mid(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            e.mid();
        rad(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            e.rad();
      }
    if (!finite) continue;

    bool certified = true;
    for (std::size_t i = 0; i < n && certified; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        const Eigen::Index ii = static_cast<Eigen::Index>(i);
        const Eigen::Index jj = static_cast<Eigen::Index>(j);
        if (rad(ii, jj) > tol * std::abs(mid(ii, jj)) + 1e-14) {
          certified = false;
          break;
        }
      }
    if (!certified) continue;

    const Eigen::Index ni = static_cast<Eigen::Index>(n);
    const Eigen::Index mi = static_cast<Eigen::Index>(m);
    return discrete_plant(mid.topLeftCorner(ni, ni),
                          mid.topRightCorner(ni, mi),
                          rad.topLeftCorner(ni, ni),
                          rad.topRightCorner(ni, mi), t_s);
  }
  throw non_finite("discretize: series not certified to tol at scaling depth " +
                   std::to_string(depth));
}

Eigen::MatrixXd closed_loop_matrix(const discrete_plant& plant,
                                   const controller& ctrl) {
  if (ctrl.n() != plant.n() || plant.m() != 1)
    throw dimension_mismatch("closed loop: need a 1 x n gain row");
  return plant.A_d - plant.B_d * ctrl.gains().transpose();
}

rat_matrix closed_loop_rational(const discrete_plant& plant,
                                const controller& ctrl) {
  if (ctrl.n() != plant.n() || plant.m() != 1)
    throw dimension_mismatch("closed loop: need a 1 x n gain row");
  rat_matrix k(1, ctrl.n());
  for (std::size_t j = 0; j < ctrl.n(); ++j)
    k(0, j) = to_rational(ctrl.k[j].value());
  return rat_matrix::from(plant.A_d) - rat_matrix::from(plant.B_d) * k;
}

namespace {

interval represent(double entry, double rad, const fixed_format* fmt) {
  interval e = interval::centered(entry, rad);
  if (fmt != nullptr) e = hull(e, interval(quantize(entry, *fmt).value()));
  return e;
}

interval_matrix closed_loop_interval_impl(const discrete_plant& plant,
                                          const controller& ctrl,
                                          const fixed_format* fmt) {
  if (ctrl.n() != plant.n() || plant.m() != 1)
    throw dimension_mismatch("closed loop: need a 1 x n gain row");
  const std::size_t n = plant.n();
  interval_matrix acl(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Index ii = static_cast<Eigen::Index>(i);
    interval bi = represent(plant.B_d(ii, 0), plant.b_rad(ii, 0), fmt);
    for (std::size_t j = 0; j < n; ++j) {
      const Eigen::Index jj = static_cast<Eigen::Index>(j);
      interval aij = represent(plant.A_d(ii, jj), plant.a_rad(ii, jj), fmt);
      acl(i, j) = aij - bi * interval(ctrl.k[j].value());
    }
  }
  return acl;
}

}  // namespace

interval_matrix closed_loop_interval(const discrete_plant& plant,
                                     const controller& ctrl) {
  return closed_loop_interval_impl(plant, ctrl, nullptr);
}

interval_matrix closed_loop_interval(const discrete_plant& plant,
                                     const controller& ctrl,
                                     fixed_format plant_fmt) {
  return closed_loop_interval_impl(plant, ctrl, &plant_fmt);
}

}  // namespace ctrlsynth
