#include "vlab/roughlift.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace vlab {

ScaledFunctionalPath scaled_path(const Eigen::MatrixXd& fine_g, double fast_step,
                                 double epsilon, const PathGrid& out_grid) {
  if (fast_step <= 0.0)
    throw std::invalid_argument("scaled_path: fast_step must be > 0");
  if (epsilon <= 0.0 || epsilon > 1.0)
    throw std::invalid_argument("scaled_path: epsilon must lie in (0, 1]");
  if (out_grid.t0 != 0.0)
    throw std::invalid_argument("scaled_path: out grid must start at 0");
  const long long m = fine_g.rows();
  const int N = static_cast<int>(fine_g.cols());

  // cumulative trapezoid over the fast grid
  Eigen::MatrixXd cum(m, N);
  if (m > 0) cum.row(0).setZero();
  for (long long j = 1; j < m; ++j)
    cum.row(j) = cum.row(j - 1) + 0.5 * fast_step * (fine_g.row(j - 1) + fine_g.row(j));

  ScaledFunctionalPath out;
  out.epsilon = epsilon;
  out.out_grid = out_grid;
  out.values.resize(out_grid.count, N);
  const double root_eps = std::sqrt(epsilon);
  for (int k = 0; k < out_grid.count; ++k) {
    const double fast_time = out_grid.time(k) / epsilon;
    const double pos = fast_time / fast_step;
    const long long j = std::llround(pos);
    if (std::abs(pos - static_cast<double>(j)) > 1e-6)
      throw std::invalid_argument(
          "scaled_path: out grid time does not land on a fast-grid node");
    if (j < 0 || j >= m)
      throw std::invalid_argument("scaled_path: fast grid does not cover T/epsilon");
    out.values.row(k) = root_eps * cum.row(j);
  }
  if (!out.values.allFinite())
    throw std::runtime_error("scaled_path: non-finite values");
  return out;
}

RoughLift lift_discrete(const ScaledFunctionalPath& path) {
  const int count = static_cast<int>(path.values.rows());
  const int N = path.components();
  RoughLift lift;
  lift.base = path;
  lift.area0.assign(count, Eigen::MatrixXd::Zero(N, N));
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(N, N);
  for (int k = 1; k < count; ++k) {
    const Eigen::VectorXd left = path.values.row(k - 1).transpose();
    const Eigen::VectorXd delta =
        (path.values.row(k) - path.values.row(k - 1)).transpose();
    acc += left * delta.transpose();
    lift.area0[k] = acc;
  }
  return lift;
}

Eigen::MatrixXd RoughLift::area(int s_idx, int t_idx) const {
  const Eigen::VectorXd xs = base.values.row(s_idx).transpose();
  const Eigen::VectorXd inc = base.increment(s_idx, t_idx);
  return area0[t_idx] - area0[s_idx] - xs * inc.transpose();
}

Eigen::MatrixXd chen_defect(const RoughLift& lift, int s_idx, int u_idx,
                            int t_idx) {
  const int count = static_cast<int>(lift.base.values.rows());
  if (s_idx < 0 || t_idx >= count || !(s_idx <= u_idx && u_idx <= t_idx))
    throw std::invalid_argument("chen_defect: need grid indices s <= u <= t");
  const Eigen::VectorXd x_su = lift.base.increment(s_idx, u_idx);
  const Eigen::VectorXd x_ut = lift.base.increment(u_idx, t_idx);
  return lift.area(s_idx, t_idx) - lift.area(s_idx, u_idx) -
         lift.area(u_idx, t_idx) - x_su * x_ut.transpose();
}

Eigen::MatrixXd chen_defect_raw(const Eigen::MatrixXd& a_st,
                                const Eigen::MatrixXd& a_su,
                                const Eigen::MatrixXd& a_ut,
                                const Eigen::VectorXd& x_su,
                                const Eigen::VectorXd& x_ut) {
  return a_st - a_su - a_ut - x_su * x_ut.transpose();
}

namespace {

// All pairs below 4096 nodes; all starts with power-of-two gaps beyond.
template <typename Fn>
void for_grid_pairs(int count, Fn&& fn) {
  if (count <= 4096) {
    for (int i = 0; i < count; ++i)
      for (int j = i + 1; j < count; ++j) fn(i, j);
    return;
  }
  for (int gap = 1; gap < count; gap *= 2)
    for (int i = 0; i + gap < count; ++i) fn(i, i + gap);
  fn(0, count - 1);  // the full span is not a power-of-two gap in general
}

}  // namespace

double holder_seminorm(const ScaledFunctionalPath& path, double gamma) {
  if (gamma <= 0.0 || gamma > 1.0)
    throw std::invalid_argument("holder_seminorm: gamma must lie in (0, 1]");
  const int count = static_cast<int>(path.values.rows());
  const double h = path.out_grid.step;
  double sup = 0.0;
  for_grid_pairs(count, [&](int i, int j) {
    const double num = (path.values.row(j) - path.values.row(i)).norm();
    sup = std::max(sup, num / std::pow(h * (j - i), gamma));
  });
  return sup;
}

double two_param_holder(const RoughLift& lift, double gamma2) {
  if (gamma2 <= 0.0 || gamma2 > 2.0)
    throw std::invalid_argument("two_param_holder: exponent must lie in (0, 2]");
  const int count = static_cast<int>(lift.base.values.rows());
  const double h = lift.base.out_grid.step;
  double sup = 0.0;
  for_grid_pairs(count, [&](int i, int j) {
    sup = std::max(sup, lift.area(i, j).norm() / std::pow(h * (j - i), gamma2));
  });
  return sup;
}

void write_lift_csv(const RoughLift& lift, std::ostream& os) {
  const int count = static_cast<int>(lift.base.values.rows());
  const int N = lift.base.components();
  os << "t";
  for (int a = 0; a < N; ++a) os << ",X" << (a + 1);
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b) os << ",A" << (a + 1) << "_" << (b + 1);
  os << "\n";
  os.precision(17);
  for (int k = 0; k < count; ++k) {
    os << lift.base.out_grid.time(k);
    for (int a = 0; a < N; ++a) os << "," << lift.base.values(k, a);
    for (int a = 0; a < N; ++a)
      for (int b = 0; b < N; ++b) os << "," << lift.area0[k](a, b);
    os << "\n";
  }
}

}  // namespace vlab
