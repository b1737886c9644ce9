#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <vector>

#include "vlab/grid.hpp"

namespace vlab {

// X^eps on the output grid: X_t = sqrt(eps) * int_0^{t/eps} G(y_s) ds.
struct ScaledFunctionalPath {
  double epsilon = 1.0;
  PathGrid out_grid;
  Eigen::MatrixXd values;  // count x N, row 0 = 0

  int components() const { return static_cast<int>(values.cols()); }
  Eigen::VectorXd increment(int s_idx, int t_idx) const {
    return (values.row(t_idx) - values.row(s_idx)).transpose();
  }
};

// Trapezoid integration of the N observable columns sampled on the fast
// uniform grid (step fast_step, starting at fast time 0), evaluated at the
// out_grid times. The out times must land on fast-grid nodes.
ScaledFunctionalPath scaled_path(const Eigen::MatrixXd& fine_g, double fast_step,
                                 double epsilon, const PathGrid& out_grid);

// Left-point second-order lift. Only the base-point areas are stored;
// two-parameter areas follow from Chen's relation.
struct RoughLift {
  ScaledFunctionalPath base;
  std::vector<Eigen::MatrixXd> area0;  // N x N per grid node

  // area over [t_s, t_t] via Chen: A_0t - A_0s - X_0s (x) X_st
  Eigen::MatrixXd area(int s_idx, int t_idx) const;
};

RoughLift lift_discrete(const ScaledFunctionalPath& path);

// Chen defect A_st - A_su - A_ut - X_su (x) X_ut; zero up to rounding for
// any lift built by lift_discrete.
Eigen::MatrixXd chen_defect(const RoughLift& lift, int s_idx, int u_idx,
                            int t_idx);

// Defect from explicitly supplied two-parameter areas and increments, for
// checking externally produced (or corrupted) area data.
Eigen::MatrixXd chen_defect_raw(const Eigen::MatrixXd& a_st,
                                const Eigen::MatrixXd& a_su,
                                const Eigen::MatrixXd& a_ut,
                                const Eigen::VectorXd& x_su,
                                const Eigen::VectorXd& x_ut);

// sup over grid pairs of |X_st| / |t-s|^gamma. All pairs for count <= 4096;
// dyadic-gap subsample (all starts, power-of-two gaps) beyond — an
// estimator, not the exact supremum.
double holder_seminorm(const ScaledFunctionalPath& path, double gamma);

// sup over grid pairs of ||A_st||_F / |t-s|^{gamma2}, same pair scheme.
double two_param_holder(const RoughLift& lift, double gamma2);

// Columns: t, X^1..X^N, A^{1,1}..A^{N,N} (row-major), one row per grid node.
void write_lift_csv(const RoughLift& lift, std::ostream& os);

}  // namespace vlab
