#pragma once
// Sparse linear programs solved with a primal-dual interior-point method.

#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace h2atlas::lp {

using Eigen::Index;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { le, eq, ge };

/// min cᵀx  s.t.  rows (≤, =, ≥ rhs),  lb ≤ x ≤ ub.  Lower bounds must be
/// finite; upper bounds may be infinite.
class Problem {
public:
  Index add_variable(double lb, double ub, double cost);
  Index add_row(const std::vector<std::pair<Index, double>>& coeffs, Sense sense, double rhs);

  Index num_variables() const { return static_cast<Index>(lb_.size()); }
  Index num_rows() const { return static_cast<Index>(rhs_.size()); }

  const std::vector<double>& lower() const { return lb_; }
  const std::vector<double>& upper() const { return ub_; }
  const std::vector<double>& cost() const { return cost_; }
  const std::vector<Sense>& senses() const { return sense_; }
  const std::vector<double>& rhs() const { return rhs_; }
  void set_cost(Index j, double c) { cost_[static_cast<std::size_t>(j)] = c; }
  void set_bounds(Index j, double lb, double ub);

  /// Row-by-column constraint matrix.
  Eigen::SparseMatrix<double> matrix() const;

  double objective(const Eigen::VectorXd& x) const;

  /// Largest violation of a row or bound, relative to max(1, |rhs|) for
  /// rows and max(1, |bound|) for bounds.
  double max_violation(const Eigen::VectorXd& x) const;

private:
  std::vector<double> lb_, ub_, cost_, rhs_;
  std::vector<Sense> sense_;
  std::vector<Eigen::Triplet<double>> entries_;
};

enum class Status { optimal, infeasible };

struct Options {
  double tolerance = 1e-9;
  int max_iterations = 200;
  bool scaling = true;
};

struct Solution {
  Status status = Status::infeasible;
  Eigen::VectorXd x;       ///< primal values (original variables)
  Eigen::VectorXd duals;   ///< row multipliers
  Eigen::VectorXd reduced_costs;
  double objective = 0.0;
  int iterations = 0;
  double primal_residual = 0.0;  ///< relative, scaled problem
  double dual_residual = 0.0;    ///< relative, scaled problem
  double gap = 0.0;              ///< relative duality gap
  double infeasibility = 0.0;    ///< phase-1 optimum when infeasible
};

/// Solves with Mehrotra predictor-corrector steps on the regularized
/// augmented system. When the main solve does not converge an elastic
/// phase-1 problem decides between infeasibility and numerical failure;
/// the latter is retried without scaling and then raised as Error.
Solution solve(const Problem& p, const Options& options = {});

}  // namespace h2atlas::lp
