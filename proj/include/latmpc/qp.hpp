#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <iosfwd>
#include <string>

namespace latmpc {

/// Convex quadratic program in standard two-sided form
///   minimize 1/2 z' P z + q' z   subject to   l <= A z <= u.
struct QuadraticProgram {
  Eigen::SparseMatrix<double> p;  // symmetric positive semidefinite
  Eigen::VectorXd q;
  Eigen::SparseMatrix<double> a;
  Eigen::VectorXd l;
  Eigen::VectorXd u;

  int vars() const { return static_cast<int>(p.rows()); }
  int rows() const { return static_cast<int>(a.rows()); }
  /// Checks dimensions, l <= u, and symmetry of P to 1e-8.
  void validate() const;
};

struct SolverSettings {
  double rho = 0.1;           // dual step penalty
  double sigma_reg = 1e-6;    // primal regularization
  double alpha_relax = 1.6;   // over-relaxation
  double eps_abs = 1e-4;
  double eps_rel = 1e-4;
  double eps_inf = 1e-6;      // infeasibility certificate tolerance
  int max_iter = 4000;
  int check_interval = 25;    // iterations between termination checks
  bool warm_start = true;
  bool scaling = true;        // Ruiz equilibration, computed once per solve
  bool polish = false;        // active-set refinement of a converged solution
};

enum class QpStatus { Solved, MaxIter, PrimalInfeasible, DualInfeasible };

const char* to_string(QpStatus s);

struct QpSolution {
  Eigen::VectorXd z;       // primal
  Eigen::VectorXd y_dual;  // dual, one multiplier per constraint row
  QpStatus status = QpStatus::MaxIter;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double solve_time_s = 0.0;
};

/// Operator-splitting (ADMM) solver. An instance owns mutable workspace and
/// caches the KKT factorization pattern across solves with an unchanged
/// sparsity layout, so a receding-horizon loop pays symbolic analysis once.
/// Distinct instances may run concurrently; problems and solutions are values.
class QpSolver {
 public:
  QpSolver() = default;
  explicit QpSolver(SolverSettings settings) : settings_(settings) {}

  SolverSettings& settings() { return settings_; }
  const SolverSettings& settings() const { return settings_; }

  /// Solves the program, optionally warm-started from a previous solution of
  /// a problem with the same dimensions. Non-convergence is reported through
  /// the status, not an exception.
  QpSolution solve(const QuadraticProgram& qp, const QpSolution* warm = nullptr);

 private:
  void equilibrate(const QuadraticProgram& qp);
  bool factorize(const QuadraticProgram& qp);
  void polish(const QuadraticProgram& qp, QpSolution& sol) const;

  SolverSettings settings_;

  // scaling
  Eigen::VectorXd d_scale_, e_scale_;  // variable and row scalings
  double c_scale_ = 1.0;

  // scaled problem
  Eigen::SparseMatrix<double> ps_, as_;
  Eigen::VectorXd qs_, ls_, us_;

  // KKT system; dense problems go through the Schur complement on the
  // primal block instead of the full sparse factorization
  Eigen::SparseMatrix<double> kkt_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Upper> ldlt_;
  bool dense_path_ = false;
  Eigen::MatrixXd schur_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd rho_vec_;
  bool pattern_ready_ = false;
  int cached_n_ = -1, cached_m_ = -1;
  Eigen::VectorXi cached_p_outer_, cached_p_inner_, cached_a_outer_, cached_a_inner_;
};

/// One-off convenience wrapper around QpSolver.
QpSolution solve_qp(const QuadraticProgram& qp, const SolverSettings& settings = {},
                    const QpSolution* warm = nullptr);

/// Infinity norms of the primal residual ||Az - clamp(Az, l, u)|| and the
/// dual residual ||Pz + q + A'y||. Pure diagnostic.
std::pair<double, double> kkt_residuals(const QuadraticProgram& qp, const Eigen::VectorXd& z,
                                        const Eigen::VectorXd& y_dual);

/// Plain-text sparse triplet round trip for offline comparison.
void dump_qp(const QuadraticProgram& qp, std::ostream& os);
QuadraticProgram load_qp(std::istream& is);

}  // namespace latmpc
