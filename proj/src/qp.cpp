#include "latmpc/qp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace latmpc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double inf_norm(const Eigen::VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>();
}

// Per-column and per-row infinity norms of a sparse matrix.
void col_norms(const Eigen::SparseMatrix<double>& m, Eigen::VectorXd& out) {
  out.setZero(m.cols());
  for (int k = 0; k < m.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it)
      out(it.col()) = std::max(out(it.col()), std::abs(it.value()));
}

void row_norms(const Eigen::SparseMatrix<double>& m, Eigen::VectorXd& out) {
  out.setZero(m.rows());
  for (int k = 0; k < m.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it)
      out(it.row()) = std::max(out(it.row()), std::abs(it.value()));
}

bool same_pattern(const Eigen::SparseMatrix<double>& m, const Eigen::VectorXi& outer,
                  const Eigen::VectorXi& inner) {
  if (outer.size() != m.outerSize() + 1 || inner.size() != m.nonZeros()) return false;
  for (int i = 0; i <= m.outerSize(); ++i)
    if (m.outerIndexPtr()[i] != outer(i)) return false;
  for (int i = 0; i < m.nonZeros(); ++i)
    if (m.innerIndexPtr()[i] != inner(i)) return false;
  return true;
}

void store_pattern(const Eigen::SparseMatrix<double>& m, Eigen::VectorXi& outer,
                   Eigen::VectorXi& inner) {
  outer = Eigen::Map<const Eigen::VectorXi>(m.outerIndexPtr(), m.outerSize() + 1);
  inner = Eigen::Map<const Eigen::VectorXi>(m.innerIndexPtr(), m.nonZeros());
}

}  // namespace

const char* to_string(QpStatus s) {
  switch (s) {
    case QpStatus::Solved: return "solved";
    case QpStatus::MaxIter: return "max_iter";
    case QpStatus::PrimalInfeasible: return "primal_infeasible";
    case QpStatus::DualInfeasible: return "dual_infeasible";
  }
  return "unknown";
}

void QuadraticProgram::validate() const {
  const int n = vars();
  const int m = rows();
  if (p.cols() != n || q.size() != n)
    throw std::invalid_argument("qp: cost dimension mismatch");
  if (a.cols() != n || l.size() != m || u.size() != m)
    throw std::invalid_argument("qp: constraint dimension mismatch");
  for (int i = 0; i < m; ++i)
    if (!(l(i) <= u(i))) throw std::invalid_argument("qp: row with l > u");
  Eigen::SparseMatrix<double> diff = Eigen::SparseMatrix<double>(p.transpose()) - p;
  for (int k = 0; k < diff.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(diff, k); it; ++it)
      if (std::abs(it.value()) > 1e-8)
        throw std::invalid_argument("qp: P is not symmetric to 1e-8");
}

void QpSolver::equilibrate(const QuadraticProgram& qp) {
  const int n = qp.vars();
  const int m = qp.rows();
  d_scale_ = Eigen::VectorXd::Ones(n);
  e_scale_ = Eigen::VectorXd::Ones(m);
  c_scale_ = 1.0;

  ps_ = qp.p;
  as_ = qp.a;
  qs_ = qp.q;
  ls_ = qp.l;
  us_ = qp.u;
  if (!settings_.scaling) return;

  Eigen::VectorXd pc(n), ac(n), ar(m), dd(n), ee(m);
  for (int pass = 0; pass < 10; ++pass) {
    col_norms(ps_, pc);
    col_norms(as_, ac);
    row_norms(as_, ar);
    for (int j = 0; j < n; ++j) {
      double nrm = std::max(pc(j), ac(j));
      if (nrm == 0.0) nrm = 1.0;
      dd(j) = 1.0 / std::sqrt(std::clamp(nrm, 1e-8, 1e8));
    }
    for (int i = 0; i < m; ++i) {
      double nrm = ar(i);
      if (nrm == 0.0) nrm = 1.0;
      ee(i) = 1.0 / std::sqrt(std::clamp(nrm, 1e-8, 1e8));
    }

    ps_ = dd.asDiagonal() * ps_ * dd.asDiagonal();
    qs_ = dd.cwiseProduct(qs_);
    as_ = ee.asDiagonal() * as_ * dd.asDiagonal();
    for (int i = 0; i < m; ++i) {
      if (std::isfinite(ls_(i))) ls_(i) *= ee(i);
      if (std::isfinite(us_(i))) us_(i) *= ee(i);
    }
    d_scale_ = d_scale_.cwiseProduct(dd);
    e_scale_ = e_scale_.cwiseProduct(ee);

    // cost normalization
    col_norms(ps_, pc);
    const double p_mean = n > 0 ? pc.mean() : 0.0;
    const double gamma = 1.0 / std::clamp(std::max(p_mean, inf_norm(qs_)), 1e-8, 1e8);
    ps_ *= gamma;
    qs_ *= gamma;
    c_scale_ *= gamma;
  }
}

bool QpSolver::factorize(const QuadraticProgram& qp) {
  const int n = qp.vars();
  const int m = qp.rows();

  // rho per row: boosted on (near-)equality rows, fixed across iterations
  rho_vec_.resize(m);
  for (int i = 0; i < m; ++i) {
    if (ls_(i) == -kInf && us_(i) == kInf)
      rho_vec_(i) = 1e-6;
    else if (std::abs(us_(i) - ls_(i)) < 1e-10)
      rho_vec_(i) = 1e3 * settings_.rho;
    else
      rho_vec_(i) = settings_.rho;
  }

  // A dense cost block (condensed MPC) makes the primal Schur complement
  // M = P + sigma I + A' diag(rho) A cheaper to factor and to iterate with
  // than the filled sparse KKT factorization.
  dense_path_ = n > 0 && ps_.nonZeros() > 0.25 * double(n) * double(n);
  if (dense_path_) {
    schur_ = Eigen::MatrixXd(ps_);
    schur_.diagonal().array() += settings_.sigma_reg;
    const Eigen::SparseMatrix<double> as_rows = as_.transpose();  // rows as columns
    for (int i = 0; i < m; ++i) {
      // rank-one update rho_i a_i a_i'
      for (Eigen::SparseMatrix<double>::InnerIterator it1(as_rows, i); it1; ++it1)
        for (Eigen::SparseMatrix<double>::InnerIterator it2(as_rows, i); it2; ++it2)
          schur_(it1.row(), it2.row()) += rho_vec_(i) * it1.value() * it2.value();
    }
    llt_.compute(schur_);
    if (llt_.info() == Eigen::Success) return true;
    dense_path_ = false;  // fall through to the sparse factorization
  }

  // upper triangle of [[P + sigma I, A'], [., -diag(1/rho)]]
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(ps_.nonZeros() + as_.nonZeros() + n + m);
  for (int k = 0; k < ps_.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(ps_, k); it; ++it)
      if (it.row() <= it.col()) trips.emplace_back(it.row(), it.col(), it.value());
  for (int j = 0; j < n; ++j) trips.emplace_back(j, j, settings_.sigma_reg);
  for (int k = 0; k < as_.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(as_, k); it; ++it)
      trips.emplace_back(it.col(), n + it.row(), it.value());
  for (int i = 0; i < m; ++i) trips.emplace_back(n + i, n + i, -1.0 / rho_vec_(i));

  kkt_.resize(n + m, n + m);
  kkt_.setFromTriplets(trips.begin(), trips.end());
  kkt_.makeCompressed();

  const bool reuse = pattern_ready_ && cached_n_ == n && cached_m_ == m &&
                     same_pattern(qp.p, cached_p_outer_, cached_p_inner_) &&
                     same_pattern(qp.a, cached_a_outer_, cached_a_inner_);
  if (!reuse) {
    ldlt_.analyzePattern(kkt_);
    store_pattern(qp.p, cached_p_outer_, cached_p_inner_);
    store_pattern(qp.a, cached_a_outer_, cached_a_inner_);
    cached_n_ = n;
    cached_m_ = m;
    pattern_ready_ = true;
  }
  ldlt_.factorize(kkt_);
  return ldlt_.info() == Eigen::Success;
}

QpSolution QpSolver::solve(const QuadraticProgram& qp, const QpSolution* warm) {
  const auto t0 = std::chrono::steady_clock::now();
  qp.validate();
  const int n = qp.vars();
  const int m = qp.rows();

  equilibrate(qp);
  QpSolution sol;
  if (!factorize(qp)) {
    sol.status = QpStatus::MaxIter;
    sol.z = Eigen::VectorXd::Zero(n);
    sol.y_dual = Eigen::VectorXd::Zero(m);
    return sol;
  }

  const double alpha = settings_.alpha_relax;
  const double sigma = settings_.sigma_reg;

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(m);
  if (warm && settings_.warm_start && warm->z.size() == n && warm->y_dual.size() == m) {
    x = warm->z.cwiseQuotient(d_scale_);
    y = c_scale_ * warm->y_dual.cwiseQuotient(e_scale_);
    z = (as_ * x).cwiseMax(ls_).cwiseMin(us_);
  }

  Eigen::VectorXd rhs(n + m), zt(m), z_prev(m), xt(n), nu(m);
  Eigen::VectorXd x_check = x, y_check = y;
  Eigen::VectorXd x_us(n), y_us(m), z_us(m), work_n(n), work_m(m);

  std::optional<QpStatus> verdict;
  int iter = 0;
  for (; iter < settings_.max_iter && !verdict; ++iter) {
    if (dense_path_) {
      const Eigen::VectorXd b2 = z - y.cwiseQuotient(rho_vec_);
      xt = sigma * x - qs_ + as_.transpose() * rho_vec_.cwiseProduct(b2);
      llt_.solveInPlace(xt);
      nu = rho_vec_.cwiseProduct(as_ * xt - b2);
    } else {
      rhs.head(n) = sigma * x - qs_;
      rhs.tail(m) = z - y.cwiseQuotient(rho_vec_);
      const Eigen::VectorXd sol_kkt = ldlt_.solve(rhs);
      xt = sol_kkt.head(n);
      nu = sol_kkt.tail(m);
    }

    zt = z + (nu - y).cwiseQuotient(rho_vec_);
    x = alpha * xt + (1.0 - alpha) * x;
    z_prev = z;
    z = (alpha * zt + (1.0 - alpha) * z_prev + y.cwiseQuotient(rho_vec_))
            .cwiseMax(ls_)
            .cwiseMin(us_);
    y += rho_vec_.cwiseProduct(alpha * zt + (1.0 - alpha) * z_prev - z);

    if (iter % settings_.check_interval == 0) {
      // unscaled iterates
      x_us = d_scale_.cwiseProduct(x);
      y_us = e_scale_.cwiseProduct(y) / c_scale_;
      z_us = z.cwiseQuotient(e_scale_);

      work_m = qp.a * x_us;
      const double ax_norm = inf_norm(work_m);
      work_m -= z_us;
      const double r_prim = inf_norm(work_m);
      const double eps_prim =
          settings_.eps_abs + settings_.eps_rel * std::max(ax_norm, inf_norm(z_us));

      work_n = qp.p * x_us;
      const double px_norm = inf_norm(work_n);
      Eigen::VectorXd aty = qp.a.transpose() * y_us;
      const double dual_scale = std::max({px_norm, inf_norm(aty), inf_norm(qp.q)});
      work_n += qp.q + aty;
      const double r_dual = inf_norm(work_n);
      const double eps_dual = settings_.eps_abs + settings_.eps_rel * dual_scale;

      sol.primal_residual = r_prim;
      sol.dual_residual = r_dual;
      if (r_prim <= eps_prim && r_dual <= eps_dual) verdict = QpStatus::Solved;

      if (!verdict && iter > 0) {
        // primal infeasibility certificate from the dual delta
        Eigen::VectorXd dy = e_scale_.cwiseProduct(y - y_check) / c_scale_;
        const double dy_norm = inf_norm(dy);
        if (dy_norm > 1e-12) {
          bool cert = inf_norm(qp.a.transpose() * dy) <= settings_.eps_inf * dy_norm;
          double support = 0.0;
          for (int i = 0; i < m && cert; ++i) {
            if (qp.u(i) != kInf)
              support += qp.u(i) * std::max(dy(i), 0.0);
            else if (dy(i) > settings_.eps_inf * dy_norm)
              cert = false;
            if (qp.l(i) != -kInf)
              support += qp.l(i) * std::min(dy(i), 0.0);
            else if (dy(i) < -settings_.eps_inf * dy_norm)
              cert = false;
          }
          if (cert && support <= -settings_.eps_inf * dy_norm)
            verdict = QpStatus::PrimalInfeasible;
        }
        // dual infeasibility certificate from the primal delta
        if (!verdict) {
          Eigen::VectorXd dx = d_scale_.cwiseProduct(x - x_check);
          const double dx_norm = inf_norm(dx);
          if (dx_norm > 1e-12) {
            bool cert = inf_norm(qp.p * dx) <= settings_.eps_inf * dx_norm &&
                        qp.q.dot(dx) <= -settings_.eps_inf * dx_norm;
            Eigen::VectorXd adx = qp.a * dx;
            for (int i = 0; i < m && cert; ++i) {
              if (qp.u(i) == kInf && qp.l(i) == -kInf) continue;
              if (qp.u(i) == kInf)
                cert = adx(i) >= -settings_.eps_inf * dx_norm;
              else if (qp.l(i) == -kInf)
                cert = adx(i) <= settings_.eps_inf * dx_norm;
              else
                cert = std::abs(adx(i)) <= settings_.eps_inf * dx_norm;
            }
            if (cert) verdict = QpStatus::DualInfeasible;
          }
        }
      }
      x_check = x;
      y_check = y;
    }
  }

  sol.status = verdict.value_or(QpStatus::MaxIter);
  sol.iterations = iter;
  sol.z = d_scale_.cwiseProduct(x);
  sol.y_dual = e_scale_.cwiseProduct(y) / c_scale_;

  if (sol.status == QpStatus::Solved && settings_.polish) polish(qp, sol);

  std::tie(sol.primal_residual, sol.dual_residual) = kkt_residuals(qp, sol.z, sol.y_dual);
  sol.solve_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return sol;
}

void QpSolver::polish(const QuadraticProgram& qp, QpSolution& sol) const {
  const int n = qp.vars();
  const int m = qp.rows();
  constexpr double kReg = 1e-7;
  const double tol = 1e-8;

  std::vector<int> active;
  std::vector<bool> at_upper;
  Eigen::VectorXd az = qp.a * sol.z;
  for (int i = 0; i < m; ++i) {
    const bool low = sol.y_dual(i) < -tol || (qp.l(i) != -kInf && az(i) <= qp.l(i) + tol);
    const bool up = sol.y_dual(i) > tol || (qp.u(i) != kInf && az(i) >= qp.u(i) - tol);
    if (up && qp.u(i) != kInf) {
      active.push_back(i);
      at_upper.push_back(true);
    } else if (low && qp.l(i) != -kInf) {
      active.push_back(i);
      at_upper.push_back(false);
    }
  }
  const int k = static_cast<int>(active.size());

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(qp.p.nonZeros() + qp.a.nonZeros() + n + k);
  for (int c = 0; c < qp.p.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(qp.p, c); it; ++it)
      if (it.row() <= it.col()) trips.emplace_back(it.row(), it.col(), it.value());
  for (int j = 0; j < n; ++j) trips.emplace_back(j, j, kReg);
  // A is column-major; gather active rows by scanning once
  for (int c = 0; c < qp.a.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(qp.a, c); it; ++it) {
      const auto pos = std::lower_bound(active.begin(), active.end(), static_cast<int>(it.row()));
      if (pos != active.end() && *pos == static_cast<int>(it.row())) {
        const int r = static_cast<int>(pos - active.begin());
        trips.emplace_back(it.col(), n + r, it.value());
      }
    }
  for (int r = 0; r < k; ++r) trips.emplace_back(n + r, n + r, -kReg);

  Eigen::SparseMatrix<double> h(n + k, n + k);
  h.setFromTriplets(trips.begin(), trips.end());
  h.makeCompressed();

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Upper> ldlt(h);
  if (ldlt.info() != Eigen::Success) return;

  Eigen::VectorXd rhs(n + k);
  rhs.head(n) = -qp.q;
  for (int r = 0; r < k; ++r) rhs(n + r) = at_upper[r] ? qp.u(active[r]) : qp.l(active[r]);

  // iterative refinement against the unregularized KKT operator
  Eigen::VectorXd t = Eigen::VectorXd::Zero(n + k);
  for (int it = 0; it < 5; ++it) {
    Eigen::VectorXd resid = rhs;
    resid -= h.selfadjointView<Eigen::Upper>() * t;
    resid.head(n) -= kReg * t.head(n);
    resid.tail(k) += kReg * t.tail(k);
    t += ldlt.solve(resid);
  }

  Eigen::VectorXd z_new = t.head(n);
  Eigen::VectorXd y_new = Eigen::VectorXd::Zero(m);
  for (int r = 0; r < k; ++r) y_new(active[r]) = t(n + r);

  const auto [rp_old, rd_old] = kkt_residuals(qp, sol.z, sol.y_dual);
  const auto [rp_new, rd_new] = kkt_residuals(qp, z_new, y_new);
  if (std::isfinite(rp_new) && std::isfinite(rd_new) &&
      std::max(rp_new, rd_new) <= std::max(rp_old, rd_old)) {
    sol.z = z_new;
    sol.y_dual = y_new;
  }
}

QpSolution solve_qp(const QuadraticProgram& qp, const SolverSettings& settings,
                    const QpSolution* warm) {
  QpSolver solver(settings);
  return solver.solve(qp, warm);
}

std::pair<double, double> kkt_residuals(const QuadraticProgram& qp, const Eigen::VectorXd& z,
                                        const Eigen::VectorXd& y_dual) {
  if (z.size() != qp.vars() || y_dual.size() != qp.rows())
    throw std::invalid_argument("kkt_residuals: dimension mismatch");
  Eigen::VectorXd az = qp.a * z;
  Eigen::VectorXd proj = az.cwiseMax(qp.l).cwiseMin(qp.u);
  const double r_prim = inf_norm(az - proj);
  Eigen::VectorXd grad = qp.p * z + qp.q + qp.a.transpose() * y_dual;
  return {r_prim, inf_norm(grad)};
}

namespace {

void write_value(std::ostream& os, double v) {
  if (v == kInf)
    os << "inf";
  else if (v == -kInf)
    os << "-inf";
  else {
    char buf[32];
    snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf;
  }
}

double read_value(std::istream& is) {
  std::string tok;
  is >> tok;
  if (tok == "inf") return kInf;
  if (tok == "-inf") return -kInf;
  return std::stod(tok);
}

void dump_sparse(std::ostream& os, const char* name, const Eigen::SparseMatrix<double>& m) {
  os << name << ' ' << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  for (int k = 0; k < m.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it) {
      os << it.row() << ' ' << it.col() << ' ';
      write_value(os, it.value());
      os << '\n';
    }
}

Eigen::SparseMatrix<double> load_sparse(std::istream& is, const char* name) {
  std::string tag;
  int rows, cols;
  long nnz;
  is >> tag >> rows >> cols >> nnz;
  if (tag != name) throw std::invalid_argument("load_qp: malformed file");
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(nnz));
  for (long i = 0; i < nnz; ++i) {
    int r, c;
    is >> r >> c;
    trips.emplace_back(r, c, read_value(is));
  }
  Eigen::SparseMatrix<double> m(rows, cols);
  m.setFromTriplets(trips.begin(), trips.end());
  m.makeCompressed();
  return m;
}

}  // namespace

void dump_qp(const QuadraticProgram& qp, std::ostream& os) {
  os << "latmpc-qp 1\n";
  dump_sparse(os, "P", qp.p);
  os << "q " << qp.q.size() << '\n';
  for (int i = 0; i < qp.q.size(); ++i) {
    write_value(os, qp.q(i));
    os << '\n';
  }
  dump_sparse(os, "A", qp.a);
  os << "l " << qp.l.size() << '\n';
  for (int i = 0; i < qp.l.size(); ++i) {
    write_value(os, qp.l(i));
    os << '\n';
  }
  os << "u " << qp.u.size() << '\n';
  for (int i = 0; i < qp.u.size(); ++i) {
    write_value(os, qp.u(i));
    os << '\n';
  }
}

QuadraticProgram load_qp(std::istream& is) {
  std::string magic;
  int version;
  is >> magic >> version;
  if (magic != "latmpc-qp" || version != 1)
    throw std::invalid_argument("load_qp: unrecognized header");
  QuadraticProgram qp;
  qp.p = load_sparse(is, "P");
  std::string tag;
  long count;
  is >> tag >> count;
  if (tag != "q") throw std::invalid_argument("load_qp: malformed file");
  qp.q.resize(count);
  for (long i = 0; i < count; ++i) qp.q(i) = read_value(is);
  qp.a = load_sparse(is, "A");
  is >> tag >> count;
  qp.l.resize(count);
  for (long i = 0; i < count; ++i) qp.l(i) = read_value(is);
  is >> tag >> count;
  qp.u.resize(count);
  for (long i = 0; i < count; ++i) qp.u(i) = read_value(is);
  if (!is) throw std::invalid_argument("load_qp: truncated file");
  return qp;
}

}  // namespace latmpc
