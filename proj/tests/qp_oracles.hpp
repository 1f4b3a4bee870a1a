#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <stdexcept>

// Test-only reference solvers for box-constrained strictly convex QPs
//   minimize 1/2 x' P x + q' x   subject to   l <= x <= u.
// Both are independent of the library's solve path.

namespace qp_oracle {

// Exhaustive enumeration over all 3^n active-set assignments (free, at lower,
// at upper). Feasible for n <= ~8. Returns the unique KKT-consistent point.
inline std::optional<Eigen::VectorXd> exhaustive_box(const Eigen::MatrixXd& p,
                                                     const Eigen::VectorXd& q,
                                                     const Eigen::VectorXd& l,
                                                     const Eigen::VectorXd& u,
                                                     double tol = 1e-9) {
  const int n = static_cast<int>(q.size());
  long combos = 1;
  for (int i = 0; i < n; ++i) combos *= 3;

  for (long code = 0; code < combos; ++code) {
    // decode: 0 free, 1 lower, 2 upper
    Eigen::VectorXd x(n);
    std::vector<int> free_idx;
    long rem = code;
    std::vector<int> kind(n);
    for (int i = 0; i < n; ++i) {
      kind[i] = static_cast<int>(rem % 3);
      rem /= 3;
      if (kind[i] == 0)
        free_idx.push_back(i);
      else
        x(i) = kind[i] == 1 ? l(i) : u(i);
    }
    const int nf = static_cast<int>(free_idx.size());
    if (nf > 0) {
      Eigen::MatrixXd pff(nf, nf);
      Eigen::VectorXd rhs(nf);
      for (int a = 0; a < nf; ++a) {
        rhs(a) = -q(free_idx[a]);
        for (int b = 0; b < nf; ++b) pff(a, b) = p(free_idx[a], free_idx[b]);
        for (int i = 0; i < n; ++i)
          if (kind[i] != 0) rhs(a) -= p(free_idx[a], i) * x(i);
      }
      const Eigen::VectorXd xf = pff.ldlt().solve(rhs);
      for (int a = 0; a < nf; ++a) x(free_idx[a]) = xf(a);
    }

    bool ok = true;
    const Eigen::VectorXd grad = p * x + q;
    for (int i = 0; i < n && ok; ++i) {
      if (kind[i] == 0)
        ok = x(i) >= l(i) - tol && x(i) <= u(i) + tol;
      else if (kind[i] == 1)
        ok = grad(i) >= -tol;
      else
        ok = grad(i) <= tol;
    }
    if (ok) return x;
  }
  return std::nullopt;
}

// Cyclic coordinate descent to a tight tolerance, then an exact solve on the
// recovered free set, verified against the KKT conditions.
inline Eigen::VectorXd coordinate_descent_box(const Eigen::MatrixXd& p,
                                              const Eigen::VectorXd& q,
                                              const Eigen::VectorXd& l,
                                              const Eigen::VectorXd& u) {
  const int n = static_cast<int>(q.size());
  Eigen::VectorXd x = l.cwiseMax(Eigen::VectorXd::Zero(n)).cwiseMin(u);
  for (int sweep = 0; sweep < 200000; ++sweep) {
    double change = 0.0;
    for (int i = 0; i < n; ++i) {
      const double step = (-q(i) - p.row(i).dot(x) + p(i, i) * x(i)) / p(i, i);
      const double next = std::clamp(step, l(i), u(i));
      change = std::max(change, std::abs(next - x(i)));
      x(i) = next;
    }
    if (change < 1e-13) break;
  }

  // exact polish on the active set found by the descent
  std::vector<int> free_idx;
  const double tol = 1e-7;
  for (int i = 0; i < n; ++i)
    if (x(i) > l(i) + tol && x(i) < u(i) - tol) free_idx.push_back(i);
  const int nf = static_cast<int>(free_idx.size());
  if (nf > 0) {
    Eigen::MatrixXd pff(nf, nf);
    Eigen::VectorXd rhs(nf);
    for (int a = 0; a < nf; ++a) {
      rhs(a) = -q(free_idx[a]);
      for (int b = 0; b < nf; ++b) pff(a, b) = p(free_idx[a], free_idx[b]);
      for (int i = 0; i < n; ++i) {
        bool is_free = false;
        for (int f : free_idx)
          if (f == i) is_free = true;
        if (!is_free) rhs(a) -= p(free_idx[a], i) * x(i);
      }
    }
    const Eigen::VectorXd xf = pff.ldlt().solve(rhs);
    for (int a = 0; a < nf; ++a) x(free_idx[a]) = xf(a);
  }

  // KKT audit
  const Eigen::VectorXd grad = p * x + q;
  for (int i = 0; i < n; ++i) {
    if (x(i) <= l(i) + tol) {
      if (grad(i) < -1e-6) throw std::runtime_error("oracle: KKT violated at lower bound");
    } else if (x(i) >= u(i) - tol) {
      if (grad(i) > 1e-6) throw std::runtime_error("oracle: KKT violated at upper bound");
    } else if (std::abs(grad(i)) > 1e-6) {
      throw std::runtime_error("oracle: stationarity violated");
    }
  }
  return x;
}

}  // namespace qp_oracle
