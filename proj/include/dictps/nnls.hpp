// Copyright 2026 The dictps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace dictps {

/// Result of a constrained least-squares solve. `kkt_gap` is the maximum
/// violation of the first-order optimality conditions, recomputed from the
/// returned coefficients; `certified` means it is within the solve tolerance.
struct NnlsSolution {
  Eigen::VectorXd coefficients;
  double residual_norm = 0.0;  // ||y - B c||_2
  double kkt_gap = 0.0;
  bool certified = false;
  int iterations = 0;
};

/// Reusable buffers for the active-set kernel. One per thread; repeated solves
/// of the same column count reuse all allocations.
struct NnlsWorkspace {
  std::vector<double> x, w, chol, rhs, h;
  std::vector<int> passive, kept;
  std::vector<char> in_passive, banned;

  void resize(int m) {
    const auto n = static_cast<std::size_t>(m);
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    rhs.assign(n, 0.0);
    if (h.size() < n) h.resize(n);
    if (chol.size() < n * n) chol.resize(n * n);
    passive.clear();
    kept.clear();
    in_passive.assign(n, 0);
    banned.assign(n, 0);
  }
};

namespace detail {

// In-place Cholesky solve of G[P,P] z = h[P] on workspace buffers; the
// solution lands in ws.rhs[0..p). Returns false when a pivot falls below
// rel-floor times the largest diagonal (rank-deficient passive set).
inline bool cholesky_solve_subset(const double* gram, const double* h, int m,
                                  const std::vector<int>& passive,
                                  NnlsWorkspace& ws) {
  const int p = static_cast<int>(passive.size());
  double* a = ws.chol.data();
  double* b = ws.rhs.data();
  double max_diag = 0.0;
  for (int j = 0; j < p; ++j) {
    const auto cj = static_cast<std::size_t>(passive[static_cast<std::size_t>(j)]);
    for (int i = 0; i < p; ++i) {
      const auto ci = static_cast<std::size_t>(passive[static_cast<std::size_t>(i)]);
      a[static_cast<std::size_t>(j) * p + i] = gram[cj * static_cast<std::size_t>(m) + ci];
    }
    b[j] = h[cj];
    max_diag = std::max(max_diag, a[static_cast<std::size_t>(j) * p + j]);
  }
  const double floor = 1e-13 * max_diag;

  for (int j = 0; j < p; ++j) {
    double d = a[static_cast<std::size_t>(j) * p + j];
    for (int k = 0; k < j; ++k) {
      const double ljk = a[static_cast<std::size_t>(k) * p + j];
      d -= ljk * ljk;
    }
    if (!(d > floor) || !std::isfinite(d)) return false;
    d = std::sqrt(d);
    a[static_cast<std::size_t>(j) * p + j] = d;
    for (int i = j + 1; i < p; ++i) {
      double s = a[static_cast<std::size_t>(j) * p + i];
      for (int k = 0; k < j; ++k) {
        s -= a[static_cast<std::size_t>(k) * p + i] *
             a[static_cast<std::size_t>(k) * p + j];
      }
      a[static_cast<std::size_t>(j) * p + i] = s / d;
    }
  }
  for (int j = 0; j < p; ++j) {
    double s = b[j];
    for (int k = 0; k < j; ++k) s -= a[static_cast<std::size_t>(k) * p + j] * b[k];
    b[j] = s / a[static_cast<std::size_t>(j) * p + j];
  }
  for (int j = p - 1; j >= 0; --j) {
    double s = b[j];
    for (int k = j + 1; k < p; ++k) s -= a[static_cast<std::size_t>(j) * p + k] * b[k];
    b[j] = s / a[static_cast<std::size_t>(j) * p + j];
  }
  return true;
}

struct QpStatus {
  int iterations = 0;
  bool converged = false;
};

// Active-set solve of min_{c >= 0} c^T G c - 2 b^T c with G = B^T B
// (Lawson-Hanson pivoting on the normal-equation form). `tau` is the absolute
// dual-feasibility threshold. The solution lands in ws.x.
inline QpStatus nonneg_qp(const double* gram, const double* b, int m,
                          double tau, int max_iter, NnlsWorkspace& ws) {
  ws.resize(m);
  QpStatus st;
  auto& x = ws.x;
  auto& w = ws.w;

  while (true) {
    // Dual vector w = b - G x.
    for (int j = 0; j < m; ++j) {
      double s = b[j];
      const double* gcol = gram + static_cast<std::size_t>(j) * m;
      for (int i = 0; i < m; ++i) s -= gcol[i] * x[static_cast<std::size_t>(i)];
      w[static_cast<std::size_t>(j)] = s;
    }
    int enter = -1;
    double best = tau;
    for (int j = 0; j < m; ++j) {
      if (ws.in_passive[static_cast<std::size_t>(j)] ||
          ws.banned[static_cast<std::size_t>(j)])
        continue;
      if (w[static_cast<std::size_t>(j)] > best) {
        best = w[static_cast<std::size_t>(j)];
        enter = j;
      }
    }
    if (enter < 0) {
      st.converged = true;
      break;
    }
    if (st.iterations >= max_iter) break;

    ws.passive.push_back(enter);
    ws.in_passive[static_cast<std::size_t>(enter)] = 1;
    bool first_solve = true;

    while (!ws.passive.empty()) {
      if (++st.iterations > max_iter) return st;
      if (!cholesky_solve_subset(gram, b, m, ws.passive, ws)) {
        if (first_solve) {
          // Near-dependent entering column: reject it for this round.
          ws.in_passive[static_cast<std::size_t>(enter)] = 0;
          ws.banned[static_cast<std::size_t>(enter)] = 1;
          ws.passive.pop_back();
        }
        break;
      }
      const double* zp = ws.rhs.data();
      if (first_solve && zp[ws.passive.size() - 1] <= 0.0) {
        ws.in_passive[static_cast<std::size_t>(enter)] = 0;
        ws.banned[static_cast<std::size_t>(enter)] = 1;
        ws.passive.pop_back();
        break;
      }
      first_solve = false;

      bool feasible = true;
      for (std::size_t k = 0; k < ws.passive.size(); ++k) {
        if (zp[k] <= 0.0) {
          feasible = false;
          break;
        }
      }
      if (feasible) {
        for (std::size_t k = 0; k < ws.passive.size(); ++k) {
          x[static_cast<std::size_t>(ws.passive[k])] = zp[k];
        }
        std::fill(ws.banned.begin(), ws.banned.end(), 0);
        break;
      }

      // Step toward z until the first coefficient hits the bound; drop it
      // together with anything else that reached zero.
      double alpha = 1.0;
      int pivot = -1;
      for (std::size_t k = 0; k < ws.passive.size(); ++k) {
        if (zp[k] <= 0.0) {
          const double xk = x[static_cast<std::size_t>(ws.passive[k])];
          const double denom = xk - zp[k];
          if (denom > 0.0 && xk / denom < alpha) {
            alpha = xk / denom;
            pivot = static_cast<int>(k);
          }
        }
      }
      for (std::size_t k = 0; k < ws.passive.size(); ++k) {
        auto idx = static_cast<std::size_t>(ws.passive[k]);
        x[idx] += alpha * (zp[k] - x[idx]);
      }
      ws.kept.clear();
      for (std::size_t k = 0; k < ws.passive.size(); ++k) {
        auto idx = static_cast<std::size_t>(ws.passive[k]);
        if (static_cast<int>(k) == pivot || x[idx] <= 0.0) {
          x[idx] = 0.0;
          ws.in_passive[idx] = 0;
        } else {
          ws.kept.push_back(ws.passive[k]);
        }
      }
      if (ws.kept.size() == ws.passive.size()) {
        // Floating-point corner: nothing hit the bound, force the worst out.
        std::size_t worst = 0;
        for (std::size_t k = 1; k < ws.passive.size(); ++k) {
          if (zp[k] < zp[worst]) worst = k;
        }
        auto idx = static_cast<std::size_t>(ws.passive[worst]);
        x[idx] = 0.0;
        ws.in_passive[idx] = 0;
        ws.kept.erase(ws.kept.begin() + static_cast<std::ptrdiff_t>(worst));
      }
      ws.passive.swap(ws.kept);
    }
  }
  return st;
}

// Max KKT violation of the QP form: g = G x - b must satisfy g >= 0, and
// g = 0 wherever x > 0.
inline double qp_kkt_gap(const double* gram, const double* b, int m,
                         const double* x) {
  double gap = 0.0;
  for (int j = 0; j < m; ++j) {
    double g = -b[j];
    const double* gcol = gram + static_cast<std::size_t>(j) * m;
    for (int i = 0; i < m; ++i) g += gcol[i] * x[i];
    if (x[j] > 0.0) {
      gap = std::max(gap, std::abs(g));
    } else {
      gap = std::max(gap, -g);
    }
  }
  return gap;
}

// Squared data misfit ||y - B c||^2 from Gram quantities; clamped at zero
// against cancellation when the fit is near-exact.
inline double residual_sq_from_gram(const double* gram, const double* h,
                                    double yty, int m, const double* x) {
  double acc = yty;
  for (int j = 0; j < m; ++j) {
    if (x[j] == 0.0) continue;
    double gx = 0.0;
    const double* gcol = gram + static_cast<std::size_t>(j) * m;
    for (int i = 0; i < m; ++i) gx += gcol[i] * x[i];
    acc += x[j] * (gx - 2.0 * h[j]);
  }
  return std::max(0.0, acc);
}

inline void require_finite(const Eigen::MatrixXd& B, const Eigen::VectorXd& y) {
  if (!B.allFinite() || !y.allFinite()) {
    throw std::invalid_argument("solver: non-finite input");
  }
  if (B.rows() != y.size() || B.rows() < 1 || B.cols() < 1) {
    throw std::invalid_argument("solver: dimension mismatch");
  }
}

}  // namespace detail

/// Non-negative least squares: minimizes ||y - B c||_2 over c >= 0.
/// `tol` is relative; the certificate threshold scales with the data.
inline NnlsSolution nnls(const Eigen::MatrixXd& B, const Eigen::VectorXd& y,
                         double tol, NnlsWorkspace& ws) {
  detail::require_finite(B, y);
  const int m = static_cast<int>(B.cols());
  const Eigen::MatrixXd gram = B.transpose() * B;
  const Eigen::VectorXd h = B.transpose() * y;

  const double scale = h.size() ? h.cwiseAbs().maxCoeff() : 0.0;
  const double tau = tol * scale;
  const auto st = detail::nonneg_qp(gram.data(), h.data(), m, tau,
                                    std::max(3 * m, 30), ws);

  NnlsSolution sol;
  sol.coefficients = Eigen::Map<const Eigen::VectorXd>(ws.x.data(), m);
  sol.residual_norm = (y - B * sol.coefficients).norm();
  sol.kkt_gap = detail::qp_kkt_gap(gram.data(), h.data(), m, ws.x.data());
  sol.certified = sol.kkt_gap <= std::max(tau, 1e-300) && st.converged;
  sol.iterations = st.iterations;
  return sol;
}

inline NnlsSolution nnls(const Eigen::MatrixXd& B, const Eigen::VectorXd& y,
                         double tol = 1e-9) {
  NnlsWorkspace ws;
  return nnls(B, y, tol, ws);
}

/// Non-negative L1-regularized least squares:
/// minimizes ||y - B c||_2^2 + lambda * 1^T c over c >= 0. Since c >= 0 the
/// penalty is linear and the problem is the nnls QP with a shifted linear
/// term; lambda = 0 recovers nnls exactly.
inline NnlsSolution nn_lasso(const Eigen::MatrixXd& B, const Eigen::VectorXd& y,
                             double lambda, double tol, NnlsWorkspace& ws) {
  detail::require_finite(B, y);
  if (lambda < 0.0) {
    throw std::invalid_argument("nn_lasso: lambda must be >= 0");
  }
  const int m = static_cast<int>(B.cols());
  const Eigen::MatrixXd gram = B.transpose() * B;
  const Eigen::VectorXd h = B.transpose() * y;
  const Eigen::VectorXd b = h.array() - lambda / 2.0;

  const double scale =
      std::max(h.cwiseAbs().maxCoeff(), lambda / 2.0);
  const double tau = tol * scale;
  const auto st = detail::nonneg_qp(gram.data(), b.data(), m, tau,
                                    std::max(3 * m, 30), ws);

  NnlsSolution sol;
  sol.coefficients = Eigen::Map<const Eigen::VectorXd>(ws.x.data(), m);
  sol.residual_norm = (y - B * sol.coefficients).norm();
  // Certificate on g = 2 B^T (B c - y) + lambda * 1, i.e. twice the QP dual.
  sol.kkt_gap = 2.0 * detail::qp_kkt_gap(gram.data(), b.data(), m, ws.x.data());
  sol.certified = sol.kkt_gap <= 2.0 * std::max(tau, 1e-300) && st.converged;
  sol.iterations = st.iterations;
  return sol;
}

inline NnlsSolution nn_lasso(const Eigen::MatrixXd& B, const Eigen::VectorXd& y,
                             double lambda, double tol = 1e-9) {
  NnlsWorkspace ws;
  return nn_lasso(B, y, lambda, tol, ws);
}

}  // namespace dictps
