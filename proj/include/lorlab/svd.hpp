#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "lorlab/matrix.hpp"

namespace lorlab {

/// Thin SVD of an r×c input: u is r×k, s has length k = min(r,c) sorted
/// non-increasing, vt is k×c. u·diag(s)·vt reconstructs the input.
struct SvdResult {
  Matrix u;
  std::vector<double> s;
  Matrix vt;
};

struct SvdOptions {
  int max_sweeps = 30;
  double rel_tol = 1e-12;    // off-diagonal convergence, relative
  bool want_vectors = true;  // singular values only when false
};

struct SvdError : std::runtime_error {
  explicit SvdError(const std::string& what, double residual_norm)
      : std::runtime_error(what), residual(residual_norm) {}
  double residual;
};

/// Numerical-rank cutoff: sigma above sigma_max * max(rows,cols) * machine eps
/// counts toward the rank.
inline double rank_tolerance(std::size_t rows, std::size_t cols, double sigma_max) {
  return sigma_max * static_cast<double>(std::max(rows, cols)) *
         std::numeric_limits<double>::epsilon();
}

namespace detail {

// One-sided Jacobi on the columns of an m×n workspace (m >= n), column-major
// storage. Orthogonalizes column pairs until every |a_p . a_q| is below
// rel_tol relative to the column norms.
struct JacobiWorkspace {
  std::size_t m = 0, n = 0;
  std::vector<double> cols;   // n contiguous columns of length m
  std::vector<double> vcols;  // accumulated right vectors, n columns of length n
  std::vector<double> sq;     // cached squared column norms

  double* col(std::size_t j) { return cols.data() + j * m; }
  double* vcol(std::size_t j) { return vcols.data() + j * n; }
};

inline void jacobi_sweeps(JacobiWorkspace& w, const SvdOptions& opt) {
  const std::size_t m = w.m, n = w.n;
  double off = 0.0;
  for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
    // refresh cached norms once per sweep so rotation drift cannot accumulate
    for (std::size_t j = 0; j < n; ++j) {
      const double* cj = w.col(j);
      double acc = 0.0;
      for (std::size_t i = 0; i < m; ++i) acc += cj[i] * cj[i];
      w.sq[j] = acc;
    }
    off = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double* cp = w.col(p);
        double* cq = w.col(q);
        double dot = 0.0;
        for (std::size_t i = 0; i < m; ++i) dot += cp[i] * cq[i];
        const double denom = std::sqrt(w.sq[p] * w.sq[q]);
        if (denom == 0.0) continue;
        const double rel = std::abs(dot) / denom;
        off = std::max(off, rel);
        if (rel <= opt.rel_tol) continue;

        const double zeta = (w.sq[q] - w.sq[p]) / (2.0 * dot);
        const double t = std::copysign(1.0, zeta) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double cs = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = cs * t;

        for (std::size_t i = 0; i < m; ++i) {
          const double xp = cp[i], xq = cq[i];
          cp[i] = cs * xp - sn * xq;
          cq[i] = sn * xp + cs * xq;
        }
        const double a = w.sq[p], b = w.sq[q];
        w.sq[p] = cs * cs * a - 2.0 * cs * sn * dot + sn * sn * b;
        w.sq[q] = sn * sn * a + 2.0 * cs * sn * dot + cs * cs * b;

        if (!w.vcols.empty()) {
          double* vp = w.vcol(p);
          double* vq = w.vcol(q);
          for (std::size_t i = 0; i < n; ++i) {
            const double xp = vp[i], xq = vq[i];
            vp[i] = cs * xp - sn * xq;
            vq[i] = sn * xp + cs * xq;
          }
        }
      }
    }
    if (off <= opt.rel_tol) return;
  }
  if (off > opt.rel_tol) {
    throw SvdError("svd: one-sided Jacobi did not converge in " +
                       std::to_string(opt.max_sweeps) +
                       " sweeps, residual " + std::to_string(off),
                   off);
  }
}

}  // namespace detail

/// Thin SVD via one-sided Jacobi. Throws std::invalid_argument on empty or
/// non-finite input and SvdError (carrying the residual) on non-convergence.
inline SvdResult svd(const Matrix& input, const SvdOptions& opt = {}) {
  if (input.empty()) throw std::invalid_argument("svd: empty matrix");
  if (!input.is_finite()) throw std::invalid_argument("svd: non-finite entries");

  const bool flipped = input.rows() < input.cols();
  const std::size_t m = flipped ? input.cols() : input.rows();
  const std::size_t n = flipped ? input.rows() : input.cols();

  detail::JacobiWorkspace w;
  w.m = m;
  w.n = n;
  w.cols.assign(m * n, 0.0);
  w.sq.assign(n, 0.0);
  for (std::size_t i = 0; i < input.rows(); ++i) {
    for (std::size_t j = 0; j < input.cols(); ++j) {
      const double v = input(i, j);
      if (flipped) {
        w.col(i)[j] = v;
      } else {
        w.col(j)[i] = v;
      }
    }
  }
  if (opt.want_vectors) {
    w.vcols.assign(n * n, 0.0);
    for (std::size_t j = 0; j < n; ++j) w.vcol(j)[j] = 1.0;
  }

  detail::jacobi_sweeps(w, opt);

  std::vector<double> sigma(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double* cj = w.col(j);
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) acc += cj[i] * cj[i];
    sigma[j] = std::sqrt(acc);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sigma[a] > sigma[b]; });

  SvdResult out;
  out.s.resize(n);
  for (std::size_t j = 0; j < n; ++j) out.s[j] = sigma[order[j]];

  if (!opt.want_vectors) return out;

  // Left vectors: normalized columns; zero-sigma columns get an orthonormal
  // completion from canonical basis vectors so u stays column-orthonormal.
  Matrix big_u(m, n);
  const double cutoff = rank_tolerance(m, n, out.s.empty() ? 0.0 : out.s[0]);
  std::size_t completed = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const double* cj = w.col(order[j]);
    if (out.s[j] > cutoff && out.s[j] > 0.0) {
      const double inv = 1.0 / out.s[j];
      for (std::size_t i = 0; i < m; ++i) big_u(i, j) = cj[i] * inv;
      ++completed;
    } else {
      // Below the rank cutoff the direction is numerical noise: report an
      // exact zero and complete u with a canonical vector orthogonalized
      // against the columns built so far.
      out.s[j] = 0.0;
      for (std::size_t cand = 0; cand < m; ++cand) {
        std::vector<double> v(m, 0.0);
        v[cand] = 1.0;
        for (std::size_t k = 0; k < completed; ++k) {
          double proj = 0.0;
          for (std::size_t i = 0; i < m; ++i) proj += big_u(i, k) * v[i];
          for (std::size_t i = 0; i < m; ++i) v[i] -= proj * big_u(i, k);
        }
        double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
        if (norm > 0.5) {
          for (std::size_t i = 0; i < m; ++i) big_u(i, j) = v[i] / norm;
          break;
        }
      }
      ++completed;
    }
  }

  Matrix big_v(n, n);  // columns are right singular vectors
  for (std::size_t j = 0; j < n; ++j) {
    const double* vj = w.vcol(order[j]);
    for (std::size_t i = 0; i < n; ++i) big_v(i, j) = vj[i];
  }

  if (!flipped) {
    out.u = std::move(big_u);
    out.vt = transpose(big_v);
  } else {
    // input = (workspace matrix)ᵀ = V·S·Uᵀ
    out.u = std::move(big_v);
    out.vt = transpose(big_u);
  }
  return out;
}

/// Singular values only; skips all vector accumulation.
inline std::vector<double> singular_values(const Matrix& m, const SvdOptions& base = {}) {
  SvdOptions opt = base;
  opt.want_vectors = false;
  return svd(m, opt).s;
}

inline std::size_t numerical_rank(const std::vector<double>& s, std::size_t rows,
                                  std::size_t cols) {
  if (s.empty()) return 0;
  const double tol = rank_tolerance(rows, cols, s[0]);
  std::size_t r = 0;
  for (double v : s) {
    if (v > tol) ++r;
  }
  return r;
}

}  // namespace lorlab
