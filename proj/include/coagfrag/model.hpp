#pragma once

// Conservative N-dimensional truncation of the coagulation-fragmentation
// system with growth, decay and sedimentation:
//
//   du_i/dt = g_{i-1} u_{i-1} - theta_i u_i + d_{i+1} u_{i+1}
//           + sum_{j=i+1}^{N} a_j b_{i,j} u_j
//           + 1/2 sum_{j<i} k_{i-j,j} u_{i-j} u_j - u_i sum_{j<=N} k_{i,j} u_j
//           + [i == N] (1/N) sum_{j<=N} sum_{n=N+1-j}^{N} j k_{n,j} u_n u_j
//
// with u_0 = u_{N+1} = 0. The row-N quadratic term returns the mass that
// coagulation would push past size N, so pure coagulation-fragmentation
// conserves sum i u_i exactly. Growth out of size N is not returned; it is
// reported as growth_leakage().
//
// Storage is 0-based: u[i - 1] holds u_i.

#include <Eigen/Dense>
#include <cstddef>
#include <stdexcept>
#include <string>

#include "coagfrag/kernels.hpp"
#include "coagfrag/summation.hpp"

namespace coagfrag {

using StateVector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class TruncatedSystem {
 public:
  TruncatedSystem(SizeIndex n, FragmentationKernelSpec frag, CoagulationKernelSpec coag,
                  RateLaws laws)
      : n_(n), frag_(frag), coag_(coag), laws_(laws) {
    if (n < 2) throw ValidationError("model.N", "truncation size must be >= 2");
    if (n > kMaxTruncationSize) {
      throw ValidationError("model.N", "truncation size must be <= " +
                                           std::to_string(kMaxTruncationSize));
    }
    rates_ = RateTable(laws_, n_);
    build_tables();
  }

  SizeIndex size() const { return n_; }
  const FragmentationKernelSpec& fragmentation_kernel() const { return frag_; }
  const CoagulationKernelSpec& coagulation_kernel() const { return coag_; }
  const RateLaws& laws() const { return laws_; }
  const RateTable& rates() const { return rates_; }

  /// b_{i,j} for 1 <= i, j <= N (zero unless i < j).
  double daughter(SizeIndex i, SizeIndex j) const { return daughter_(i - 1, j - 1); }
  /// k_{i,j} for 1 <= i, j <= N.
  double kernel(SizeIndex i, SizeIndex j) const { return kernel_(i - 1, j - 1); }

  const Matrix& daughter_table() const { return daughter_; }
  const Matrix& kernel_table() const { return kernel_; }

  bool has_coagulation() const { return !coag_.vanishes(); }

  StateVector rhs(const StateVector& u) const {
    check_length(u);
    StateVector du(n_);
    rhs_into(u, du);
    return du;
  }

  /// Evaluates the right-hand side into `du` (resized if needed).
  void rhs_into(const StateVector& u, StateVector& du) const {
    check_length(u);
    const Eigen::Index n = static_cast<Eigen::Index>(n_);
    du.resize(n);

    // Linear part: transport band plus fragmentation gain.
    du.noalias() = frag_gain_.triangularView<Eigen::StrictlyUpper>() * u;
    for (Eigen::Index r = 0; r < n; ++r) {
      double v = -theta_[r] * u[r];
      if (r > 0) v += g_[r - 1] * u[r - 1];
      if (r + 1 < n) v += d_[r + 1] * u[r + 1];
      du[r] += v;
    }
    if (!has_coagulation()) return;

    const StateVector ku = kernel_ * u;
    for (Eigen::Index r = 0; r < n; ++r) {
      // Size i = r + 1; partners j and i - j in 0-based form are c and r - 1 - c.
      double gain = 0.0;
      for (Eigen::Index c = 0; c < r; ++c) {
        gain += kernel_(r - 1 - c, c) * u[r - 1 - c] * u[c];
      }
      du[r] += 0.5 * gain - u[r] * ku[r];
    }
    du[n - 1] += penalty(u) / static_cast<double>(n_);
  }

  /// sum_i i du_i/dt, accumulated term by term with compensated summation.
  double mass_flux(const StateVector& u) const {
    check_length(u);
    const Eigen::Index n = static_cast<Eigen::Index>(n_);
    CompensatedSum<double> acc;
    for (Eigen::Index r = 0; r < n; ++r) {
      const double size = static_cast<double>(r + 1);
      acc += -size * theta_[r] * u[r];
      if (r > 0) acc += size * g_[r - 1] * u[r - 1];
      if (r + 1 < n) acc += size * d_[r + 1] * u[r + 1];
      for (Eigen::Index c = r + 1; c < n; ++c) acc += size * frag_gain_(r, c) * u[c];
    }
    if (has_coagulation()) {
      for (Eigen::Index r = 0; r < n; ++r) {
        const double size = static_cast<double>(r + 1);
        for (Eigen::Index c = 0; c < r; ++c) {
          acc += 0.5 * size * kernel_(r - 1 - c, c) * u[r - 1 - c] * u[c];
        }
        for (Eigen::Index c = 0; c < n; ++c) acc += -size * kernel_(r, c) * u[r] * u[c];
      }
      // Row N carries weight N, cancelling the 1/N of the penalty term.
      for (Eigen::Index c = 0; c < n; ++c) {
        const double j = static_cast<double>(c + 1);
        for (Eigen::Index m = n - 1 - c; m < n; ++m) acc += j * kernel_(m, c) * u[m] * u[c];
      }
    }
    return acc.value();
  }

  /// Mass per unit time carried past size N by growth: g_N N u_N.
  double growth_leakage(const StateVector& u) const {
    check_length(u);
    return g_[static_cast<Eigen::Index>(n_) - 1] * static_cast<double>(n_) *
           u[static_cast<Eigen::Index>(n_) - 1];
  }

  /// Dense analytic Jacobian d rhs_i / d u_m.
  Matrix jacobian(const StateVector& u) const {
    check_length(u);
    const Eigen::Index n = static_cast<Eigen::Index>(n_);
    Matrix jac = frag_gain_.triangularView<Eigen::StrictlyUpper>();
    for (Eigen::Index r = 0; r < n; ++r) {
      jac(r, r) -= theta_[r];
      if (r > 0) jac(r, r - 1) += g_[r - 1];
      if (r + 1 < n) jac(r, r + 1) += d_[r + 1];
    }
    if (!has_coagulation()) return jac;

    const StateVector ku = kernel_ * u;
    for (Eigen::Index r = 0; r < n; ++r) {
      // Gain: d/du_m [1/2 sum_j k_{i-j,j} u_{i-j} u_j] = k_{i-m,m} u_{i-m}.
      for (Eigen::Index c = 0; c < r; ++c) jac(r, c) += kernel_(r - 1 - c, c) * u[r - 1 - c];
      // Loss: u_i sum_j k_{i,j} u_j.
      for (Eigen::Index c = 0; c < n; ++c) jac(r, c) -= u[r] * kernel_(r, c);
      jac(r, r) -= ku[r];
    }
    // Penalty: d/du_m sum_{n+j>N} j k_{n,j} u_n u_j = sum_{j >= N+1-m} (m + j) k_{m,j} u_j.
    const double inv_n = 1.0 / static_cast<double>(n_);
    for (Eigen::Index c = 0; c < n; ++c) {
      const double m = static_cast<double>(c + 1);
      double acc = 0.0;
      for (Eigen::Index q = n - 1 - c; q < n; ++q) {
        acc += (m + static_cast<double>(q + 1)) * kernel_(c, q) * u[q];
      }
      jac(n - 1, c) += acc * inv_n;
    }
    return jac;
  }

 private:
  void check_length(const StateVector& u) const {
    if (static_cast<SizeIndex>(u.size()) != n_) {
      throw std::invalid_argument("state length " + std::to_string(u.size()) +
                                  " does not match truncation size " + std::to_string(n_));
    }
  }

  // sum_j j u_j sum_{n=N+1-j}^{N} k_{n,j} u_n, via per-column suffix sums.
  double penalty(const StateVector& u) const {
    const Eigen::Index n = static_cast<Eigen::Index>(n_);
    double total = 0.0;
    for (Eigen::Index c = 0; c < n; ++c) {
      if (u[c] == 0.0) continue;
      double suffix = 0.0;
      for (Eigen::Index m = n - 1 - c; m < n; ++m) suffix += kernel_(m, c) * u[m];
      total += static_cast<double>(c + 1) * u[c] * suffix;
    }
    return total;
  }

  void build_tables() {
    const Eigen::Index n = static_cast<Eigen::Index>(n_);
    daughter_ = Matrix::Zero(n, n);
    kernel_ = Matrix::Zero(n, n);
    frag_gain_ = Matrix::Zero(n, n);
    g_.resize(n);
    d_.resize(n);
    theta_.resize(n);
    for (SizeIndex i = 1; i <= n_; ++i) {
      g_[static_cast<Eigen::Index>(i) - 1] = rates_.g(i);
      d_[static_cast<Eigen::Index>(i) - 1] = rates_.d(i);
      theta_[static_cast<Eigen::Index>(i) - 1] = rates_.theta(i);
    }
    for (SizeIndex j = 2; j <= n_; ++j) {
      const double normalizer = frag_.kind() == FragmentationKind::powerlaw
                                    ? powerlaw_normalizer(frag_.sigma(), j)
                                    : 0.0;
      for (SizeIndex i = 1; i < j; ++i) {
        const double b = frag_.kind() == FragmentationKind::binary
                             ? detail::binary_daughter(j)
                             : detail::powerlaw_daughter(frag_.sigma(), i, j, normalizer);
        const auto r = static_cast<Eigen::Index>(i) - 1;
        const auto c = static_cast<Eigen::Index>(j) - 1;
        daughter_(r, c) = b;
        frag_gain_(r, c) = rates_.a(j) * b;
      }
    }
    for (SizeIndex i = 1; i <= n_; ++i) {
      for (SizeIndex j = i; j <= n_; ++j) {
        const double k = coag_rate(coag_, i, j);
        kernel_(static_cast<Eigen::Index>(i) - 1, static_cast<Eigen::Index>(j) - 1) = k;
        kernel_(static_cast<Eigen::Index>(j) - 1, static_cast<Eigen::Index>(i) - 1) = k;
      }
    }
  }

  SizeIndex n_;
  FragmentationKernelSpec frag_;
  CoagulationKernelSpec coag_;
  RateLaws laws_;
  RateTable rates_;
  Matrix daughter_;
  Matrix kernel_;
  Matrix frag_gain_;  // a_j b_{i,j}
  Eigen::VectorXd g_;
  Eigen::VectorXd d_;
  Eigen::VectorXd theta_;
};

}  // namespace coagfrag
