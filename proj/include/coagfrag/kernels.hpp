#pragma once

// Fragmentation daughter distributions, coagulation kernels and power-law
// transport rates for the discrete coagulation-fragmentation model.
//
// Sizes are 1-based throughout: an i-cluster holds i monomers.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "coagfrag/errors.hpp"

namespace coagfrag {

using SizeIndex = std::size_t;

/// Largest supported truncation size. The power-law normaliser sums
/// i^(1+sigma) (j-i)^sigma directly, which stays well inside double range
/// for j up to this bound and any sigma used in practice.
inline constexpr SizeIndex kMaxTruncationSize = 10000;

enum class FragmentationKind { binary, powerlaw };
enum class CoagulationKind { brownian_like, product };

inline const char* to_string(FragmentationKind kind) {
  return kind == FragmentationKind::binary ? "binary" : "powerlaw";
}

inline const char* to_string(CoagulationKind kind) {
  return kind == CoagulationKind::brownian_like ? "brownian_like" : "product";
}

/// Daughter distribution b_{i,j}: mean number of i-clusters produced when a
/// j-cluster breaks up.
///
///   binary:    b_{i,j} = 2 / (j - 1)
///   powerlaw:  b_{i,j} = i^s (j - i)^s / alpha_j,
///              alpha_j = (1/j) sum_{i<j} i^(1+s) (j - i)^s,   s > -1
///
/// Both satisfy sum_{i<j} i b_{i,j} = j.
class FragmentationKernelSpec {
 public:
  FragmentationKernelSpec() = default;

  static FragmentationKernelSpec binary() { return {}; }

  static FragmentationKernelSpec powerlaw(double sigma) {
    if (!std::isfinite(sigma) || sigma <= -1.0) {
      throw ValidationError("kernels.fragmentation.sigma",
                            "power-law exponent must be finite and > -1, got " +
                                std::to_string(sigma));
    }
    FragmentationKernelSpec spec;
    spec.kind_ = FragmentationKind::powerlaw;
    spec.sigma_ = sigma;
    return spec;
  }

  FragmentationKind kind() const { return kind_; }
  double sigma() const { return sigma_; }

  bool operator==(const FragmentationKernelSpec&) const = default;

 private:
  FragmentationKind kind_ = FragmentationKind::binary;
  double sigma_ = 0.0;
};

/// Normaliser alpha_j of the power-law daughter distribution.
inline double powerlaw_normalizer(double sigma, SizeIndex j) {
  const double jd = static_cast<double>(j);
  double acc = 0.0;
  for (SizeIndex i = 1; i < j; ++i) {
    const double id = static_cast<double>(i);
    acc += std::pow(id, 1.0 + sigma) * std::pow(jd - id, sigma);
  }
  return acc / jd;
}

namespace detail {

// Shared by the pointwise and tabulated paths so both give identical bits.
inline double powerlaw_daughter(double sigma, SizeIndex i, SizeIndex j, double normalizer) {
  const double id = static_cast<double>(i);
  const double jd = static_cast<double>(j);
  return std::pow(id, sigma) * std::pow(jd - id, sigma) / normalizer;
}

inline double binary_daughter(SizeIndex j) { return 2.0 / static_cast<double>(j - 1); }

}  // namespace detail

/// b_{i,j}; zero for i >= j.
inline double frag_daughter(const FragmentationKernelSpec& spec, SizeIndex i, SizeIndex j) {
  if (i < 1 || j < 2) {
    throw std::out_of_range("frag_daughter requires i >= 1 and j >= 2");
  }
  if (i >= j) return 0.0;
  if (spec.kind() == FragmentationKind::binary) return detail::binary_daughter(j);
  return detail::powerlaw_daughter(spec.sigma(), i, j, powerlaw_normalizer(spec.sigma(), j));
}

/// Coagulation kernel k_{i,j}.
///
///   brownian_like:  k1 (i^(1/3) + j^(1/3))^(7/3)
///   product:        k2 (i + k3)(j + k3)
class CoagulationKernelSpec {
 public:
  CoagulationKernelSpec() = default;

  static CoagulationKernelSpec brownian_like(double k1) {
    check_coefficient("kernels.coagulation.k1", k1);
    CoagulationKernelSpec spec;
    spec.kind_ = CoagulationKind::brownian_like;
    spec.k1_ = k1;
    return spec;
  }

  static CoagulationKernelSpec product(double k2, double k3) {
    check_coefficient("kernels.coagulation.k2", k2);
    check_coefficient("kernels.coagulation.k3", k3);
    CoagulationKernelSpec spec;
    spec.kind_ = CoagulationKind::product;
    spec.k2_ = k2;
    spec.k3_ = k3;
    return spec;
  }

  CoagulationKind kind() const { return kind_; }
  double k1() const { return k1_; }
  double k2() const { return k2_; }
  double k3() const { return k3_; }

  /// True when every k_{i,j} vanishes (pure linear dynamics).
  bool vanishes() const {
    return kind_ == CoagulationKind::brownian_like ? k1_ == 0.0 : k2_ == 0.0;
  }

  /// Growth degree of k_{i,j} in max(i, j), as used by the coefficient bound
  /// k_{i,j} <= kappa ((1+theta_i)^w + (1+theta_j)^w).
  double degree() const {
    if (vanishes()) return 0.0;
    return kind_ == CoagulationKind::brownian_like ? 7.0 / 9.0 : 2.0;
  }

  bool operator==(const CoagulationKernelSpec&) const = default;

 private:
  static void check_coefficient(const char* field, double value) {
    if (!std::isfinite(value) || value < 0.0) {
      throw ValidationError(field, "must be finite and >= 0, got " + std::to_string(value));
    }
  }

  CoagulationKind kind_ = CoagulationKind::brownian_like;
  double k1_ = 0.0;
  double k2_ = 0.0;
  double k3_ = 0.0;
};

/// k_{i,j}. Bitwise symmetric in (i, j): both forms reduce to a commutative
/// operation on the two size-dependent factors.
inline double coag_rate(const CoagulationKernelSpec& spec, SizeIndex i, SizeIndex j) {
  if (i < 1 || j < 1) throw std::out_of_range("coag_rate requires i, j >= 1");
  const double id = static_cast<double>(i);
  const double jd = static_cast<double>(j);
  if (spec.kind() == CoagulationKind::brownian_like) {
    return spec.k1() * std::pow(std::cbrt(id) + std::cbrt(jd), 7.0 / 3.0);
  }
  return spec.k2() * ((id + spec.k3()) * (jd + spec.k3()));
}

/// Power-law rates g_i = g i^growth_exp, d_i = d i^decay_exp,
/// s_i = s i^sed_exp, a_i = a i^frag_exp, with d_1 = a_1 = 0 and g_0 = 0.
struct RateLaws {
  double g = 0.0;
  double growth_exp = 0.0;
  double d = 0.0;
  double decay_exp = 0.0;
  double s = 0.0;
  double sed_exp = 0.0;
  double a = 0.0;
  double frag_exp = 0.0;

  void validate() const {
    check("model.laws.g", g, true);
    check("model.laws.d", d, true);
    check("model.laws.s", s, true);
    check("model.laws.a", a, true);
    check("model.laws.growth_exp", growth_exp, false);
    check("model.laws.decay_exp", decay_exp, false);
    check("model.laws.sed_exp", sed_exp, false);
    check("model.laws.frag_exp", frag_exp, false);
  }

  double growth(SizeIndex i) const { return i == 0 ? 0.0 : power_rate(g, growth_exp, i); }
  double decay(SizeIndex i) const { return i <= 1 ? 0.0 : power_rate(d, decay_exp, i); }
  double sedimentation(SizeIndex i) const { return i == 0 ? 0.0 : power_rate(s, sed_exp, i); }
  double fragmentation(SizeIndex i) const { return i <= 1 ? 0.0 : power_rate(a, frag_exp, i); }

  /// theta_i = a_i + g_i + d_i + s_i.
  double loss(SizeIndex i) const {
    return fragmentation(i) + growth(i) + decay(i) + sedimentation(i);
  }

  bool operator==(const RateLaws&) const = default;

 private:
  static double power_rate(double coefficient, double exponent, SizeIndex i) {
    if (coefficient == 0.0) return 0.0;
    return coefficient * std::pow(static_cast<double>(i), exponent);
  }

  static void check(const char* field, double value, bool non_negative) {
    if (!std::isfinite(value) || (non_negative && value < 0.0)) {
      throw ValidationError(field, std::string("must be finite") +
                                       (non_negative ? " and >= 0" : "") + ", got " +
                                       std::to_string(value));
    }
  }
};

/// Rates tabulated for sizes 0..N+1 (entry 0 is the g_0 = 0 convention).
/// Size N+1 is included for the boundary leakage diagnostics.
class RateTable {
 public:
  RateTable() = default;

  RateTable(const RateLaws& laws, SizeIndex n) : n_(n) {
    if (n == 0) throw std::invalid_argument("rate_table requires N >= 1");
    laws.validate();
    const SizeIndex len = n + 2;
    growth_.resize(len);
    decay_.resize(len);
    sedimentation_.resize(len);
    fragmentation_.resize(len);
    loss_.resize(len);
    for (SizeIndex i = 0; i < len; ++i) {
      growth_[i] = laws.growth(i);
      decay_[i] = laws.decay(i);
      sedimentation_[i] = laws.sedimentation(i);
      fragmentation_[i] = laws.fragmentation(i);
      loss_[i] = i == 0 ? 0.0 : laws.loss(i);
    }
  }

  SizeIndex size() const { return n_; }

  double g(SizeIndex i) const { return growth_.at(i); }
  double d(SizeIndex i) const { return decay_.at(i); }
  double s(SizeIndex i) const { return sedimentation_.at(i); }
  double a(SizeIndex i) const { return fragmentation_.at(i); }
  double theta(SizeIndex i) const { return loss_.at(i); }

 private:
  SizeIndex n_ = 0;
  std::vector<double> growth_;
  std::vector<double> decay_;
  std::vector<double> sedimentation_;
  std::vector<double> fragmentation_;
  std::vector<double> loss_;
};

inline RateTable rate_table(const RateLaws& laws, SizeIndex n) { return RateTable(laws, n); }

}  // namespace coagfrag
