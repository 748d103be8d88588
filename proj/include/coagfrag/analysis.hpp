#pragma once

// Moment defects, weighted norms and checks of the well-posedness
// hypotheses on the model coefficients.
//
// The hypotheses are asymptotic (liminf over i -> infinity). Each check is
// reported twice: a closed-form limit derived from the power-law exponents,
// and a finite sample over sizes up to i_max. Verdicts use the exponent
// inequalities; the sampled values are evidence.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "coagfrag/kernels.hpp"

namespace coagfrag {

/// Weighted l1 norm ||u||_{p,w} = sum_i i^p (1 + theta_i)^w |u_i|.
struct NormSpec {
  double p = 1.0;
  double weight_exp = 0.0;

  void validate() const {
    if (!std::isfinite(p) || p < 0.0) throw ValidationError("norm.p", "must be >= 0");
    if (!std::isfinite(weight_exp) || weight_exp < 0.0 || weight_exp >= 1.0) {
      throw ValidationError("norm.weight_exp", "must lie in [0, 1)");
    }
  }

  bool operator==(const NormSpec&) const = default;
};

/// Delta_i^(p) = i^p - sum_{j<i} j^p b_{j,i}.
inline double delta_p(const FragmentationKernelSpec& frag, SizeIndex i, double p) {
  if (i < 2) throw std::out_of_range("delta_p requires i >= 2");
  const double normalizer = frag.kind() == FragmentationKind::powerlaw
                                ? powerlaw_normalizer(frag.sigma(), i)
                                : 0.0;
  double moment = 0.0;
  for (SizeIndex j = 1; j < i; ++j) {
    const double b = frag.kind() == FragmentationKind::binary
                         ? detail::binary_daughter(i)
                         : detail::powerlaw_daughter(frag.sigma(), j, i, normalizer);
    moment += std::pow(static_cast<double>(j), p) * b;
  }
  return std::pow(static_cast<double>(i), p) - moment;
}

/// phi_i(p) = Delta_i^(p) / i^p, which lies in (0, 1) for p > 1.
inline double phi(const FragmentationKernelSpec& frag, SizeIndex i, double p) {
  if (!(p > 1.0)) throw std::domain_error("phi requires p > 1");
  return delta_p(frag, i, p) / std::pow(static_cast<double>(i), p);
}

/// lim_{i->inf} phi_i(p). For the power-law kernel the daughter sum tends to
/// a ratio of Beta integrals; sigma = 0 reproduces the binary value (p-1)/(p+1).
inline double phi_limit(const FragmentationKernelSpec& frag, double p) {
  if (frag.kind() == FragmentationKind::binary) return (p - 1.0) / (p + 1.0);
  const double s = frag.sigma();
  return 1.0 - std::beta(p + s + 1.0, s + 1.0) / std::beta(s + 2.0, s + 1.0);
}

inline double weighted_norm(const Eigen::VectorXd& u, const NormSpec& spec, const RateLaws& laws) {
  double total = 0.0;
  for (Eigen::Index r = 0; r < u.size(); ++r) {
    const auto i = static_cast<SizeIndex>(r + 1);
    const double weight = spec.weight_exp == 0.0
                              ? 1.0
                              : std::pow(1.0 + laws.loss(i), spec.weight_exp);
    total += std::pow(static_cast<double>(i), spec.p) * weight * std::abs(u[r]);
  }
  return total;
}

/// Moment ||u||_p = sum_i i^p |u_i|.
inline double moment(const Eigen::VectorXd& u, double p, const RateLaws& laws) {
  return weighted_norm(u, NormSpec{p, 0.0}, laws);
}

namespace detail {

// A signed power term c x^e.
struct PowerTerm {
  double coefficient;
  double exponent;
};

// Limit as x -> inf of sum c_k x^{e_k}; +-inf when the leading net term grows.
inline double power_sum_limit(const std::vector<PowerTerm>& terms) {
  std::map<double, double> by_exponent;
  for (const auto& t : terms) {
    if (t.coefficient != 0.0) by_exponent[t.exponent] += t.coefficient;
  }
  for (auto it = by_exponent.rbegin(); it != by_exponent.rend(); ++it) {
    if (it->second == 0.0) continue;
    if (it->first > 0.0) {
      return it->second > 0.0 ? std::numeric_limits<double>::infinity()
                              : -std::numeric_limits<double>::infinity();
    }
    if (it->first == 0.0) return it->second;
    return 0.0;
  }
  return 0.0;
}

// Largest exponent among terms with non-zero coefficient (nullopt if none).
inline std::optional<double> leading_exponent(const std::vector<PowerTerm>& terms) {
  std::optional<double> best;
  for (const auto& t : terms) {
    if (t.coefficient != 0.0 && (!best || t.exponent > *best)) best = t.exponent;
  }
  return best;
}

// Sum of coefficients sharing the leading exponent.
inline double leading_coefficient(const std::vector<PowerTerm>& terms, double exponent) {
  double c = 0.0;
  for (const auto& t : terms) {
    if (t.coefficient != 0.0 && t.exponent == exponent) c += t.coefficient;
  }
  return c;
}

inline std::vector<PowerTerm> loss_terms(const RateLaws& laws) {
  return {{laws.a, laws.frag_exp}, {laws.g, laws.growth_exp}, {laws.d, laws.decay_exp},
          {laws.s, laws.sed_exp}};
}

// Sizes 1..min(i_max, 256) then geometric spacing up to i_max.
inline std::vector<SizeIndex> sample_sizes(SizeIndex i_max) {
  std::vector<SizeIndex> sizes;
  for (SizeIndex i = 1; i <= std::min<SizeIndex>(i_max, 256); ++i) sizes.push_back(i);
  double x = 256.0;
  while (true) {
    x *= 1.05;
    const auto i = static_cast<SizeIndex>(std::llround(x));
    if (i >= i_max) break;
    if (i > sizes.back()) sizes.push_back(i);
  }
  if (sizes.back() != i_max) sizes.push_back(i_max);
  return sizes;
}

}  // namespace detail

/// Evidence for one liminf hypothesis.
struct DominanceCheck {
  bool pass = false;
  bool exponent_condition = false;  // exponent inequality on the rate laws
  double sampled_min = 0.0;         // min of the quantity over the upper half of the sample
  double asymptotic_limit = 0.0;    // closed-form limit as i -> infinity
  SizeIndex sampled_up_to = 0;
};

struct CoagulationBound {
  bool feasible = false;
  double kernel_degree = 0.0;
  double loss_degree = 0.0;
  double min_weight_exp = 0.0;  // smallest admissible exponent in the coefficient bound
  double kappa = 0.0;           // sampled witness constant at min_weight_exp
};

struct ConditionReport {
  double p = 1.0;
  SizeIndex i_max = 0;
  DominanceCheck frag_dominance;  // applies to p > 1
  DominanceCheck sed_dominance;   // applies to p = 1
  bool well_posed_for_p = false;
  CoagulationBound coag_bound;
  bool omega1_bounded = false;
  double omega1 = 0.0;            // sup_i (g_i - d_i)/i - s_i; +inf when unbounded
  double omega1_sampled = 0.0;    // same sup restricted to 1 <= i <= i_max
  std::vector<std::string> messages;
};

/// The Gronwall exponent map i -> (g_i - d_i)/i - s_i.
inline double mass_growth_rate(const RateLaws& laws, SizeIndex i) {
  return (laws.growth(i) - laws.decay(i)) / static_cast<double>(i) - laws.sedimentation(i);
}

/// sup over 1 <= i <= i_max of mass_growth_rate.
inline double omega1_up_to(const RateLaws& laws, SizeIndex i_max) {
  double best = -std::numeric_limits<double>::infinity();
  for (SizeIndex i = 1; i <= i_max; ++i) best = std::max(best, mass_growth_rate(laws, i));
  return best;
}

inline ConditionReport check_conditions(const FragmentationKernelSpec& frag,
                                        const CoagulationKernelSpec& coag,
                                        const RateLaws& laws, double p, SizeIndex i_max) {
  if (!(p >= 1.0)) throw std::domain_error("check_conditions requires p >= 1");
  if (i_max < 100) throw std::domain_error("check_conditions requires i_max >= 100");
  laws.validate();

  ConditionReport report;
  report.p = p;
  report.i_max = i_max;
  const auto fmt = [](double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
  };

  const auto loss = detail::loss_terms(laws);
  const auto loss_lead = detail::leading_exponent(loss);
  const SizeIndex tail_start = std::max<SizeIndex>(2, i_max / 2);

  // Fragmentation dominance: max{growth, decay, sed exponents} <= frag_exp, p > 1.
  {
    auto& fd = report.frag_dominance;
    double transport_max = -std::numeric_limits<double>::infinity();
    if (laws.g != 0.0) transport_max = std::max(transport_max, laws.growth_exp);
    if (laws.d != 0.0) transport_max = std::max(transport_max, laws.decay_exp);
    if (laws.s != 0.0) transport_max = std::max(transport_max, laws.sed_exp);
    fd.exponent_condition = laws.a > 0.0 && transport_max <= laws.frag_exp;
    fd.sampled_up_to = i_max;
    if (p > 1.0) {
      double ratio_limit = 0.0;
      if (laws.a > 0.0 && loss_lead && *loss_lead == laws.frag_exp) {
        ratio_limit = laws.a / detail::leading_coefficient(loss, *loss_lead);
      }
      fd.asymptotic_limit = ratio_limit * phi_limit(frag, p);
      double sampled = std::numeric_limits<double>::infinity();
      for (SizeIndex i : detail::sample_sizes(i_max)) {
        if (i < tail_start) continue;
        const double theta = laws.loss(i);
        const double value = theta > 0.0 ? laws.fragmentation(i) / theta * phi(frag, i, p) : 0.0;
        sampled = std::min(sampled, value);
      }
      fd.sampled_min = sampled;
      fd.pass = fd.exponent_condition && fd.asymptotic_limit > 0.0;
    } else {
      report.messages.push_back("fragmentation dominance needs p > 1; phi_i(1) = 0");
    }
    if (!fd.exponent_condition) {
      report.messages.push_back(
          laws.a > 0.0 ? "a transport exponent exceeds frag_exp (" + fmt(transport_max) + " > " +
                             fmt(laws.frag_exp) + ")"
                       : "fragmentation rate coefficient a is zero");
    }
  }

  // Sedimentation dominance: max{decay_exp, frag_exp} <= sed_exp, p = 1.
  {
    auto& sd = report.sed_dominance;
    double competing = -std::numeric_limits<double>::infinity();
    if (laws.d != 0.0) competing = std::max(competing, laws.decay_exp);
    if (laws.a != 0.0) competing = std::max(competing, laws.frag_exp);
    sd.exponent_condition = laws.s > 0.0 && competing <= laws.sed_exp;
    sd.sampled_up_to = i_max;
    // (s_i + (d_i - g_i)/i) / theta_i: numerator terms, then leading-order ratio.
    const std::vector<detail::PowerTerm> numerator{{laws.s, laws.sed_exp},
                                                   {laws.d, laws.decay_exp - 1.0},
                                                   {-laws.g, laws.growth_exp - 1.0}};
    const auto num_lead = detail::leading_exponent(numerator);
    if (num_lead && loss_lead) {
      const double num_c = detail::leading_coefficient(numerator, *num_lead);
      const double den_c = detail::leading_coefficient(loss, *loss_lead);
      if (*num_lead > *loss_lead) {
        sd.asymptotic_limit = num_c > 0 ? std::numeric_limits<double>::infinity()
                                        : -std::numeric_limits<double>::infinity();
      } else if (*num_lead == *loss_lead) {
        sd.asymptotic_limit = num_c / den_c;
      } else {
        sd.asymptotic_limit = 0.0;
      }
    }
    double sampled = std::numeric_limits<double>::infinity();
    for (SizeIndex i : detail::sample_sizes(i_max)) {
      if (i < tail_start) continue;
      const double theta = laws.loss(i);
      const double value =
          theta > 0.0 ? (laws.sedimentation(i) + (laws.decay(i) - laws.growth(i)) /
                                                     static_cast<double>(i)) /
                            theta
                      : 0.0;
      sampled = std::min(sampled, value);
    }
    sd.sampled_min = sampled;
    sd.pass = sd.exponent_condition && sd.asymptotic_limit > 0.0;
    if (!sd.exponent_condition) {
      report.messages.push_back(laws.s > 0.0
                                    ? "decay_exp or frag_exp exceeds sed_exp"
                                    : "sedimentation rate coefficient s is zero");
    }
  }

  report.well_posed_for_p = p > 1.0 ? report.frag_dominance.pass : report.sed_dominance.pass;

  // Coefficient bound k_{i,j} <= kappa ((1+theta_i)^w + (1+theta_j)^w):
  // needs w * deg(theta) >= deg(k) with w < 1.
  {
    auto& cb = report.coag_bound;
    cb.kernel_degree = coag.degree();
    cb.loss_degree = loss_lead ? std::max(0.0, *loss_lead) : 0.0;
    if (cb.kernel_degree == 0.0) {
      cb.feasible = true;
      cb.min_weight_exp = 0.0;
      report.messages.push_back("coagulation kernel is bounded; any weight_exp in (0, 1) works");
    } else if (cb.loss_degree > cb.kernel_degree) {
      cb.feasible = true;
      cb.min_weight_exp = cb.kernel_degree / cb.loss_degree;
    } else {
      cb.feasible = false;
      cb.min_weight_exp = 1.0;
      report.messages.push_back("coagulation kernel grows at least as fast as theta (degree " +
                                fmt(cb.kernel_degree) + " vs " + fmt(cb.loss_degree) +
                                "); no weight_exp < 1 bounds it");
    }
    if (cb.feasible) {
      const double w = cb.min_weight_exp;
      const auto sizes = detail::sample_sizes(std::min<SizeIndex>(i_max, 2000));
      std::vector<double> weights;
      weights.reserve(sizes.size());
      for (SizeIndex i : sizes) weights.push_back(std::pow(1.0 + laws.loss(i), w));
      double kappa = 0.0;
      for (std::size_t x = 0; x < sizes.size(); ++x) {
        for (std::size_t y = x; y < sizes.size(); ++y) {
          kappa = std::max(kappa, coag_rate(coag, sizes[x], sizes[y]) / (weights[x] + weights[y]));
        }
      }
      cb.kappa = kappa;
    }
  }

  // omega_1 = sup_i (g_i - d_i)/i - s_i. For i >= 2 the map is a sum of power
  // terms; its limit decides boundedness, and a geometric sweep beyond i_max
  // covers interior maxima of the (at most three-term) power sum.
  {
    report.omega1_sampled = omega1_up_to(laws, i_max);
    const std::vector<detail::PowerTerm> tail{{laws.g, laws.growth_exp - 1.0},
                                              {-laws.d, laws.decay_exp - 1.0},
                                              {-laws.s, laws.sed_exp}};
    const double limit = detail::power_sum_limit(tail);
    if (limit == std::numeric_limits<double>::infinity()) {
      report.omega1_bounded = false;
      report.omega1 = std::numeric_limits<double>::infinity();
      report.messages.push_back("omega1 is unbounded: growth outpaces decay and sedimentation");
    } else {
      double best = report.omega1_sampled;
      for (double x = static_cast<double>(i_max); x < 1e15; x *= 1.01) {
        const double v = laws.g * std::pow(x, laws.growth_exp - 1.0) -
                         laws.d * std::pow(x, laws.decay_exp - 1.0) -
                         laws.s * std::pow(x, laws.sed_exp);
        best = std::max(best, v);
      }
      report.omega1_bounded = true;
      report.omega1 = std::max(best, limit);
    }
  }
  return report;
}

}  // namespace coagfrag
