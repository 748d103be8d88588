#pragma once

#include <cmath>

namespace coagfrag {

/// Compensated accumulator (Neumaier's variant of Kahan summation).
///
/// Unlike plain Kahan summation this also compensates when the incoming term
/// is larger in magnitude than the running sum, which is the common case when
/// large gain and loss contributions cancel.
template <typename Value = double>
class CompensatedSum {
 public:
  constexpr CompensatedSum() = default;

  constexpr void add(Value term) {
    const Value t = sum_ + term;
    if (std::abs(sum_) >= std::abs(term)) {
      compensation_ += (sum_ - t) + term;
    } else {
      compensation_ += (term - t) + sum_;
    }
    sum_ = t;
  }

  constexpr CompensatedSum& operator+=(Value term) {
    add(term);
    return *this;
  }

  constexpr Value value() const { return sum_ + compensation_; }

 private:
  Value sum_{0};
  Value compensation_{0};
};

}  // namespace coagfrag
