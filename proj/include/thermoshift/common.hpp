#pragma once

#include <cstdint>
#include <cstdlib>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace thermoshift {

using Symbol = std::int32_t;

inline constexpr std::uint64_t kDefaultWordCap = std::uint64_t{1} << 24;

// Base error; subtypes map to CLI exit codes (config -> 2, cap -> 3,
// everything else surfacing as a hard failure -> 1).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct CapExceededError : Error {
  using Error::Error;
};

struct DomainError : Error {
  using Error::Error;
};

struct ConvergenceError : Error {
  using Error::Error;
};

struct PreconditionError : Error {
  using Error::Error;
};

struct DivergenceError : Error {
  using Error::Error;
};

// Closed real interval [lo, hi], lo < hi.
struct Interval {
  double lo = 0.0;
  double hi = 1.0;

  double length() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }

  bool contains(double x, double eps = 0.0) const {
    return x >= lo - eps && x <= hi + eps;
  }

  static Interval hull(double a, double b) {
    return a <= b ? Interval{a, b} : Interval{b, a};
  }
};

inline bool intervals_disjoint(const Interval& a, const Interval& b) {
  // Closed-interval test: touching endpoints count as overlapping.
  return a.hi < b.lo || b.hi < a.lo;
}

// Word-enumeration cap. THERMOSHIFT_CAP_WORDS overrides the default.
inline std::uint64_t word_cap_from_env() {
  if (const char* env = std::getenv("THERMOSHIFT_CAP_WORDS")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::uint64_t>(v);
  }
  return kDefaultWordCap;
}

// N^n without overflow; saturates at max() once past `cap_hint`.
inline std::uint64_t pow_count(std::uint64_t base, std::uint32_t exp,
                               std::uint64_t cap_hint = std::numeric_limits<std::uint64_t>::max()) {
  std::uint64_t r = 1;
  for (std::uint32_t k = 0; k < exp; ++k) {
    if (base != 0 && r > cap_hint / base) return std::numeric_limits<std::uint64_t>::max();
    r *= base;
  }
  return r;
}

// log(e^a + e^b) without overflow.
inline double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = a > b ? a : b;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// Streaming log-sum-exp accumulator with a deterministic update order.
class LogSumExp {
 public:
  void add_log(double t) {
    if (t == -std::numeric_limits<double>::infinity()) return;
    if (!any_) {
      max_ = t;
      sum_ = 1.0;
      any_ = true;
      return;
    }
    if (t <= max_) {
      sum_ += std::exp(t - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - t) + 1.0;
      max_ = t;
    }
  }

  void merge(const LogSumExp& o) {
    if (!o.any_) return;
    if (!any_) {
      *this = o;
      return;
    }
    if (o.max_ <= max_) {
      sum_ += o.sum_ * std::exp(o.max_ - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - o.max_) + o.sum_;
      max_ = o.max_;
    }
  }

  double value() const {
    if (!any_) return -std::numeric_limits<double>::infinity();
    return max_ + std::log(sum_);
  }

  bool empty() const { return !any_; }

 private:
  double max_ = 0.0;
  double sum_ = 0.0;
  bool any_ = false;
};

}  // namespace thermoshift
