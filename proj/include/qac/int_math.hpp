#ifndef QAC_INT_MATH_HPP
#define QAC_INT_MATH_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace qac {

/** Thrown when 64-bit arithmetic would wrap. All protocol sums are checked. */
class overflow_error : public std::runtime_error {
public:
  explicit overflow_error(const std::string& what) : std::runtime_error(what) {}
};

/** Floor division (toward -infinity). b must be positive. */
inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b) != 0 && ((a < 0) != (b < 0))) --q;
  return q;
}

/** Ceiling division (toward +infinity). b must be positive. */
inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b) != 0 && ((a < 0) == (b < 0))) ++q;
  return q;
}

/** Floor of a modulo b: a - floor_div(a, b) * b, always in [0, b). */
inline std::int64_t floor_mod(std::int64_t a, std::int64_t b) {
  return a - floor_div(a, b) * b;
}

inline std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r))
    throw overflow_error("integer overflow in addition");
  return r;
}

inline std::int64_t checked_sub(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_sub_overflow(a, b, &r))
    throw overflow_error("integer overflow in subtraction");
  return r;
}

inline std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_mul_overflow(a, b, &r))
    throw overflow_error("integer overflow in multiplication");
  return r;
}

}  // namespace qac

#endif  // QAC_INT_MATH_HPP
