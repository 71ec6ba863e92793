#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>

namespace gbmod {

/// Thrown when an exponent or the total degree no longer fits the packed layout.
class ExponentOverflow : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

/// Monomial with packed 8-bit exponents and a cached 16-bit total degree.
///
/// The whole object is 32 bytes so that equality and hashing work on four
/// machine words. Unused exponent slots are always zero.
class Monomial {
 public:
  static constexpr std::size_t kMaxVariables = 29;
  static constexpr unsigned kMaxExponent = 255;

  Monomial() = default;

  /// The unit monomial in `nvars` variables.
  explicit Monomial(std::size_t nvars);

  static Monomial from_exponents(std::span<const unsigned> exponents);
  static Monomial variable(std::size_t nvars, std::size_t index, unsigned power = 1);

  std::size_t num_variables() const { return nvars_; }
  unsigned degree() const { return degree_; }
  unsigned operator[](std::size_t i) const { return exps_[i]; }
  bool is_one() const { return degree_ == 0; }

  /// Product; throws ExponentOverflow when any exponent exceeds 255.
  Monomial operator*(const Monomial& other) const;

  friend bool operator==(const Monomial& a, const Monomial& b) {
    return std::memcmp(&a, &b, sizeof(Monomial)) == 0;
  }

  std::size_t hash() const;

  /// Bit signature with `divmask(a) & ~divmask(b) != 0` implying a does not divide b.
  std::uint64_t divmask() const;

 private:
  std::uint16_t degree_ = 0;
  std::uint8_t nvars_ = 0;
  std::array<std::uint8_t, kMaxVariables> exps_{};

  friend Monomial monomial_lcm(const Monomial&, const Monomial&);
  friend Monomial monomial_div(const Monomial&, const Monomial&);
};

static_assert(sizeof(Monomial) == 32);

struct MonomialHash {
  std::size_t operator()(const Monomial& m) const { return m.hash(); }
};

/// Graded reverse lexicographic comparison: negative, zero or positive.
///
/// Higher total degree is greater; on ties the monomial with the smaller
/// exponent in the last variable where they differ is greater.
int grevlex_cmp(const Monomial& a, const Monomial& b);

inline bool grevlex_less(const Monomial& a, const Monomial& b) { return grevlex_cmp(a, b) < 0; }

struct GrevlexGreater {
  bool operator()(const Monomial& a, const Monomial& b) const { return grevlex_cmp(a, b) > 0; }
};

Monomial monomial_lcm(const Monomial& a, const Monomial& b);

/// True when `a` divides `b`.
bool monomial_divides(const Monomial& a, const Monomial& b);

/// Quotient a / b; throws std::domain_error unless b divides a.
Monomial monomial_div(const Monomial& a, const Monomial& b);

bool monomials_coprime(const Monomial& a, const Monomial& b);

}  // namespace gbmod
