#include "gbmod/monomial.hpp"

#include <algorithm>

namespace gbmod {

namespace {

void check_same_arity(const Monomial& a, const Monomial& b) {
  if (a.num_variables() != b.num_variables()) {
    throw std::invalid_argument("monomials over different variable counts: " +
                                std::to_string(a.num_variables()) + " vs " +
                                std::to_string(b.num_variables()));
  }
}

}  // namespace

Monomial::Monomial(std::size_t nvars) {
  if (nvars > kMaxVariables) {
    throw std::invalid_argument("at most " + std::to_string(kMaxVariables) +
                                " variables are supported");
  }
  nvars_ = static_cast<std::uint8_t>(nvars);
}

Monomial Monomial::from_exponents(std::span<const unsigned> exponents) {
  Monomial m(exponents.size());
  unsigned total = 0;
  for (std::size_t i = 0; i < exponents.size(); ++i) {
    if (exponents[i] > kMaxExponent) {
      throw ExponentOverflow("exponent " + std::to_string(exponents[i]) + " exceeds 255");
    }
    m.exps_[i] = static_cast<std::uint8_t>(exponents[i]);
    total += exponents[i];
  }
  m.degree_ = static_cast<std::uint16_t>(total);
  return m;
}

Monomial Monomial::variable(std::size_t nvars, std::size_t index, unsigned power) {
  if (index >= nvars) throw std::out_of_range("variable index out of range");
  if (power > kMaxExponent) throw ExponentOverflow("exponent exceeds 255");
  Monomial m(nvars);
  m.exps_[index] = static_cast<std::uint8_t>(power);
  m.degree_ = static_cast<std::uint16_t>(power);
  return m;
}

Monomial Monomial::operator*(const Monomial& other) const {
  check_same_arity(*this, other);
  Monomial r(nvars_);
  unsigned carry = 0;
  for (std::size_t i = 0; i < nvars_; ++i) {
    unsigned e = unsigned{exps_[i]} + other.exps_[i];
    carry |= e;
    r.exps_[i] = static_cast<std::uint8_t>(e);
  }
  if (carry > kMaxExponent) throw ExponentOverflow("monomial product overflows an 8-bit exponent");
  r.degree_ = static_cast<std::uint16_t>(degree_ + other.degree_);
  return r;
}

std::size_t Monomial::hash() const {
  std::uint64_t words[4];
  std::memcpy(words, this, sizeof(words));
  std::uint64_t h = 0x9e3779b97f4a7c15ULL;
  for (std::uint64_t w : words) {
    h ^= w + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h *= 0xff51afd7ed558ccdULL;
  }
  return static_cast<std::size_t>(h ^ (h >> 32));
}

std::uint64_t Monomial::divmask() const {
  if (nvars_ == 0) return 0;
  // Spread 64 bits over the variables; bit k of a variable is set when its
  // exponent exceeds k.
  const unsigned bits = std::max(1u, 64u / nvars_);
  std::uint64_t mask = 0;
  unsigned pos = 0;
  for (std::size_t i = 0; i < nvars_ && pos < 64; ++i) {
    for (unsigned k = 0; k < bits && pos < 64; ++k, ++pos) {
      if (exps_[i] > k) mask |= std::uint64_t{1} << pos;
    }
  }
  return mask;
}

int grevlex_cmp(const Monomial& a, const Monomial& b) {
  check_same_arity(a, b);
  if (a.degree() != b.degree()) return a.degree() > b.degree() ? 1 : -1;
  for (std::size_t i = a.num_variables(); i-- > 0;) {
    if (a[i] != b[i]) return a[i] < b[i] ? 1 : -1;
  }
  return 0;
}

Monomial monomial_lcm(const Monomial& a, const Monomial& b) {
  check_same_arity(a, b);
  Monomial r(a.num_variables());
  unsigned total = 0;
  for (std::size_t i = 0; i < a.num_variables(); ++i) {
    r.exps_[i] = std::max(a.exps_[i], b.exps_[i]);
    total += r.exps_[i];
  }
  r.degree_ = static_cast<std::uint16_t>(total);
  return r;
}

bool monomial_divides(const Monomial& a, const Monomial& b) {
  check_same_arity(a, b);
  if (a.degree() > b.degree()) return false;
  for (std::size_t i = 0; i < a.num_variables(); ++i) {
    if (a[i] > b[i]) return false;
  }
  return true;
}

Monomial monomial_div(const Monomial& a, const Monomial& b) {
  if (!monomial_divides(b, a)) throw std::domain_error("monomial_div: divisor does not divide");
  Monomial r(a.num_variables());
  for (std::size_t i = 0; i < a.num_variables(); ++i) {
    r.exps_[i] = static_cast<std::uint8_t>(a.exps_[i] - b.exps_[i]);
  }
  r.degree_ = static_cast<std::uint16_t>(a.degree_ - b.degree_);
  return r;
}

bool monomials_coprime(const Monomial& a, const Monomial& b) {
  check_same_arity(a, b);
  for (std::size_t i = 0; i < a.num_variables(); ++i) {
    if (a[i] != 0 && b[i] != 0) return false;
  }
  return true;
}

}  // namespace gbmod
