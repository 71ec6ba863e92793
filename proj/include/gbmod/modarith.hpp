#pragma once

#include <gmpxx.h>

#include <atomic>
#include <cstdint>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <vector>

namespace gbmod {

/// Deterministic primality test for 32-bit integers (Miller-Rabin, bases 2, 7, 61).
bool is_prime_u32(std::uint32_t n);

/// Arithmetic in Z/pZ for a prime 2^28 < p < 2^29 (smaller primes are
/// accepted too, which the tests use). Elements are plain integers in [0, p).
class PrimeField {
 public:
  using Elem = std::uint32_t;

  explicit PrimeField(std::uint32_t p);

  std::uint32_t modulus() const { return p_; }

  Elem zero() const { return 0; }
  Elem one() const { return 1; }
  bool is_zero(Elem a) const { return a == 0; }
  bool is_one(Elem a) const { return a == 1; }

  Elem add(Elem a, Elem b) const {
    Elem s = a + b;
    return s >= p_ ? s - p_ : s;
  }
  Elem sub(Elem a, Elem b) const { return a >= b ? a - b : a + p_ - b; }
  Elem neg(Elem a) const { return a == 0 ? 0 : p_ - a; }
  Elem mul(Elem a, Elem b) const {
    return static_cast<Elem>(static_cast<std::uint64_t>(a) * b % p_);
  }
  /// Throws std::domain_error on zero.
  Elem inv(Elem a) const;

  Elem from_int(std::int64_t v) const;
  Elem from_mpz(const mpz_class& v) const;
  /// Image of a rational; nullopt when the denominator vanishes mod p.
  std::optional<Elem> from_mpq(const mpq_class& v) const;

  friend bool operator==(const PrimeField& a, const PrimeField& b) { return a.p_ == b.p_; }

 private:
  std::uint32_t p_;
};

/// The rationals, backed by GMP.
class RationalField {
 public:
  using Elem = mpq_class;

  Elem zero() const { return 0; }
  Elem one() const { return 1; }
  bool is_zero(const Elem& a) const { return sgn(a) == 0; }
  bool is_one(const Elem& a) const { return a == 1; }
  Elem add(const Elem& a, const Elem& b) const { return a + b; }
  Elem sub(const Elem& a, const Elem& b) const { return a - b; }
  Elem neg(const Elem& a) const { return -a; }
  Elem mul(const Elem& a, const Elem& b) const { return a * b; }
  Elem inv(const Elem& a) const;
  Elem from_int(std::int64_t v) const { return mpq_class(mpz_class(static_cast<long>(v))); }

  friend bool operator==(const RationalField&, const RationalField&) { return true; }
};

/// Smallest and largest admissible working primes.
inline constexpr std::uint32_t kPrimeLow = 1u << 28;
inline constexpr std::uint32_t kPrimeHigh = 1u << 29;

/// Deterministic descending stream of primes below 2^29.
///
/// Index 0 is the largest prime below 2^29; index k+1 is the next prime
/// below index k. `draw()` hands out indices atomically so that concurrent
/// workers never share a prime; `prime_at()` caches the index-to-prime map.
class PrimeStream {
 public:
  explicit PrimeStream(std::size_t first_index = 0) : next_(first_index) {}

  PrimeStream(const PrimeStream&) = delete;
  PrimeStream& operator=(const PrimeStream&) = delete;

  struct Draw {
    std::size_t index;
    std::uint32_t prime;
  };

  Draw draw();
  std::uint32_t prime_at(std::size_t index);
  std::size_t drawn() const { return next_.load(); }

 private:
  std::atomic<std::size_t> next_;
  std::mutex cache_mutex_;
  std::vector<std::uint32_t> cache_;
};

/// Stateless access to the shared index-to-prime map.
std::uint32_t nth_prime_below_2_29(std::size_t index);

/// Combine r1 mod m1 with r2 mod p2 (coprime moduli) into the unique residue
/// modulo m1*p2. Throws std::invalid_argument for non-coprime moduli.
mpz_class crt_pair(const mpz_class& r1, const mpz_class& m1, std::uint32_t r2, std::uint32_t p2);

/// In-place incremental form used by the accumulators: `residue` is modulo
/// `modulus`, `modulus_inv` is modulus^{-1} mod p. Does not update `modulus`.
void crt_merge_inplace(mpz_class& residue, const mpz_class& modulus, std::uint32_t image,
                       std::uint32_t p, std::uint32_t modulus_inv);

/// Acceptance bounds for rational reconstruction modulo m:
/// numerator = floor(sqrt(m/2)), denominator = floor((m-1) / (2*numerator)),
/// so that 2 * numerator * denominator < m and the answer is unique.
struct ReconstructionBounds {
  mpz_class numerator;
  mpz_class denominator;
};

ReconstructionBounds reconstruction_bounds(const mpz_class& m);

/// Half-extended-Euclid reconstruction of a/b from r mod m.
///
/// On success b > 0, gcd(a, b) = 1, gcd(b, m) = 1, a = b*r (mod m),
/// |a| <= bounds.numerator and b <= bounds.denominator. Any fraction with
/// max(|a|, b) < floor(sqrt(m/2)) is always recovered.
std::optional<mpq_class> rational_reconstruct(const mpz_class& r, const mpz_class& m);

std::optional<mpq_class> rational_reconstruct(const mpz_class& r, const mpz_class& m,
                                              const ReconstructionBounds& bounds);

/// A running CRT value: 0 <= value < modulus, modulus is the product of `primes`.
class ResidueAccumulator {
 public:
  const mpz_class& value() const { return value_; }
  const mpz_class& modulus() const { return modulus_; }
  const std::vector<std::uint32_t>& primes() const { return primes_; }

  /// Throws std::invalid_argument when p was already merged.
  void merge(std::uint32_t image, std::uint32_t p);

 private:
  mpz_class value_ = 0;
  mpz_class modulus_ = 1;
  std::vector<std::uint32_t> primes_;
};

}  // namespace gbmod
