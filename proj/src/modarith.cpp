#include "gbmod/modarith.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace gbmod {

namespace {

std::uint32_t pow_mod(std::uint64_t base, std::uint32_t exp, std::uint32_t mod) {
  std::uint64_t result = 1;
  base %= mod;
  while (exp != 0) {
    if (exp & 1u) result = result * base % mod;
    base = base * base % mod;
    exp >>= 1;
  }
  return static_cast<std::uint32_t>(result);
}

bool miller_rabin_witness(std::uint32_t n, std::uint32_t a, std::uint32_t d, unsigned s) {
  std::uint64_t x = pow_mod(a, d, n);
  if (x == 1 || x == n - 1) return false;
  for (unsigned r = 1; r < s; ++r) {
    x = x * x % n;
    if (x == n - 1) return false;
  }
  return true;
}

std::uint32_t inverse_mod(std::uint32_t a, std::uint32_t p) {
  std::int64_t t = 0, new_t = 1;
  std::int64_t r = p, new_r = a;
  while (new_r != 0) {
    std::int64_t q = r / new_r;
    std::int64_t tmp = t - q * new_t;
    t = new_t;
    new_t = tmp;
    tmp = r - q * new_r;
    r = new_r;
    new_r = tmp;
  }
  if (r != 1) throw std::domain_error("element is not invertible");
  if (t < 0) t += p;
  return static_cast<std::uint32_t>(t);
}

}  // namespace

bool is_prime_u32(std::uint32_t n) {
  if (n < 2) return false;
  for (std::uint32_t small : {2u, 3u, 5u, 7u, 11u, 13u, 61u}) {
    if (n == small) return true;
    if (n % small == 0) return false;
  }
  std::uint32_t d = n - 1;
  unsigned s = 0;
  while ((d & 1u) == 0) {
    d >>= 1;
    ++s;
  }
  for (std::uint32_t a : {2u, 7u, 61u}) {
    if (miller_rabin_witness(n, a, d, s)) return false;
  }
  return true;
}

PrimeField::PrimeField(std::uint32_t p) : p_(p) {
  if (p >= kPrimeHigh || !is_prime_u32(p)) {
    throw std::invalid_argument("PrimeField needs a prime below 2^29, got " + std::to_string(p));
  }
}

PrimeField::Elem PrimeField::inv(Elem a) const {
  if (a == 0) throw std::domain_error("inverse of zero in F_" + std::to_string(p_));
  return inverse_mod(a, p_);
}

PrimeField::Elem PrimeField::from_int(std::int64_t v) const {
  std::int64_t r = v % static_cast<std::int64_t>(p_);
  if (r < 0) r += p_;
  return static_cast<Elem>(r);
}

PrimeField::Elem PrimeField::from_mpz(const mpz_class& v) const {
  return static_cast<Elem>(mpz_fdiv_ui(v.get_mpz_t(), p_));
}

std::optional<PrimeField::Elem> PrimeField::from_mpq(const mpq_class& v) const {
  Elem den = from_mpz(v.get_den());
  if (den == 0) return std::nullopt;
  return mul(from_mpz(v.get_num()), inv(den));
}

RationalField::Elem RationalField::inv(const Elem& a) const {
  if (sgn(a) == 0) throw std::domain_error("inverse of zero rational");
  return 1 / a;
}

std::uint32_t nth_prime_below_2_29(std::size_t index) {
  static std::mutex mutex;
  static std::vector<std::uint32_t> cache;
  std::lock_guard lock(mutex);
  std::uint32_t candidate = cache.empty() ? kPrimeHigh : cache.back();
  while (cache.size() <= index) {
    do {
      if (candidate <= kPrimeLow) throw std::runtime_error("prime stream exhausted below 2^28");
      --candidate;
    } while (!is_prime_u32(candidate));
    cache.push_back(candidate);
  }
  return cache[index];
}

PrimeStream::Draw PrimeStream::draw() {
  std::size_t index = next_.fetch_add(1);
  return {index, prime_at(index)};
}

std::uint32_t PrimeStream::prime_at(std::size_t index) {
  {
    std::lock_guard lock(cache_mutex_);
    if (index < cache_.size()) return cache_[index];
  }
  std::uint32_t p = nth_prime_below_2_29(index);
  std::lock_guard lock(cache_mutex_);
  if (cache_.size() <= index) {
    std::size_t old = cache_.size();
    cache_.resize(index + 1);
    for (std::size_t i = old; i < index; ++i) cache_[i] = nth_prime_below_2_29(i);
    cache_[index] = p;
  }
  return p;
}

mpz_class crt_pair(const mpz_class& r1, const mpz_class& m1, std::uint32_t r2, std::uint32_t p2) {
  if (p2 == 0) throw std::invalid_argument("crt_pair: zero modulus");
  std::uint32_t m1_mod = static_cast<std::uint32_t>(mpz_fdiv_ui(m1.get_mpz_t(), p2));
  if (std::gcd(m1_mod, p2) != 1) throw std::invalid_argument("crt_pair: moduli are not coprime");
  mpz_class r = r1;
  crt_merge_inplace(r, m1, r2 % p2, p2, inverse_mod(m1_mod, p2));
  return r;
}

void crt_merge_inplace(mpz_class& residue, const mpz_class& modulus, std::uint32_t image,
                       std::uint32_t p, std::uint32_t modulus_inv) {
  std::uint32_t current = static_cast<std::uint32_t>(mpz_fdiv_ui(residue.get_mpz_t(), p));
  if (current == image) return;
  std::uint64_t diff = image >= current ? image - current : image + p - current;
  std::uint64_t t = diff * modulus_inv % p;
  mpz_addmul_ui(residue.get_mpz_t(), modulus.get_mpz_t(), static_cast<unsigned long>(t));
}

ReconstructionBounds reconstruction_bounds(const mpz_class& m) {
  ReconstructionBounds b;
  mpz_class half = m / 2;
  mpz_sqrt(b.numerator.get_mpz_t(), half.get_mpz_t());
  if (sgn(b.numerator) == 0) {
    b.denominator = 0;
    return b;
  }
  b.denominator = (m - 1) / (2 * b.numerator);
  return b;
}

std::optional<mpq_class> rational_reconstruct(const mpz_class& r, const mpz_class& m) {
  return rational_reconstruct(r, m, reconstruction_bounds(m));
}

std::optional<mpq_class> rational_reconstruct(const mpz_class& r, const mpz_class& m,
                                              const ReconstructionBounds& bounds) {
  if (sgn(bounds.numerator) == 0) return std::nullopt;
  const mpz_class& bound = bounds.numerator;
  // Remainder sequence r_i with cofactors t_i such that r_i = t_i * r (mod m);
  // stop at the first remainder within the bound.
  mpz_class r0 = m, r1 = r;
  mpz_class t0 = 0, t1 = 1;
  mpz_class q, tmp;
  if (r1 < 0 || r1 >= m) mpz_fdiv_r(r1.get_mpz_t(), r.get_mpz_t(), m.get_mpz_t());
  while (r1 > bound) {
    mpz_fdiv_qr(q.get_mpz_t(), tmp.get_mpz_t(), r0.get_mpz_t(), r1.get_mpz_t());
    r0 = std::move(r1);
    r1 = std::move(tmp);
    tmp = t0 - q * t1;
    t0 = std::move(t1);
    t1 = std::move(tmp);
  }
  if (sgn(t1) == 0 || abs(t1) > bounds.denominator) return std::nullopt;
  mpz_class g;
  mpz_gcd(g.get_mpz_t(), r1.get_mpz_t(), t1.get_mpz_t());
  if (g != 1) return std::nullopt;
  mpz_gcd(g.get_mpz_t(), t1.get_mpz_t(), m.get_mpz_t());
  if (g != 1) return std::nullopt;
  if (sgn(t1) < 0) {
    t1 = -t1;
    r1 = -r1;
  }
  mpq_class result(r1, t1);
  result.canonicalize();
  return result;
}

void ResidueAccumulator::merge(std::uint32_t image, std::uint32_t p) {
  if (std::find(primes_.begin(), primes_.end(), p) != primes_.end()) {
    throw std::invalid_argument("prime " + std::to_string(p) + " already merged");
  }
  value_ = crt_pair(value_, modulus_, image, p);
  modulus_ *= p;
  primes_.push_back(p);
}

}  // namespace gbmod
