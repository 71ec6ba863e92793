#pragma once

#include <random>
#include <vector>

#include "gbmod/f4.hpp"
#include "gbmod/system_io.hpp"
#include "oracle/buchberger.hpp"

namespace testing_support {

using namespace gbmod;

inline oracle::Exps exps_of(const Monomial& m) {
  oracle::Exps e(m.num_variables());
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = static_cast<int>(m[i]);
  return e;
}

inline oracle::Poly<mpq_class> to_oracle(const QPoly& f) {
  oracle::Poly<mpq_class> out;
  for (const auto& t : f.terms()) out.emplace(exps_of(t.monomial), t.coeff);
  return out;
}

inline oracle::Poly<oracle::Zp> to_oracle(const ModPoly& f) {
  oracle::Poly<oracle::Zp> out;
  for (const auto& t : f.terms()) out.emplace(exps_of(t.monomial), oracle::Zp::raw(t.coeff));
  return out;
}

template <class P>
auto to_oracle(const std::vector<P>& fs) {
  std::vector<decltype(to_oracle(fs.front()))> out;
  for (const auto& f : fs) out.push_back(to_oracle(f));
  return out;
}

inline std::vector<ModPoly> reduce_system(const std::vector<QPoly>& system, const PrimeField& F) {
  std::vector<ModPoly> out;
  for (const auto& f : system) out.push_back(*reduce_mod(f, F));
  return out;
}

/// Exact rational oracle basis for `system`.
inline std::vector<oracle::Poly<mpq_class>> oracle_basis_q(const std::vector<QPoly>& system) {
  return oracle::groebner(to_oracle(system));
}

inline std::vector<oracle::Poly<oracle::Zp>> oracle_basis_p(const std::vector<QPoly>& system, std::uint32_t p) {
  oracle::Zp::p = p;
  PrimeField F(p);
  return oracle::groebner(to_oracle(reduce_system(system, F)));
}

/// Dense random polynomial in `nvars` variables: every monomial up to `degree`
/// gets a coefficient in [-bound, bound] (some of them zero).
inline QPoly random_dense(std::mt19937_64& rng, const RingPtr& ring, unsigned degree, int bound) {
  const std::size_t n = ring->num_variables();
  std::uniform_int_distribution<int> coeff(-bound, bound);
  std::vector<QPoly::Term> terms;
  std::vector<unsigned> e(n, 0);
  std::function<void(std::size_t, unsigned)> rec = [&](std::size_t var, unsigned left) {
    if (var == n) {
      terms.push_back({Monomial::from_exponents(e), mpq_class(coeff(rng))});
      return;
    }
    for (unsigned k = 0; k <= left; ++k) {
      e[var] = k;
      rec(var + 1, left - k);
    }
    e[var] = 0;
  };
  rec(0, degree);
  return QPoly::from_terms(ring, RationalField{}, std::move(terms));
}

/// Groebner and inter-reduction checks shared by the mod p and rational suites.
template <class Field>
bool is_reduced_groebner(const std::vector<Polynomial<Field>>& B) {
  for (std::size_t i = 0; i < B.size(); ++i) {
    if (B[i].is_zero() || !B[i].field().is_one(B[i].leading_coeff()) || !B[i].is_canonical()) return false;
    std::vector<Polynomial<Field>> others;
    for (std::size_t k = 0; k < B.size(); ++k) {
      if (k != i) others.push_back(B[k]);
    }
    if (!(normal_form(B[i], others) == B[i])) return false;
    for (std::size_t j = i + 1; j < B.size(); ++j) {
      if (!normal_form(spair(B[i], B[j]), B).is_zero()) return false;
    }
  }
  return true;
}

}  // namespace testing_support
