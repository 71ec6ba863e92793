#pragma once

#include <algorithm>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gbmod/modarith.hpp"
#include "gbmod/monomial.hpp"

namespace gbmod {

/// Variable names in decreasing order of precedence (x0 > x1 > ...). The
/// only monomial order is grevlex.
struct PolyRing {
  std::vector<std::string> variables;

  std::size_t num_variables() const { return variables.size(); }
};

using RingPtr = std::shared_ptr<const PolyRing>;

RingPtr make_ring(std::vector<std::string> variables);

/// Thrown when polynomials from different rings or fields are combined.
class ContextMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Sparse polynomial over `Field`, terms kept in strictly decreasing grevlex
/// order with no zero coefficients. The zero polynomial has no terms.
template <class Field>
class Polynomial {
 public:
  using Elem = typename Field::Elem;

  struct Term {
    Monomial monomial;
    Elem coeff;

    friend bool operator==(const Term&, const Term&) = default;
  };

  Polynomial(RingPtr ring, Field field) : ring_(std::move(ring)), field_(std::move(field)) {}

  /// Builds a canonical polynomial from arbitrary terms: sorts, merges equal
  /// monomials and drops zeros.
  static Polynomial from_terms(RingPtr ring, Field field, std::vector<Term> terms);

  /// Wraps terms that are already canonical; checked only by `is_canonical()`.
  static Polynomial from_sorted_terms(RingPtr ring, Field field, std::vector<Term> terms) {
    Polynomial p(std::move(ring), std::move(field));
    p.terms_ = std::move(terms);
    return p;
  }

  static Polynomial constant(RingPtr ring, Field field, Elem c) {
    Polynomial p(ring, field);
    if (!p.field_.is_zero(c)) p.terms_.push_back({Monomial(ring->num_variables()), std::move(c)});
    return p;
  }

  const RingPtr& ring() const { return ring_; }
  const Field& field() const { return field_; }
  const std::vector<Term>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }

  const Monomial& leading_monomial() const { return lead().monomial; }
  const Elem& leading_coeff() const { return lead().coeff; }

  bool is_canonical() const;

  /// True when both polynomials live over the same variables and field.
  bool compatible(const Polynomial& other) const {
    return (ring_ == other.ring_ || ring_->variables == other.ring_->variables) &&
           field_ == other.field_;
  }

  friend bool operator==(const Polynomial& a, const Polynomial& b) { return a.terms_ == b.terms_; }

 private:
  const Term& lead() const {
    if (terms_.empty()) throw std::domain_error("leading term of the zero polynomial");
    return terms_.front();
  }

  RingPtr ring_;
  Field field_;
  std::vector<Term> terms_;
};

template <class Field>
Polynomial<Field> Polynomial<Field>::from_terms(RingPtr ring, Field field, std::vector<Term> terms) {
  const std::size_t nvars = ring->num_variables();
  for (const Term& t : terms) {
    if (t.monomial.num_variables() != nvars) throw ContextMismatch("term over the wrong variable count");
  }
  std::sort(terms.begin(), terms.end(),
            [](const Term& a, const Term& b) { return grevlex_cmp(a.monomial, b.monomial) > 0; });
  std::vector<Term> merged;
  merged.reserve(terms.size());
  for (Term& t : terms) {
    if (!merged.empty() && merged.back().monomial == t.monomial) {
      merged.back().coeff = field.add(merged.back().coeff, t.coeff);
    } else {
      if (!merged.empty() && field.is_zero(merged.back().coeff)) merged.pop_back();
      merged.push_back(std::move(t));
    }
  }
  if (!merged.empty() && field.is_zero(merged.back().coeff)) merged.pop_back();
  Polynomial p(std::move(ring), std::move(field));
  p.terms_ = std::move(merged);
  return p;
}

template <class Field>
bool Polynomial<Field>::is_canonical() const {
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (field_.is_zero(terms_[i].coeff)) return false;
    if (terms_[i].monomial.num_variables() != ring_->num_variables()) return false;
    if (i > 0 && grevlex_cmp(terms_[i - 1].monomial, terms_[i].monomial) <= 0) return false;
  }
  return true;
}

namespace detail {

template <class Field>
void require_compatible(const Polynomial<Field>& f, const Polynomial<Field>& g) {
  if (!f.compatible(g)) throw ContextMismatch("polynomials from different rings");
}

/// Merge f + scale*g term by term.
template <class Field>
Polynomial<Field> add_scaled(const Polynomial<Field>& f, const Polynomial<Field>& g,
                             const typename Field::Elem& scale) {
  require_compatible(f, g);
  const Field& F = f.field();
  using Term = typename Polynomial<Field>::Term;
  std::vector<Term> out;
  out.reserve(f.size() + g.size());
  auto a = f.terms().begin(), ae = f.terms().end();
  auto b = g.terms().begin(), be = g.terms().end();
  while (a != ae || b != be) {
    int c = a == ae ? -1 : b == be ? 1 : grevlex_cmp(a->monomial, b->monomial);
    if (c > 0) {
      out.push_back(*a++);
    } else if (c < 0) {
      out.push_back({b->monomial, F.mul(scale, b->coeff)});
      ++b;
    } else {
      auto s = F.add(a->coeff, F.mul(scale, b->coeff));
      if (!F.is_zero(s)) out.push_back({a->monomial, std::move(s)});
      ++a;
      ++b;
    }
  }
  return Polynomial<Field>::from_sorted_terms(f.ring(), F, std::move(out));
}

}  // namespace detail

template <class Field>
Polynomial<Field> poly_add(const Polynomial<Field>& f, const Polynomial<Field>& g) {
  return detail::add_scaled(f, g, f.field().one());
}

template <class Field>
Polynomial<Field> poly_sub(const Polynomial<Field>& f, const Polynomial<Field>& g) {
  return detail::add_scaled(f, g, f.field().neg(f.field().one()));
}

/// f * (c * m).
template <class Field>
Polynomial<Field> poly_mul_term(const Polynomial<Field>& f, const Monomial& m,
                                const typename Field::Elem& c) {
  const Field& F = f.field();
  using Term = typename Polynomial<Field>::Term;
  if (F.is_zero(c)) return Polynomial<Field>(f.ring(), F);
  std::vector<Term> out;
  out.reserve(f.size());
  for (const Term& t : f.terms()) out.push_back({t.monomial * m, F.mul(t.coeff, c)});
  return Polynomial<Field>::from_sorted_terms(f.ring(), F, std::move(out));
}

template <class Field>
Polynomial<Field> poly_mul(const Polynomial<Field>& f, const Polynomial<Field>& g) {
  detail::require_compatible(f, g);
  Polynomial<Field> acc(f.ring(), f.field());
  for (const auto& t : g.terms()) acc = poly_add(acc, poly_mul_term(f, t.monomial, t.coeff));
  return acc;
}

template <class Field>
Polynomial<Field> make_monic(const Polynomial<Field>& f) {
  if (f.is_zero() || f.field().is_one(f.leading_coeff())) return f;
  const Monomial one(f.ring()->num_variables());
  return poly_mul_term(f, one, f.field().inv(f.leading_coeff()));
}

/// Full reduction of f by `basis`: the result has no term divisible by a
/// leading monomial of a nonzero basis element and f - result lies in the
/// ideal they generate. Reducers are tried in the order given.
template <class Field>
Polynomial<Field> normal_form(const Polynomial<Field>& f, const std::vector<Polynomial<Field>>& basis) {
  const Field& F = f.field();
  using Term = typename Polynomial<Field>::Term;
  std::vector<const Polynomial<Field>*> reducers;
  for (const auto& g : basis) {
    detail::require_compatible(f, g);
    if (!g.is_zero()) reducers.push_back(&g);
  }
  std::vector<Term> remainder;
  std::vector<Term> cur = f.terms();
  std::vector<Term> next;
  std::size_t pos = 0;
  while (pos < cur.size()) {
    const Term& lead = cur[pos];
    const Polynomial<Field>* divisor = nullptr;
    for (const auto* g : reducers) {
      if (monomial_divides(g->leading_monomial(), lead.monomial)) {
        divisor = g;
        break;
      }
    }
    if (divisor == nullptr) {
      remainder.push_back(lead);
      ++pos;
      continue;
    }
    // cur[pos+1..] - (lead/lt(g)) * tail(g); the leading terms cancel exactly.
    const Monomial q = monomial_div(lead.monomial, divisor->leading_monomial());
    const auto c = F.neg(F.mul(lead.coeff, F.inv(divisor->leading_coeff())));
    next.clear();
    auto a = cur.begin() + static_cast<std::ptrdiff_t>(pos) + 1, ae = cur.end();
    auto b = divisor->terms().begin() + 1, be = divisor->terms().end();
    while (a != ae || b != be) {
      if (b == be) {
        next.push_back(std::move(*a++));
        continue;
      }
      const Monomial mb = b->monomial * q;
      int cmp = a == ae ? -1 : grevlex_cmp(a->monomial, mb);
      if (cmp > 0) {
        next.push_back(std::move(*a++));
      } else if (cmp < 0) {
        next.push_back({mb, F.mul(c, b->coeff)});
        ++b;
      } else {
        auto s = F.add(a->coeff, F.mul(c, b->coeff));
        if (!F.is_zero(s)) next.push_back({mb, std::move(s)});
        ++a;
        ++b;
      }
    }
    std::swap(cur, next);
    pos = 0;
  }
  return Polynomial<Field>::from_sorted_terms(f.ring(), F, std::move(remainder));
}

}  // namespace gbmod
