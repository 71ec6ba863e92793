#include "gbmod/system_io.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>

namespace gbmod {

RingPtr make_ring(std::vector<std::string> variables) {
  if (variables.size() > Monomial::kMaxVariables) {
    throw std::invalid_argument("at most " + std::to_string(Monomial::kMaxVariables) + " variables");
  }
  std::set<std::string> seen;
  for (const auto& v : variables) {
    if (v.empty() || !seen.insert(v).second) throw std::invalid_argument("bad or repeated variable '" + v + "'");
  }
  return std::make_shared<const PolyRing>(PolyRing{std::move(variables)});
}

std::vector<std::string> indexed_variables(std::size_t n, std::size_t first) {
  std::vector<std::string> vars;
  for (std::size_t i = 0; i < n; ++i) vars.push_back("x" + std::to_string(first + i));
  return vars;
}

std::vector<QPoly> generate_cyclic(std::size_t n, const RingPtr& ring) {
  if (n < 2) throw std::invalid_argument("cyclic-n needs n >= 2");
  if (ring->num_variables() != n) throw std::invalid_argument("cyclic-n needs a ring with n variables");
  const RationalField Q;
  std::vector<QPoly> system;
  for (std::size_t k = 1; k < n; ++k) {
    std::vector<QPoly::Term> terms;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<unsigned> e(n, 0);
      for (std::size_t j = 0; j < k; ++j) e[(i + j) % n] += 1;
      terms.push_back({Monomial::from_exponents(e), Q.one()});
    }
    system.push_back(QPoly::from_terms(ring, Q, std::move(terms)));
  }
  std::vector<unsigned> all(n, 1);
  system.push_back(QPoly::from_terms(ring, Q,
                                     {{Monomial::from_exponents(all), Q.one()},
                                      {Monomial(n), Q.from_int(-1)}}));
  return system;
}

namespace {

enum class Tok { Ident, Int, Plus, Minus, Star, Caret, LParen, RParen, Comma, LBracket, RBracket, Assign, Semi, End };

struct Token {
  Tok kind;
  std::string text;
  std::size_t pos;
};

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
      out.push_back({Tok::Ident, std::string(s.substr(start, i - start)), start});
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
      if (i < s.size() && (s[i] == '.' || s[i] == 'e' || s[i] == 'E')) {
        throw ParseError("non-integer coefficient at offset " + std::to_string(start));
      }
      out.push_back({Tok::Int, std::string(s.substr(start, i - start)), start});
      continue;
    }
    Tok kind;
    switch (c) {
      case '+': kind = Tok::Plus; break;
      case '-': kind = Tok::Minus; break;
      case '*':
        if (i + 1 < s.size() && s[i + 1] == '*') {
          throw ParseError("'**' at offset " + std::to_string(i) + " is not supported, use '^'");
        }
        kind = Tok::Star;
        break;
      case '^': kind = Tok::Caret; break;
      case '(': kind = Tok::LParen; break;
      case ')': kind = Tok::RParen; break;
      case ',': kind = Tok::Comma; break;
      case '[': kind = Tok::LBracket; break;
      case ']': kind = Tok::RBracket; break;
      case ';': kind = Tok::Semi; break;
      case ':':
        if (i + 1 < s.size() && s[i + 1] == '=') {
          out.push_back({Tok::Assign, ":=", i});
          i += 2;
          continue;
        }
        kind = Tok::Semi;  // the ':' of a trailing ':;'
        break;
      case '/':
      case '.':
        throw ParseError("non-integer coefficient at offset " + std::to_string(i));
      default:
        throw ParseError(std::string("unexpected character '") + c + "' at offset " + std::to_string(i));
    }
    out.push_back({kind, std::string(1, c), i});
    ++i;
  }
  out.push_back({Tok::End, "", s.size()});
  return out;
}

class Parser {
 public:
  Parser(std::vector<Token> toks, RingPtr ring) : toks_(std::move(toks)), ring_(std::move(ring)) {
    for (std::size_t i = 0; i < ring_->num_variables(); ++i) var_index_[ring_->variables[i]] = i;
  }

  std::vector<QPoly> system() {
    if (peek().kind == Tok::Ident && toks_.size() > pos_ + 1 && toks_[pos_ + 1].kind == Tok::Assign) pos_ += 2;
    const bool bracketed = accept(Tok::LBracket);
    std::vector<QPoly> out;
    if (!(bracketed && peek().kind == Tok::RBracket) && peek().kind != Tok::End) {
      out.push_back(poly());
      while (accept(Tok::Comma)) out.push_back(poly());
    }
    if (bracketed) expect(Tok::RBracket, "']'");
    while (accept(Tok::Semi)) {
    }
    if (peek().kind != Tok::End) fail("unexpected '" + peek().text + "'");
    return out;
  }

  QPoly single() {
    QPoly f = poly();
    if (peek().kind != Tok::End) fail("unexpected '" + peek().text + "'");
    return f;
  }

 private:
  QPoly poly() {
    QPoly acc(ring_, Q_);
    bool negate = false;
    if (accept(Tok::Minus)) {
      negate = true;
    } else {
      accept(Tok::Plus);
    }
    for (;;) {
      QPoly t = term();
      acc = negate ? poly_sub(acc, t) : poly_add(acc, t);
      if (accept(Tok::Plus)) {
        negate = false;
      } else if (accept(Tok::Minus)) {
        negate = true;
      } else {
        return acc;
      }
    }
  }

  QPoly term() {
    QPoly acc = factor();
    while (accept(Tok::Star)) acc = poly_mul(acc, factor());
    return acc;
  }

  QPoly factor() {
    QPoly base = primary();
    if (!accept(Tok::Caret)) return base;
    const Token& t = peek();
    if (t.kind != Tok::Int) fail("exponent must be a non-negative integer literal");
    ++pos_;
    unsigned long e = std::stoul(t.text);
    if (e > Monomial::kMaxExponent) throw ExponentOverflow("exponent " + t.text + " exceeds 255");
    QPoly result = QPoly::constant(ring_, Q_, Q_.one());
    for (unsigned long k = 0; k < e; ++k) result = poly_mul(result, base);
    return result;
  }

  QPoly primary() {
    const Token t = peek();
    switch (t.kind) {
      case Tok::Int:
        ++pos_;
        return QPoly::constant(ring_, Q_, mpq_class(mpz_class(t.text)));
      case Tok::Ident: {
        ++pos_;
        auto it = var_index_.find(t.text);
        if (it == var_index_.end()) fail("unknown variable '" + t.text + "'");
        return QPoly::from_sorted_terms(ring_, Q_,
                                        {{Monomial::variable(ring_->num_variables(), it->second), Q_.one()}});
      }
      case Tok::LParen: {
        ++pos_;
        QPoly inner = poly();
        expect(Tok::RParen, "')'");
        return inner;
      }
      case Tok::Star:
        fail("malformed expression: unexpected '*'");
      default:
        fail(t.kind == Tok::End ? "unexpected end of input" : "unexpected '" + t.text + "'");
    }
  }

  const Token& peek() const { return toks_[pos_]; }
  bool accept(Tok k) {
    if (peek().kind != k) return false;
    ++pos_;
    return true;
  }
  void expect(Tok k, const char* what) {
    if (!accept(k)) fail(std::string("expected ") + what);
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg + " at offset " + std::to_string(peek().pos));
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  RingPtr ring_;
  RationalField Q_;
  std::map<std::string, std::size_t> var_index_;
};

std::string format_monomial(const Monomial& m, const PolyRing& ring) {
  std::string out;
  for (std::size_t i = 0; i < m.num_variables(); ++i) {
    if (m[i] == 0) continue;
    if (!out.empty()) out += '*';
    out += ring.variables[i];
    if (m[i] > 1) out += '^' + std::to_string(m[i]);
  }
  return out;
}

/// Shared term printer; `magnitude` renders |c| and `negative` its sign.
template <class Poly, class Magnitude, class Negative>
std::string format_terms(const Poly& f, Magnitude magnitude, Negative negative) {
  if (f.is_zero()) return "0";
  std::string out;
  bool first = true;
  for (const auto& t : f.terms()) {
    const bool neg = negative(t.coeff);
    if (first) {
      if (neg) out += '-';
    } else {
      out += neg ? " - " : " + ";
    }
    first = false;
    const std::string mag = magnitude(t.coeff);
    const std::string mono = format_monomial(t.monomial, *f.ring());
    if (mono.empty()) {
      out += mag;
    } else if (mag == "1") {
      out += mono;
    } else {
      out += mag + '*' + mono;
    }
  }
  return out;
}

bool natural_less(const std::string& a, const std::string& b) {
  auto split = [](const std::string& s) {
    std::size_t k = s.size();
    while (k > 0 && std::isdigit(static_cast<unsigned char>(s[k - 1]))) --k;
    return std::pair{s.substr(0, k), s.substr(k)};
  };
  auto [pa, na] = split(a);
  auto [pb, nb] = split(b);
  if (pa != pb || na.empty() || nb.empty()) return a < b;
  if (na.size() != nb.size()) return na.size() < nb.size();
  return na < nb;
}

}  // namespace

std::vector<QPoly> parse_system(std::string_view text, const RingPtr& ring) {
  return Parser(tokenize(text), ring).system();
}

QPoly parse_polynomial(std::string_view text, const RingPtr& ring) {
  return Parser(tokenize(text), ring).single();
}

std::vector<std::string> infer_variables(std::string_view text) {
  std::vector<Token> toks = tokenize(text);
  std::set<std::string> names;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (toks[i].kind != Tok::Ident) continue;
    if (i + 1 < toks.size() && toks[i + 1].kind == Tok::Assign) continue;
    names.insert(toks[i].text);
  }
  std::vector<std::string> vars(names.begin(), names.end());
  std::sort(vars.begin(), vars.end(), natural_less);
  return vars;
}

std::string format_polynomial(const QPoly& f) {
  return format_terms(
      f, [](const mpq_class& c) { return mpq_class(abs(c)).get_str(); },
      [](const mpq_class& c) { return sgn(c) < 0; });
}

std::string format_polynomial(const Polynomial<PrimeField>& f) {
  return format_terms(
      f, [](std::uint32_t c) { return std::to_string(c); }, [](std::uint32_t) { return false; });
}

QPoly primitive_integer_form(const QPoly& f) {
  if (f.is_zero()) return f;
  mpz_class den_lcm = 1, num_gcd = 0;
  for (const auto& t : f.terms()) {
    mpz_lcm(den_lcm.get_mpz_t(), den_lcm.get_mpz_t(), t.coeff.get_den_mpz_t());
    mpz_gcd(num_gcd.get_mpz_t(), num_gcd.get_mpz_t(), t.coeff.get_num_mpz_t());
  }
  mpq_class scale(den_lcm, num_gcd);
  scale.canonicalize();
  if (sgn(f.leading_coeff()) < 0) scale = -scale;
  const RationalField Q;
  return poly_mul_term(f, Monomial(f.ring()->num_variables()), scale);
}

QPoly monic_form(const QPoly& f) { return make_monic(f); }

std::string format_basis(const std::vector<QPoly>& basis) {
  std::string out;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    out += format_polynomial(primitive_integer_form(basis[k]));
    out += k + 1 < basis.size() ? ",\n" : "\n";
  }
  return out;
}

std::uint64_t system_hash(const std::vector<QPoly>& system) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= 0xff;
    h *= 0x100000001b3ULL;
  };
  if (!system.empty()) {
    for (const auto& v : system.front().ring()->variables) feed(v);
  }
  feed("|");
  for (const auto& f : system) feed(format_polynomial(f));
  return h;
}

std::optional<Polynomial<PrimeField>> reduce_mod(const QPoly& f, const PrimeField& field) {
  std::vector<Polynomial<PrimeField>::Term> terms;
  terms.reserve(f.size());
  for (const auto& t : f.terms()) {
    auto c = field.from_mpq(t.coeff);
    if (!c) return std::nullopt;
    if (*c != 0) terms.push_back({t.monomial, *c});
  }
  return Polynomial<PrimeField>::from_sorted_terms(f.ring(), field, std::move(terms));
}

}  // namespace gbmod
