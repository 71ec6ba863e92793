#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gbmod/modarith.hpp"
#include "gbmod/polynomial.hpp"

namespace gbmod {

using QPoly = Polynomial<RationalField>;

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// x<first>, x<first+1>, ... as used by the cyclic benchmark scripts.
std::vector<std::string> indexed_variables(std::size_t n, std::size_t first = 0);

/// cyclic-n: for 1 <= k < n the sum over i of the product of k cyclically
/// consecutive variables starting at x_i, then x_0*...*x_{n-1} - 1.
std::vector<QPoly> generate_cyclic(std::size_t n, const RingPtr& ring);

/// Parses comma separated polynomials over +, -, *, ^, parentheses, integer
/// literals and the ring's variables. An optional `name :=` prefix, square
/// brackets and a trailing `;` or `:;` are accepted.
std::vector<QPoly> parse_system(std::string_view text, const RingPtr& ring);
QPoly parse_polynomial(std::string_view text, const RingPtr& ring);

/// Identifiers that look like variables, in natural order (x2 before x10).
std::vector<std::string> infer_variables(std::string_view text);

/// Script syntax, e.g. `x1*x2 + x2*x3` or `-3/2*x0^2 + 1`.
std::string format_polynomial(const QPoly& f);
std::string format_polynomial(const Polynomial<PrimeField>& f);

/// Scales f to coprime integer coefficients with a positive leading coefficient.
QPoly primitive_integer_form(const QPoly& f);

/// Scales f to leading coefficient 1.
QPoly monic_form(const QPoly& f);

/// One generator per line separated by commas, each in primitive integer form.
std::string format_basis(const std::vector<QPoly>& basis);

/// FNV-1a over the variable list and the canonical text of each generator.
std::uint64_t system_hash(const std::vector<QPoly>& system);

/// Image modulo p; nullopt when some denominator vanishes mod p.
std::optional<Polynomial<PrimeField>> reduce_mod(const QPoly& f, const PrimeField& field);

}  // namespace gbmod
