#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "gbmod/modarith.hpp"
#include "gbmod/monomial.hpp"
#include "gbmod/polynomial.hpp"

namespace gbmod {

using ModPoly = Polynomial<PrimeField>;

/// Raised when a replayed run leaves the recorded path (different leading
/// monomials, a missing column, or a pivot that vanished).
class UnluckyPrime : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// S-polynomial (lcm/lt(f)) * f - (lcm/lt(g)) * g, normalized by the leading
/// coefficients so the leading terms cancel.
template <class Field>
Polynomial<Field> spair(const Polynomial<Field>& f, const Polynomial<Field>& g) {
  const Field& F = f.field();
  const Monomial l = monomial_lcm(f.leading_monomial(), g.leading_monomial());
  auto left = poly_mul_term(f, monomial_div(l, f.leading_monomial()), F.inv(f.leading_coeff()));
  auto right = poly_mul_term(g, monomial_div(l, g.leading_monomial()), F.inv(g.leading_coeff()));
  return poly_sub(left, right);
}

/// Monic polynomial in the engine's flat layout: parallel monomial and
/// coefficient arrays in decreasing grevlex order.
struct F4Element {
  std::vector<Monomial> monomials;
  std::vector<std::uint32_t> coeffs;
  std::uint64_t lead_mask = 0;
  bool redundant = false;

  const Monomial& lead() const { return monomials.front(); }
  std::size_t size() const { return monomials.size(); }

  static F4Element from_poly(const ModPoly& p);
  ModPoly to_poly(const RingPtr& ring, const PrimeField& field) const;
};

/// Basis under construction. Elements are never removed; elements whose
/// leading monomial became divisible by a newer one are flagged redundant.
class F4Basis {
 public:
  std::size_t size() const { return elements_.size(); }
  const F4Element& operator[](std::size_t i) const { return elements_[i]; }
  F4Element& operator[](std::size_t i) { return elements_[i]; }

  /// Index of the oldest active element whose leading monomial divides m.
  std::optional<std::size_t> find_reducer(const Monomial& m) const;
  std::vector<std::uint32_t> active_indices() const;

  void push(F4Element e) { elements_.push_back(std::move(e)); }

 private:
  std::vector<F4Element> elements_;
};

/// A queued critical pair (i < j, both basis indices) or an input generator
/// waiting to enter the computation (i == kGenerator, j = input index).
struct CriticalPair {
  static constexpr std::uint32_t kGenerator = 0xffffffffu;

  std::uint32_t i;
  std::uint32_t j;
  Monomial lcm;

  bool is_generator() const { return i == kGenerator; }
  unsigned degree() const { return lcm.degree(); }

  friend bool operator==(const CriticalPair&, const CriticalPair&) = default;
};

/// Adds `element` to `basis` and maintains `queue` with the Gebauer-Moller
/// criteria. Throws std::invalid_argument when an active element already
/// has the same leading monomial.
void update_pairs(std::vector<CriticalPair>& queue, F4Basis& basis, F4Element element);

/// Removes and returns the pairs of minimal lcm degree, ordered by (lcm, i, j)
/// and truncated to `max_pairs` (0 means unlimited).
std::vector<CriticalPair> select_batch(std::vector<CriticalPair>& queue, std::size_t max_pairs);

/// A matrix row before column assignment: multiplier * (basis or input element).
struct RowSpec {
  enum class Source : std::uint8_t { Basis = 0, Input = 1 };

  Source source;
  std::uint32_t index;
  Monomial multiplier;

  friend bool operator==(const RowSpec&, const RowSpec&) = default;
};

struct ReducerChoice {
  std::uint32_t basis_index;
  Monomial multiplier;

  friend bool operator==(const ReducerChoice&, const ReducerChoice&) = default;
};

struct SymbolicResult {
  /// Columns in decreasing grevlex order.
  std::vector<Monomial> monomials;
  /// One reducer per reducible column, in discovery order.
  std::vector<ReducerChoice> reducers;
};

SymbolicResult symbolic_preprocess(std::span<const RowSpec> rows, const F4Basis& basis,
                                   std::span<const F4Element> inputs);

/// Row of a Macaulay matrix; columns strictly increasing (monomials decreasing).
struct SparseRow {
  std::vector<std::uint32_t> cols;
  std::vector<std::uint32_t> coeffs;
};

struct EchelonResult {
  /// Monic rows with pivots outside the reducer pivots, in row order.
  std::vector<SparseRow> new_rows;
  /// Position in `rows` for each entry of `new_rows`.
  std::vector<std::uint32_t> new_row_sources;
  /// One flag per input row: reduced to zero.
  std::vector<std::uint8_t> zero_flags;
};

/// Eliminates `rows` against the monic `reducers` (whose leading columns are
/// known pivots) and then among themselves. Reduction by reducers is split
/// across `threads`; the result does not depend on the split.
EchelonResult matrix_echelon(std::span<const SparseRow> reducers, std::span<const SparseRow> rows,
                             std::size_t ncols, const PrimeField& field, unsigned threads = 1);

struct BatchRecord {
  std::vector<CriticalPair> pairs;
  /// Rows to reduce, in elimination order.
  std::vector<RowSpec> rows;
  std::vector<std::uint8_t> zero_flags;
  std::vector<Monomial> monomials;
  std::vector<ReducerChoice> reducers;
  /// Leading monomials of the elements appended after this batch, in order.
  std::vector<Monomial> new_leads;

  friend bool operator==(const BatchRecord&, const BatchRecord&) = default;
};

/// Everything a later prime needs to follow the recorded F4 path.
struct LearningRecord {
  std::uint32_t num_variables = 0;
  std::uint64_t system_hash = 0;
  std::size_t num_inputs = 0;
  std::vector<BatchRecord> batches;
  std::vector<std::uint32_t> final_active;
  /// Leading monomials of the reduced basis, increasing.
  std::vector<Monomial> skeleton;

  std::size_t zero_rows() const;
  std::size_t total_rows() const;

  friend bool operator==(const LearningRecord&, const LearningRecord&) = default;
};

std::vector<std::uint8_t> serialize_learning(const LearningRecord& record);
/// Throws std::runtime_error on bad magic, unsupported version or truncation.
LearningRecord deserialize_learning(std::span<const std::uint8_t> bytes);

/// Reduced monic Groebner basis modulo `prime`, sorted by increasing leading monomial.
struct ModularBasis {
  std::uint32_t prime = 0;
  std::vector<ModPoly> polys;

  std::vector<Monomial> leading_monomials() const;
  std::size_t term_count() const;
};

enum class F4Mode { Plain, Record, Replay };

struct F4Options {
  F4Mode mode = F4Mode::Plain;
  std::size_t max_pairs = 0;
  unsigned threads = 1;
  /// Required in replay mode.
  const LearningRecord* learning = nullptr;
  std::uint64_t system_hash = 0;
};

struct F4Stats {
  std::size_t batches = 0;
  std::size_t rows_eliminated = 0;
  std::size_t zero_rows = 0;
  std::size_t rows_skipped = 0;
  std::size_t reducer_rows = 0;
  std::size_t max_columns = 0;
};

struct F4Result {
  ModularBasis basis;
  std::optional<LearningRecord> learning;
  F4Stats stats;
};

/// Groebner basis of the ideal generated by `system` over F_p. Zero inputs
/// are dropped; a nonzero constant yields [1]. Replay throws UnluckyPrime
/// when the run deviates from the record.
F4Result gbasis_mod_p(const std::vector<ModPoly>& system, const PrimeField& field,
                      const F4Options& options = {});

/// Inter-reduces a generating set into its reduced monic form, sorted by
/// increasing leading monomial.
std::vector<ModPoly> interreduce(const std::vector<ModPoly>& basis, unsigned threads = 1);

}  // namespace gbmod
