#include "gbmod/f4.hpp"

#include <algorithm>
#include <numeric>
#include <thread>
#include <unordered_set>

namespace gbmod {

namespace {

/// Open-addressing map from monomials to dense ids (insertion order).
class MonomialTable {
 public:
  explicit MonomialTable(std::size_t expected = 1024) {
    std::size_t cap = 16;
    while (cap < 2 * expected) cap <<= 1;
    slots_.assign(cap, 0);
    monos_.reserve(expected);
  }

  std::uint32_t insert(const Monomial& m) {
    const std::size_t h = m.hash();
    std::size_t pos = h & (slots_.size() - 1);
    while (std::uint32_t s = slots_[pos]) {
      if (monos_[s - 1] == m) return s - 1;
      pos = (pos + 1) & (slots_.size() - 1);
    }
    const auto id = static_cast<std::uint32_t>(monos_.size());
    monos_.push_back(m);
    hashes_.push_back(h);
    slots_[pos] = id + 1;
    if (2 * monos_.size() > slots_.size()) grow();
    return id;
  }

  std::optional<std::uint32_t> find(const Monomial& m) const {
    std::size_t pos = m.hash() & (slots_.size() - 1);
    while (std::uint32_t s = slots_[pos]) {
      if (monos_[s - 1] == m) return s - 1;
      pos = (pos + 1) & (slots_.size() - 1);
    }
    return std::nullopt;
  }

  const Monomial& operator[](std::uint32_t id) const { return monos_[id]; }
  std::size_t size() const { return monos_.size(); }

 private:
  void grow() {
    std::vector<std::uint32_t> slots(slots_.size() * 2, 0);
    const std::size_t mask = slots.size() - 1;
    for (std::size_t id = 0; id < monos_.size(); ++id) {
      std::size_t pos = hashes_[id] & mask;
      while (slots[pos] != 0) pos = (pos + 1) & mask;
      slots[pos] = static_cast<std::uint32_t>(id + 1);
    }
    slots_ = std::move(slots);
  }

  std::vector<Monomial> monos_;
  std::vector<std::size_t> hashes_;
  std::vector<std::uint32_t> slots_;
};

/// multiplier * basis[index], used to deduplicate rows.
struct MultipleKey {
  std::uint32_t index;
  Monomial multiplier;

  friend bool operator==(const MultipleKey&, const MultipleKey&) = default;
};

struct MultipleKeyHash {
  std::size_t operator()(const MultipleKey& k) const {
    return k.multiplier.hash() ^ (std::size_t{k.index} * 0x9e3779b97f4a7c15ULL);
  }
};

const F4Element& row_element(const RowSpec& row, const F4Basis& basis,
                             std::span<const F4Element> inputs) {
  return row.source == RowSpec::Source::Basis ? basis[row.index] : inputs[row.index];
}

bool pair_order(const CriticalPair& a, const CriticalPair& b) {
  if (int c = grevlex_cmp(a.lcm, b.lcm); c != 0) return c < 0;
  if (a.i != b.i) return a.i < b.i;
  return a.j < b.j;
}

/// Reduces every row by the reducer pivots. Output rows only touch columns
/// that carry no reducer pivot.
std::vector<SparseRow> reduce_by_pivots(std::span<const SparseRow> reducers,
                                        std::span<const SparseRow> rows, std::size_t ncols,
                                        const PrimeField& field, unsigned threads) {
  std::vector<std::int32_t> pivot(ncols, -1);
  for (std::size_t r = 0; r < reducers.size(); ++r) {
    const auto& row = reducers[r];
    if (row.cols.empty()) continue;
    if (pivot[row.cols.front()] < 0) pivot[row.cols.front()] = static_cast<std::int32_t>(r);
  }

  const std::uint64_t p = field.modulus();
  const std::uint64_t pp = p * p;
  std::vector<SparseRow> out(rows.size());

  auto work = [&](std::size_t begin, std::size_t end) {
    std::vector<std::uint64_t> acc(ncols, 0);
    for (std::size_t i = begin; i < end; ++i) {
      const SparseRow& row = rows[i];
      if (row.cols.empty()) continue;
      for (std::size_t k = 0; k < row.cols.size(); ++k) acc[row.cols[k]] = row.coeffs[k];
      std::size_t hi = row.cols.back();
      SparseRow& res = out[i];
      for (std::size_t c = row.cols.front(); c <= hi; ++c) {
        const std::uint64_t a = acc[c];
        if (a == 0) continue;
        acc[c] = 0;
        const std::uint64_t v = a % p;
        if (v == 0) continue;
        const std::int32_t piv = pivot[c];
        if (piv < 0) {
          res.cols.push_back(static_cast<std::uint32_t>(c));
          res.coeffs.push_back(static_cast<std::uint32_t>(v));
          continue;
        }
        const SparseRow& red = reducers[static_cast<std::size_t>(piv)];
        const std::uint64_t mult = p - v;
        const std::size_t n = red.cols.size();
        for (std::size_t k = 1; k < n; ++k) {
          std::uint64_t& slot = acc[red.cols[k]];
          const std::uint64_t x = slot + mult * red.coeffs[k];
          slot = x >= pp ? x - pp : x;
        }
        if (n > 1) hi = std::max<std::size_t>(hi, red.cols.back());
      }
    }
  };

  const std::size_t nthreads = std::max<std::size_t>(1, std::min<std::size_t>(threads, rows.size()));
  if (nthreads <= 1) {
    work(0, rows.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (rows.size() + nthreads - 1) / nthreads;
    for (std::size_t t = 0; t < nthreads; ++t) {
      const std::size_t b = t * chunk, e = std::min(rows.size(), b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
    for (auto& th : pool) th.join();
  }
  return out;
}

SparseRow build_row(const F4Element& e, const Monomial& mult, const MonomialTable& table,
                    const std::vector<std::uint32_t>& column_of_id) {
  SparseRow row;
  row.cols.reserve(e.size());
  row.coeffs = e.coeffs;
  for (const Monomial& m : e.monomials) {
    auto id = table.find(m * mult);
    if (!id) throw UnluckyPrime("row monomial outside the recorded column set");
    row.cols.push_back(column_of_id[*id]);
  }
  return row;
}

F4Element element_from_row(const SparseRow& row, std::span<const Monomial> columns) {
  F4Element e;
  e.monomials.reserve(row.cols.size());
  for (std::uint32_t c : row.cols) e.monomials.push_back(columns[c]);
  e.coeffs = row.coeffs;
  e.lead_mask = e.monomials.front().divmask();
  return e;
}

/// Columns of a symbolic result as a table plus the id -> column map.
struct ColumnIndex {
  MonomialTable table;
  std::vector<std::uint32_t> column_of_id;

  explicit ColumnIndex(std::span<const Monomial> sorted) : table(sorted.size()) {
    column_of_id.resize(sorted.size());
    for (std::size_t c = 0; c < sorted.size(); ++c) {
      column_of_id[table.insert(sorted[c])] = static_cast<std::uint32_t>(c);
    }
  }
};

/// Fully reduces the tails of a minimal monic set, returning it sorted by
/// increasing leading monomial.
std::vector<F4Element> reduce_tails(std::vector<F4Element> elems, const PrimeField& field,
                                    unsigned threads) {
  std::sort(elems.begin(), elems.end(),
            [](const F4Element& a, const F4Element& b) { return grevlex_cmp(a.lead(), b.lead()) < 0; });
  F4Basis basis;
  std::vector<F4Element> tails;
  std::vector<RowSpec> rows;
  for (std::size_t k = 0; k < elems.size(); ++k) {
    elems[k].redundant = false;
    elems[k].lead_mask = elems[k].lead().divmask();
    basis.push(elems[k]);
    F4Element tail;
    tail.monomials.assign(elems[k].monomials.begin() + 1, elems[k].monomials.end());
    tail.coeffs.assign(elems[k].coeffs.begin() + 1, elems[k].coeffs.end());
    tails.push_back(std::move(tail));
    const std::size_t nvars = elems[k].lead().num_variables();
    rows.push_back({RowSpec::Source::Input, static_cast<std::uint32_t>(k), Monomial(nvars)});
  }
  SymbolicResult sym = symbolic_preprocess(rows, basis, tails);
  ColumnIndex index(sym.monomials);
  std::vector<SparseRow> reducer_rows, tail_rows;
  for (const auto& r : sym.reducers) {
    reducer_rows.push_back(build_row(basis[r.basis_index], r.multiplier, index.table, index.column_of_id));
  }
  for (const auto& t : tails) {
    if (t.monomials.empty()) {
      tail_rows.emplace_back();
      continue;
    }
    tail_rows.push_back(build_row(t, Monomial(t.monomials.front().num_variables()), index.table,
                                  index.column_of_id));
  }
  auto reduced = reduce_by_pivots(reducer_rows, tail_rows, sym.monomials.size(), field, threads);
  for (std::size_t k = 0; k < elems.size(); ++k) {
    F4Element& e = elems[k];
    e.monomials.resize(1);
    e.coeffs.resize(1);
    for (std::size_t t = 0; t < reduced[k].cols.size(); ++t) {
      e.monomials.push_back(sym.monomials[reduced[k].cols[t]]);
      e.coeffs.push_back(reduced[k].coeffs[t]);
    }
  }
  return elems;
}

/// Keeps elements whose leading monomial is not divisible by another's;
/// among equal leading monomials the first one wins.
bool is_minimal(const std::vector<ModPoly>& polys) {
  for (std::size_t a = 0; a < polys.size(); ++a) {
    for (std::size_t b = 0; b < polys.size(); ++b) {
      if (a != b && monomial_divides(polys[a].leading_monomial(), polys[b].leading_monomial())) {
        return false;
      }
    }
  }
  return true;
}

ModularBasis to_modular_basis(const std::vector<F4Element>& elems, const RingPtr& ring,
                              const PrimeField& field) {
  ModularBasis out;
  out.prime = field.modulus();
  out.polys.reserve(elems.size());
  for (const auto& e : elems) out.polys.push_back(e.to_poly(ring, field));
  return out;
}

F4Element unit_element(std::size_t nvars) {
  F4Element e;
  e.monomials.push_back(Monomial(nvars));
  e.coeffs.push_back(1);
  return e;
}

struct Inputs {
  RingPtr ring;
  std::vector<F4Element> elements;
  bool has_constant = false;
};

Inputs prepare_inputs(const std::vector<ModPoly>& system, const PrimeField& field) {
  Inputs in;
  for (const auto& f : system) {
    if (f.field().modulus() != field.modulus()) {
      throw ContextMismatch("input polynomial over a different prime");
    }
    if (!in.ring) in.ring = f.ring();
    if (in.ring->variables != f.ring()->variables) throw ContextMismatch("inputs over different rings");
    if (f.is_zero()) continue;
    if (f.leading_monomial().is_one()) in.has_constant = true;
    in.elements.push_back(F4Element::from_poly(make_monic(f)));
  }
  return in;
}

std::vector<F4Element> sorted_new_elements(const EchelonResult& ech,
                                           std::span<const Monomial> columns) {
  std::vector<F4Element> fresh;
  fresh.reserve(ech.new_rows.size());
  for (const auto& row : ech.new_rows) fresh.push_back(element_from_row(row, columns));
  // Decreasing leading monomials: a later element can never divide an earlier one.
  std::sort(fresh.begin(), fresh.end(),
            [](const F4Element& a, const F4Element& b) { return grevlex_cmp(a.lead(), b.lead()) > 0; });
  return fresh;
}

F4Result run_record(const Inputs& in, const PrimeField& field, const F4Options& opt) {
  F4Result result;
  LearningRecord record;
  const std::size_t nvars = in.ring->num_variables();
  record.num_variables = static_cast<std::uint32_t>(nvars);
  record.system_hash = opt.system_hash;
  record.num_inputs = in.elements.size();

  std::vector<CriticalPair> queue;
  for (std::size_t k = 0; k < in.elements.size(); ++k) {
    queue.push_back({CriticalPair::kGenerator, static_cast<std::uint32_t>(k), in.elements[k].lead()});
  }
  F4Basis basis;
  bool unit_found = false;

  while (!queue.empty() && !unit_found) {
    BatchRecord batch;
    batch.pairs = select_batch(queue, opt.max_pairs);

    std::vector<RowSpec> rows;
    std::unordered_set<MultipleKey, MultipleKeyHash> seen;
    for (const auto& pair : batch.pairs) {
      if (pair.is_generator()) {
        rows.push_back({RowSpec::Source::Input, pair.j, Monomial(nvars)});
        continue;
      }
      for (std::uint32_t idx : {pair.i, pair.j}) {
        RowSpec spec{RowSpec::Source::Basis, idx, monomial_div(pair.lcm, basis[idx].lead())};
        if (seen.insert(MultipleKey{idx, spec.multiplier}).second) rows.push_back(spec);
      }
    }
    SymbolicResult sym = symbolic_preprocess(rows, basis, in.elements);
    // A pair half that was picked as a reducer would only reduce to zero.
    std::unordered_set<MultipleKey, MultipleKeyHash> chosen;
    for (const auto& r : sym.reducers) chosen.insert(MultipleKey{r.basis_index, r.multiplier});
    std::erase_if(rows, [&](const RowSpec& r) {
      return r.source == RowSpec::Source::Basis && chosen.contains(MultipleKey{r.index, r.multiplier});
    });

    ColumnIndex index(sym.monomials);
    std::vector<SparseRow> reducer_rows, work_rows;
    reducer_rows.reserve(sym.reducers.size());
    for (const auto& r : sym.reducers) {
      reducer_rows.push_back(build_row(basis[r.basis_index], r.multiplier, index.table, index.column_of_id));
    }
    for (const auto& r : rows) {
      work_rows.push_back(build_row(row_element(r, basis, in.elements), r.multiplier, index.table,
                                    index.column_of_id));
    }
    EchelonResult ech = matrix_echelon(reducer_rows, work_rows, sym.monomials.size(), field, opt.threads);

    ++result.stats.batches;
    result.stats.rows_eliminated += work_rows.size();
    result.stats.reducer_rows += reducer_rows.size();
    result.stats.max_columns = std::max(result.stats.max_columns, sym.monomials.size());
    result.stats.zero_rows += static_cast<std::size_t>(std::count(ech.zero_flags.begin(), ech.zero_flags.end(), 1));

    for (F4Element& e : sorted_new_elements(ech, sym.monomials)) {
      batch.new_leads.push_back(e.lead());
      if (e.lead().is_one()) {
        unit_found = true;
        basis.push(std::move(e));
        break;
      }
      update_pairs(queue, basis, std::move(e));
    }
    batch.rows = std::move(rows);
    batch.zero_flags = std::move(ech.zero_flags);
    batch.monomials = std::move(sym.monomials);
    batch.reducers = std::move(sym.reducers);
    record.batches.push_back(std::move(batch));
  }

  std::vector<F4Element> final_elems;
  if (unit_found) {
    record.final_active = {static_cast<std::uint32_t>(basis.size() - 1)};
    final_elems.push_back(unit_element(nvars));
  } else {
    record.final_active = basis.active_indices();
    for (auto idx : record.final_active) final_elems.push_back(basis[idx]);
    final_elems = reduce_tails(std::move(final_elems), field, opt.threads);
  }
  for (const auto& e : final_elems) record.skeleton.push_back(e.lead());
  result.basis = to_modular_basis(final_elems, in.ring, field);
  if (opt.mode == F4Mode::Record) result.learning = std::move(record);
  return result;
}

F4Result run_replay(const Inputs& in, const PrimeField& field, const F4Options& opt) {
  const LearningRecord& record = *opt.learning;
  const std::size_t nvars = in.ring->num_variables();
  if (record.num_variables != nvars) throw std::invalid_argument("learning record over a different ring");
  if (record.num_inputs != in.elements.size()) throw UnluckyPrime("input count differs from the record");

  F4Result result;
  F4Basis basis;
  for (const BatchRecord& batch : record.batches) {
    ColumnIndex index(batch.monomials);
    std::vector<SparseRow> reducer_rows, work_rows;
    reducer_rows.reserve(batch.reducers.size());
    for (const auto& r : batch.reducers) {
      if (r.basis_index >= basis.size()) throw std::invalid_argument("corrupt learning record");
      reducer_rows.push_back(build_row(basis[r.basis_index], r.multiplier, index.table, index.column_of_id));
    }
    for (std::size_t k = 0; k < batch.rows.size(); ++k) {
      if (batch.zero_flags[k]) {
        ++result.stats.rows_skipped;
        continue;
      }
      const RowSpec& r = batch.rows[k];
      const std::size_t limit = r.source == RowSpec::Source::Basis ? basis.size() : in.elements.size();
      if (r.index >= limit) throw std::invalid_argument("corrupt learning record");
      work_rows.push_back(build_row(row_element(r, basis, in.elements), r.multiplier, index.table,
                                    index.column_of_id));
    }
    EchelonResult ech = matrix_echelon(reducer_rows, work_rows, batch.monomials.size(), field, opt.threads);
    ++result.stats.batches;
    result.stats.rows_eliminated += work_rows.size();
    result.stats.reducer_rows += reducer_rows.size();
    result.stats.max_columns = std::max(result.stats.max_columns, batch.monomials.size());
    const auto zeros = static_cast<std::size_t>(std::count(ech.zero_flags.begin(), ech.zero_flags.end(), 1));
    result.stats.zero_rows += zeros;
    if (zeros != 0) throw UnluckyPrime("a recorded pivot row reduced to zero");

    auto fresh = sorted_new_elements(ech, batch.monomials);
    if (fresh.size() != batch.new_leads.size()) throw UnluckyPrime("new element count differs from the record");
    for (std::size_t k = 0; k < fresh.size(); ++k) {
      if (!(fresh[k].lead() == batch.new_leads[k])) throw UnluckyPrime("leading monomial differs from the record");
      basis.push(std::move(fresh[k]));
    }
  }

  std::vector<F4Element> final_elems;
  if (record.skeleton.size() == 1 && record.skeleton.front().is_one()) {
    final_elems.push_back(unit_element(nvars));
  } else {
    for (auto idx : record.final_active) {
      if (idx >= basis.size()) throw std::invalid_argument("corrupt learning record");
      final_elems.push_back(basis[idx]);
    }
    final_elems = reduce_tails(std::move(final_elems), field, opt.threads);
  }
  if (final_elems.size() != record.skeleton.size()) throw UnluckyPrime("basis size differs from the record");
  for (std::size_t k = 0; k < final_elems.size(); ++k) {
    if (!(final_elems[k].lead() == record.skeleton[k])) throw UnluckyPrime("final skeleton differs from the record");
  }
  result.basis = to_modular_basis(final_elems, in.ring, field);
  return result;
}

}  // namespace

F4Element F4Element::from_poly(const ModPoly& p) {
  F4Element e;
  e.monomials.reserve(p.size());
  e.coeffs.reserve(p.size());
  for (const auto& t : p.terms()) {
    e.monomials.push_back(t.monomial);
    e.coeffs.push_back(t.coeff);
  }
  if (!e.monomials.empty()) e.lead_mask = e.monomials.front().divmask();
  return e;
}

ModPoly F4Element::to_poly(const RingPtr& ring, const PrimeField& field) const {
  std::vector<ModPoly::Term> terms;
  terms.reserve(monomials.size());
  for (std::size_t k = 0; k < monomials.size(); ++k) terms.push_back({monomials[k], coeffs[k]});
  return ModPoly::from_sorted_terms(ring, field, std::move(terms));
}

std::optional<std::size_t> F4Basis::find_reducer(const Monomial& m) const {
  const std::uint64_t mask = m.divmask();
  for (std::size_t i = 0; i < elements_.size(); ++i) {
    const F4Element& e = elements_[i];
    if (e.redundant || (e.lead_mask & ~mask) != 0) continue;
    if (monomial_divides(e.lead(), m)) return i;
  }
  return std::nullopt;
}

std::vector<std::uint32_t> F4Basis::active_indices() const {
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < elements_.size(); ++i) {
    if (!elements_[i].redundant) out.push_back(static_cast<std::uint32_t>(i));
  }
  return out;
}

void update_pairs(std::vector<CriticalPair>& queue, F4Basis& basis, F4Element element) {
  if (element.monomials.empty()) throw std::invalid_argument("update_pairs: zero polynomial");
  const Monomial h = element.lead();
  element.lead_mask = h.divmask();
  element.redundant = false;
  const auto h_index = static_cast<std::uint32_t>(basis.size());

  struct Candidate {
    std::uint32_t g;
    Monomial lcm;
    bool coprime;
    bool alive = true;
  };
  std::vector<Candidate> cands;
  for (std::size_t g = 0; g < basis.size(); ++g) {
    const F4Element& e = basis[g];
    if (e.redundant) continue;
    if (e.lead() == h) throw std::invalid_argument("update_pairs: leading monomial already in the basis");
    cands.push_back({static_cast<std::uint32_t>(g), monomial_lcm(e.lead(), h), monomials_coprime(e.lead(), h)});
  }

  // Chain criterion among the new pairs: drop (g, h) when another surviving
  // new pair has an lcm dividing lcm(g, h).
  for (std::size_t c = 0; c < cands.size(); ++c) {
    if (cands[c].coprime) continue;
    for (std::size_t d = 0; d < cands.size(); ++d) {
      if (d == c || !cands[d].alive) continue;
      if (monomial_divides(cands[d].lcm, cands[c].lcm)) {
        cands[c].alive = false;
        break;
      }
    }
  }

  // Old pairs whose lcm is strictly divided by lt(h) in the chain sense.
  std::erase_if(queue, [&](const CriticalPair& pair) {
    if (pair.is_generator() || !monomial_divides(h, pair.lcm)) return false;
    const Monomial li = monomial_lcm(basis[pair.i].lead(), h);
    const Monomial lj = monomial_lcm(basis[pair.j].lead(), h);
    return !(li == pair.lcm) && !(lj == pair.lcm);
  });

  // Product criterion: coprime leading monomials never need a pair.
  for (const auto& c : cands) {
    if (c.alive && !c.coprime) queue.push_back({c.g, h_index, c.lcm});
  }

  for (std::size_t g = 0; g < basis.size(); ++g) {
    F4Element& e = basis[g];
    if (!e.redundant && monomial_divides(h, e.lead())) e.redundant = true;
  }
  basis.push(std::move(element));
}

std::vector<CriticalPair> select_batch(std::vector<CriticalPair>& queue, std::size_t max_pairs) {
  if (queue.empty()) return {};
  unsigned min_degree = queue.front().degree();
  for (const auto& p : queue) min_degree = std::min(min_degree, p.degree());
  std::vector<CriticalPair> batch;
  std::vector<CriticalPair> rest;
  for (auto& p : queue) (p.degree() == min_degree ? batch : rest).push_back(std::move(p));
  std::sort(batch.begin(), batch.end(), pair_order);
  if (max_pairs != 0 && batch.size() > max_pairs) {
    rest.insert(rest.end(), batch.begin() + static_cast<std::ptrdiff_t>(max_pairs), batch.end());
    batch.resize(max_pairs);
  }
  queue = std::move(rest);
  return batch;
}

SymbolicResult symbolic_preprocess(std::span<const RowSpec> rows, const F4Basis& basis,
                                   std::span<const F4Element> inputs) {
  SymbolicResult out;
  if (rows.empty()) return out;
  MonomialTable table;
  for (const RowSpec& r : rows) {
    for (const Monomial& m : row_element(r, basis, inputs).monomials) table.insert(m * r.multiplier);
  }
  for (std::uint32_t id = 0; id < table.size(); ++id) {
    const Monomial m = table[id];
    auto reducer = basis.find_reducer(m);
    if (!reducer) continue;
    const F4Element& e = basis[*reducer];
    const Monomial mult = monomial_div(m, e.lead());
    out.reducers.push_back({static_cast<std::uint32_t>(*reducer), mult});
    for (std::size_t k = 1; k < e.size(); ++k) table.insert(e.monomials[k] * mult);
  }
  out.monomials.reserve(table.size());
  for (std::uint32_t id = 0; id < table.size(); ++id) out.monomials.push_back(table[id]);
  std::sort(out.monomials.begin(), out.monomials.end(), GrevlexGreater{});
  return out;
}

EchelonResult matrix_echelon(std::span<const SparseRow> reducers, std::span<const SparseRow> rows,
                             std::size_t ncols, const PrimeField& field, unsigned threads) {
  EchelonResult result;
  result.zero_flags.assign(rows.size(), 0);
  std::vector<SparseRow> residual = reduce_by_pivots(reducers, rows, ncols, field, threads);

  // Compress to the columns that survived the first pass.
  std::vector<std::uint32_t> used;
  for (const auto& r : residual) used.insert(used.end(), r.cols.begin(), r.cols.end());
  std::sort(used.begin(), used.end());
  used.erase(std::unique(used.begin(), used.end()), used.end());
  std::vector<std::uint32_t> compressed(ncols, 0);
  for (std::size_t k = 0; k < used.size(); ++k) compressed[used[k]] = static_cast<std::uint32_t>(k);

  const std::uint64_t p = field.modulus();
  const std::uint64_t pp = p * p;
  std::vector<std::uint64_t> acc(used.size(), 0);
  std::vector<std::int32_t> pivot(used.size(), -1);
  std::vector<SparseRow> pivots;  // compressed columns

  for (std::size_t i = 0; i < residual.size(); ++i) {
    const SparseRow& row = residual[i];
    if (row.cols.empty()) {
      result.zero_flags[i] = 1;
      continue;
    }
    for (std::size_t k = 0; k < row.cols.size(); ++k) acc[compressed[row.cols[k]]] = row.coeffs[k];
    std::size_t hi = compressed[row.cols.back()];
    SparseRow out;
    for (std::size_t c = compressed[row.cols.front()]; c <= hi; ++c) {
      const std::uint64_t a = acc[c];
      if (a == 0) continue;
      acc[c] = 0;
      const std::uint64_t v = a % p;
      if (v == 0) continue;
      if (pivot[c] < 0) {
        out.cols.push_back(static_cast<std::uint32_t>(c));
        out.coeffs.push_back(static_cast<std::uint32_t>(v));
        continue;
      }
      const SparseRow& red = pivots[static_cast<std::size_t>(pivot[c])];
      const std::uint64_t mult = p - v;
      for (std::size_t k = 1; k < red.cols.size(); ++k) {
        std::uint64_t& slot = acc[red.cols[k]];
        const std::uint64_t x = slot + mult * red.coeffs[k];
        slot = x >= pp ? x - pp : x;
      }
      if (red.cols.size() > 1) hi = std::max<std::size_t>(hi, red.cols.back());
    }
    if (out.cols.empty()) {
      result.zero_flags[i] = 1;
      continue;
    }
    const std::uint32_t inv = field.inv(out.coeffs.front());
    for (auto& c : out.coeffs) c = field.mul(c, inv);
    pivot[out.cols.front()] = static_cast<std::int32_t>(pivots.size());
    pivots.push_back(out);
    for (auto& c : out.cols) c = used[c];
    result.new_rows.push_back(std::move(out));
    result.new_row_sources.push_back(static_cast<std::uint32_t>(i));
  }
  return result;
}

std::size_t LearningRecord::zero_rows() const {
  std::size_t n = 0;
  for (const auto& b : batches) n += static_cast<std::size_t>(std::count(b.zero_flags.begin(), b.zero_flags.end(), 1));
  return n;
}

std::size_t LearningRecord::total_rows() const {
  std::size_t n = 0;
  for (const auto& b : batches) n += b.rows.size();
  return n;
}

std::vector<Monomial> ModularBasis::leading_monomials() const {
  std::vector<Monomial> out;
  out.reserve(polys.size());
  for (const auto& p : polys) out.push_back(p.leading_monomial());
  return out;
}

std::size_t ModularBasis::term_count() const {
  std::size_t n = 0;
  for (const auto& p : polys) n += p.size();
  return n;
}

F4Result gbasis_mod_p(const std::vector<ModPoly>& system, const PrimeField& field, const F4Options& options) {
  Inputs in = prepare_inputs(system, field);
  F4Result result;
  result.basis.prime = field.modulus();
  if (options.mode == F4Mode::Replay && options.learning == nullptr) {
    throw std::invalid_argument("replay mode needs a learning record");
  }
  if (in.elements.empty()) {
    if (options.mode == F4Mode::Record) {
      LearningRecord rec;
      rec.num_variables = in.ring ? static_cast<std::uint32_t>(in.ring->num_variables()) : 0;
      rec.system_hash = options.system_hash;
      result.learning = std::move(rec);
    }
    return result;
  }
  const std::size_t nvars = in.ring->num_variables();
  if (in.has_constant) {
    result.basis = to_modular_basis({unit_element(nvars)}, in.ring, field);
    if (options.mode == F4Mode::Replay) {
      const auto& sk = options.learning->skeleton;
      if (sk.size() != 1 || !sk.front().is_one()) throw UnluckyPrime("unit ideal where the record has none");
    }
    if (options.mode == F4Mode::Record) {
      LearningRecord rec;
      rec.num_variables = static_cast<std::uint32_t>(nvars);
      rec.system_hash = options.system_hash;
      rec.num_inputs = in.elements.size();
      rec.skeleton.push_back(Monomial(nvars));
      result.learning = std::move(rec);
    }
    return result;
  }
  if (options.mode == F4Mode::Replay) return run_replay(in, field, options);
  return run_record(in, field, options);
}

std::vector<ModPoly> interreduce(const std::vector<ModPoly>& basis, unsigned threads) {
  std::vector<ModPoly> work;
  for (const auto& f : basis) {
    if (!f.is_zero()) work.push_back(make_monic(f));
  }
  if (work.empty()) return work;
  const RingPtr ring = work.front().ring();
  const PrimeField field = work.front().field();
  for (const auto& f : work) {
    if (f.leading_monomial().is_one()) return {ModPoly::constant(ring, field, 1)};
  }
  // Autoreduce until leading monomials are pairwise non-divisible.
  while (!is_minimal(work)) {
    bool changed = false;
    for (std::size_t i = 0; i < work.size() && !changed; ++i) {
      std::vector<ModPoly> others;
      for (std::size_t j = 0; j < work.size(); ++j) {
        if (j != i) others.push_back(work[j]);
      }
      ModPoly r = normal_form(work[i], others);
      if (r == work[i]) continue;
      changed = true;
      if (r.is_zero()) {
        work.erase(work.begin() + static_cast<std::ptrdiff_t>(i));
      } else {
        if (r.leading_monomial().is_one()) return {ModPoly::constant(ring, field, 1)};
        work[i] = make_monic(r);
      }
    }
    if (!changed) break;
  }
  std::vector<F4Element> elems;
  for (const auto& f : work) elems.push_back(F4Element::from_poly(f));
  elems = reduce_tails(std::move(elems), field, threads);
  return to_modular_basis(elems, ring, field).polys;
}

}  // namespace gbmod
