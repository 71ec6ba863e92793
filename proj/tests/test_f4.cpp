#include <doctest.h>

#include <algorithm>
#include <random>

#include "support.hpp"

using namespace gbmod;
using namespace testing_support;

namespace {

constexpr std::uint32_t kSmallPrime = 65521;

Monomial mono(std::initializer_list<unsigned> e) { return Monomial::from_exponents(std::vector<unsigned>(e)); }

ModPoly mod_poly(const RingPtr& ring, const PrimeField& F, std::string_view text) {
  return *reduce_mod(parse_polynomial(text, ring), F);
}

std::vector<ModPoly> mod_system(const RingPtr& ring, const PrimeField& F, std::string_view text) {
  return reduce_system(parse_system(text, ring), F);
}

std::vector<ModPoly> cyclic_mod(std::size_t n, const PrimeField& F) {
  auto ring = make_ring(indexed_variables(n));
  return reduce_system(generate_cyclic(n, ring), F);
}

/// Dense Gaussian elimination over F_p in row order; returns zero flags and the
/// set of pivot columns introduced by the rows (reducer pivots excluded).
struct DenseOutcome {
  std::vector<std::uint8_t> zero_flags;
  std::vector<std::size_t> new_pivots;
  std::size_t rank = 0;
};

DenseOutcome dense_eliminate(const std::vector<SparseRow>& reducers, const std::vector<SparseRow>& rows,
                             std::size_t ncols, std::uint64_t p) {
  auto densify = [&](const SparseRow& r) {
    std::vector<std::uint64_t> d(ncols, 0);
    for (std::size_t k = 0; k < r.cols.size(); ++k) d[r.cols[k]] = r.coeffs[k];
    return d;
  };
  auto inv = [&](std::uint64_t a) {
    std::uint64_t result = 1, e = p - 2;
    while (e) {
      if (e & 1) result = result * a % p;
      a = a * a % p;
      e >>= 1;
    }
    return result;
  };
  std::vector<std::vector<std::uint64_t>> echelon(ncols);  // by pivot column
  auto insert = [&](std::vector<std::uint64_t> v) -> std::optional<std::size_t> {
    for (std::size_t c = 0; c < ncols; ++c) {
      if (v[c] == 0) continue;
      if (echelon[c].empty()) {
        const std::uint64_t s = inv(v[c]);
        for (auto& x : v) x = x * s % p;
        echelon[c] = std::move(v);
        return c;
      }
      const std::uint64_t f = v[c];
      for (std::size_t k = 0; k < ncols; ++k) v[k] = (v[k] + (p - f) * echelon[c][k]) % p;
    }
    return std::nullopt;
  };
  DenseOutcome out;
  for (const auto& r : reducers) insert(densify(r));
  for (const auto& r : rows) {
    auto pivot = insert(densify(r));
    out.zero_flags.push_back(pivot ? 0 : 1);
    if (pivot) out.new_pivots.push_back(*pivot);
  }
  for (const auto& e : echelon) out.rank += e.empty() ? 0 : 1;
  std::sort(out.new_pivots.begin(), out.new_pivots.end());
  return out;
}

SparseRow sparse(std::vector<std::uint32_t> cols, std::vector<std::uint32_t> coeffs) {
  return SparseRow{std::move(cols), std::move(coeffs)};
}

std::vector<ModPoly> from_oracle(const std::vector<oracle::Poly<oracle::Zp>>& G, const RingPtr& ring,
                                 const PrimeField& F) {
  std::vector<ModPoly> out;
  for (const auto& g : G) {
    std::vector<ModPoly::Term> terms;
    for (const auto& [e, c] : g) {
      std::vector<unsigned> u(e.begin(), e.end());
      terms.push_back({Monomial::from_exponents(u), static_cast<std::uint32_t>(c.v)});
    }
    out.push_back(ModPoly::from_terms(ring, F, std::move(terms)));
  }
  return out;
}

}  // namespace

TEST_CASE("spair examples") {
  auto ring = make_ring({"x", "y"});
  const PrimeField F(kSmallPrime);
  ModPoly f = mod_poly(ring, F, "x^2 - y");
  ModPoly g = mod_poly(ring, F, "x*y - 1");
  CHECK(spair(f, f).is_zero());
  ModPoly s = spair(f, g);
  CHECK(s == mod_poly(ring, F, "x - y^2"));
  CHECK(grevlex_cmp(s.leading_monomial(), monomial_lcm(f.leading_monomial(), g.leading_monomial())) < 0);
}

TEST_CASE("update_pairs criteria") {
  const PrimeField F(kSmallPrime);
  auto ring = make_ring({"x", "y"});
  auto elem = [&](std::string_view t) { return F4Element::from_poly(mod_poly(ring, F, t)); };

  SUBCASE("product criterion") {
    F4Basis basis;
    std::vector<CriticalPair> queue;
    update_pairs(queue, basis, elem("x"));
    update_pairs(queue, basis, elem("y"));
    CHECK(queue.empty());
    CHECK(basis.size() == 2);
  }
  SUBCASE("chain criterion on x^2, x*y, y^2") {
    F4Basis basis;
    std::vector<CriticalPair> queue;
    update_pairs(queue, basis, elem("x^2"));
    update_pairs(queue, basis, elem("x*y"));
    REQUIRE(queue.size() == 1);
    CHECK(queue[0] == CriticalPair{0, 1, mono({2, 1})});
    update_pairs(queue, basis, elem("y^2"));
    // (x^2, y^2) is coprime; (x*y, y^2) survives; the old (x^2, x*y) pair is
    // untouched because y^2 does not divide x^2*y.
    REQUIRE(queue.size() == 2);
    CHECK(queue[0] == CriticalPair{0, 1, mono({2, 1})});
    CHECK(queue[1] == CriticalPair{1, 2, mono({1, 2})});
  }
  SUBCASE("old pair pruned by a new middle element") {
    auto ring3 = make_ring({"x", "y", "z"});
    auto e3 = [&](std::string_view t) { return F4Element::from_poly(mod_poly(ring3, F, t)); };
    F4Basis basis;
    std::vector<CriticalPair> queue;
    update_pairs(queue, basis, e3("x*y"));
    update_pairs(queue, basis, e3("y*z"));
    REQUIRE(queue.size() == 1);  // lcm x*y*z
    update_pairs(queue, basis, e3("x*z"));
    // y*z*x is divisible by x*z and lcm(x*y, x*z) = lcm(y*z, x*z) = x*y*z equals
    // the old lcm, so the old pair stays; the two new pairs share that lcm and
    // the chain step keeps exactly one of them.
    CHECK(queue.size() == 2);
    for (const auto& p : queue) CHECK(p.lcm == mono({1, 1, 1}));
  }
  SUBCASE("duplicate leading monomial") {
    F4Basis basis;
    std::vector<CriticalPair> queue;
    update_pairs(queue, basis, elem("x + y"));
    CHECK_THROWS_AS(update_pairs(queue, basis, elem("x")), std::invalid_argument);
  }
  SUBCASE("redundant elements are flagged") {
    F4Basis basis;
    std::vector<CriticalPair> queue;
    update_pairs(queue, basis, elem("x^2 + y"));
    update_pairs(queue, basis, elem("x"));
    CHECK(basis[0].redundant);
    CHECK(basis.active_indices() == std::vector<std::uint32_t>{1});
  }
}

TEST_CASE("select_batch takes the lowest degree with deterministic ties") {
  std::vector<CriticalPair> queue{
      {0, 3, mono({2, 3})}, {1, 2, mono({3, 0})}, {0, 1, mono({0, 3})}, {2, 3, mono({1, 2})}};
  auto batch = select_batch(queue, 0);
  REQUIRE(batch.size() == 3);
  CHECK(batch[0].lcm == mono({0, 3}));
  CHECK(batch[1].lcm == mono({1, 2}));
  CHECK(batch[2].lcm == mono({3, 0}));
  CHECK(queue.size() == 1);

  std::vector<CriticalPair> q2{{0, 2, mono({1, 1})}, {0, 1, mono({1, 1})}, {1, 2, mono({2, 0})}};
  auto capped = select_batch(q2, 2);
  REQUIRE(capped.size() == 2);
  CHECK(capped[0] == CriticalPair{0, 1, mono({1, 1})});
  CHECK(capped[1] == CriticalPair{0, 2, mono({1, 1})});
  CHECK(q2.size() == 1);
  std::vector<CriticalPair> empty;
  CHECK(select_batch(empty, 0).empty());
}

TEST_CASE("symbolic preprocessing closes the monomial set") {
  const PrimeField F(kSmallPrime);
  auto ring = make_ring({"x", "y"});
  F4Basis basis;
  std::vector<CriticalPair> queue;
  update_pairs(queue, basis, F4Element::from_poly(mod_poly(ring, F, "x")));
  std::vector<F4Element> inputs{F4Element::from_poly(mod_poly(ring, F, "x^2 + y"))};
  std::vector<RowSpec> rows{{RowSpec::Source::Input, 0, Monomial(2)}};
  auto sym = symbolic_preprocess(rows, basis, inputs);
  CHECK(sym.monomials == std::vector<Monomial>{mono({2, 0}), mono({0, 1})});
  REQUIRE(sym.reducers.size() == 1);
  CHECK(sym.reducers[0] == ReducerChoice{0, mono({1, 0})});

  auto none = symbolic_preprocess({}, basis, inputs);
  CHECK(none.monomials.empty());
  CHECK(none.reducers.empty());
}

TEST_CASE("matrix_echelon small cases") {
  const PrimeField F(7);
  SUBCASE("already echelon") {
    std::vector<SparseRow> rows{sparse({0, 2}, {1, 3}), sparse({1, 2}, {1, 5})};
    auto r = matrix_echelon({}, rows, 3, F);
    CHECK(r.zero_flags == std::vector<std::uint8_t>{0, 0});
    CHECK(r.new_rows[0].cols == rows[0].cols);
    CHECK(r.new_rows[0].coeffs == rows[0].coeffs);
    CHECK(r.new_rows[1].cols == rows[1].cols);
    CHECK(r.new_rows[1].coeffs == rows[1].coeffs);
  }
  SUBCASE("duplicate rows") {
    std::vector<SparseRow> rows{sparse({0, 1}, {2, 3}), sparse({0, 1}, {2, 3})};
    auto r = matrix_echelon({}, rows, 2, F);
    CHECK(r.zero_flags == std::vector<std::uint8_t>{0, 1});
    REQUIRE(r.new_rows.size() == 1);
    CHECK(r.new_rows[0].coeffs == std::vector<std::uint32_t>{1, 5});
  }
  SUBCASE("row eliminated by a reducer") {
    std::vector<SparseRow> reducers{sparse({0, 2}, {1, 1})};
    std::vector<SparseRow> rows{sparse({0, 2}, {3, 3}), sparse({0, 1}, {1, 1})};
    auto r = matrix_echelon(reducers, rows, 3, F);
    CHECK(r.zero_flags == std::vector<std::uint8_t>{1, 0});
    REQUIRE(r.new_rows.size() == 1);
    CHECK(r.new_rows[0].cols == std::vector<std::uint32_t>{1, 2});
    CHECK(r.new_rows[0].coeffs == std::vector<std::uint32_t>{1, 6});
    CHECK(r.new_row_sources == std::vector<std::uint32_t>{1});
  }
}

TEST_CASE("matrix_echelon agrees with dense elimination") {
  const PrimeField F(kSmallPrime);
  SUBCASE("cyclic3 Macaulay matrix") {
    // Every monomial multiple of the cyclic3 generators up to degree 3.
    auto sys = cyclic_mod(3, F);
    std::vector<std::pair<std::size_t, Monomial>> specs;
    std::vector<Monomial> mults;
    for (unsigned a = 0; a <= 2; ++a)
      for (unsigned b = 0; a + b <= 2; ++b)
        for (unsigned c = 0; a + b + c <= 2; ++c) mults.push_back(mono({a, b, c}));
    std::vector<Monomial> columns;
    for (std::size_t g = 0; g < sys.size(); ++g) {
      for (const auto& m : mults) {
        if (sys[g].leading_monomial().degree() + m.degree() > 3) continue;
        specs.push_back({g, m});
        for (const auto& t : sys[g].terms()) columns.push_back(t.monomial * m);
      }
    }
    std::sort(columns.begin(), columns.end(), GrevlexGreater{});
    columns.erase(std::unique(columns.begin(), columns.end()), columns.end());
    std::vector<SparseRow> rows;
    for (const auto& [g, m] : specs) {
      SparseRow row;
      for (const auto& t : sys[g].terms()) {
        const auto col = std::lower_bound(columns.begin(), columns.end(), t.monomial * m, GrevlexGreater{}) - columns.begin();
        row.cols.push_back(static_cast<std::uint32_t>(col));
        row.coeffs.push_back(t.coeff);
      }
      rows.push_back(row);
    }
    auto fast = matrix_echelon({}, rows, columns.size(), F);
    auto dense = dense_eliminate({}, rows, columns.size(), kSmallPrime);
    CHECK(fast.zero_flags == dense.zero_flags);
    std::vector<std::size_t> pivots;
    for (const auto& r : fast.new_rows) pivots.push_back(r.cols.front());
    std::sort(pivots.begin(), pivots.end());
    CHECK(pivots == dense.new_pivots);
    CHECK(std::count(fast.zero_flags.begin(), fast.zero_flags.end(), 1) > 0);
  }
  SUBCASE("random sparse matrices with reducers, any thread count") {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 60; ++trial) {
      const std::size_t ncols = 5 + rng() % 30;
      std::vector<SparseRow> reducers;
      std::vector<bool> taken(ncols, false);
      for (std::size_t c = 0; c < ncols; ++c) {
        if (rng() % 3 != 0) continue;
        SparseRow r{{static_cast<std::uint32_t>(c)}, {1}};
        for (std::size_t k = c + 1; k < ncols; ++k) {
          if (rng() % 4 == 0) {
            r.cols.push_back(static_cast<std::uint32_t>(k));
            r.coeffs.push_back(static_cast<std::uint32_t>(1 + rng() % (kSmallPrime - 1)));
          }
        }
        taken[c] = true;
        reducers.push_back(r);
      }
      std::vector<SparseRow> rows;
      const std::size_t nrows = 1 + rng() % 20;
      for (std::size_t i = 0; i < nrows; ++i) {
        SparseRow r;
        if (i > 0 && rng() % 5 == 0) {
          // A combination of two earlier rows forces rank deficiency.
          const auto& a = rows[rng() % rows.size()];
          r = a;
        } else {
          for (std::size_t c = 0; c < ncols; ++c) {
            if (rng() % 3 == 0) {
              r.cols.push_back(static_cast<std::uint32_t>(c));
              r.coeffs.push_back(static_cast<std::uint32_t>(1 + rng() % (kSmallPrime - 1)));
            }
          }
        }
        rows.push_back(r);
      }
      auto dense = dense_eliminate(reducers, rows, ncols, kSmallPrime);
      auto single = matrix_echelon(reducers, rows, ncols, F, 1);
      auto multi = matrix_echelon(reducers, rows, ncols, F, 3);
      CHECK(single.zero_flags == dense.zero_flags);
      std::vector<std::size_t> pivots;
      for (const auto& r : single.new_rows) pivots.push_back(r.cols.front());
      std::sort(pivots.begin(), pivots.end());
      CHECK(pivots == dense.new_pivots);
      CHECK(multi.zero_flags == single.zero_flags);
      REQUIRE(multi.new_rows.size() == single.new_rows.size());
      for (std::size_t k = 0; k < single.new_rows.size(); ++k) {
        CHECK(multi.new_rows[k].cols == single.new_rows[k].cols);
        CHECK(multi.new_rows[k].coeffs == single.new_rows[k].coeffs);
        CHECK(single.new_rows[k].coeffs.front() == 1);
        for (auto c : single.new_rows[k].cols) CHECK_FALSE(taken[c]);
      }
    }
  }
}

TEST_CASE("gbasis_mod_p basic inputs") {
  const PrimeField F(kSmallPrime);
  auto ring = make_ring({"x", "y"});
  auto single = gbasis_mod_p({mod_poly(ring, F, "x")}, F);
  REQUIRE(single.basis.polys.size() == 1);
  CHECK(single.basis.polys[0] == mod_poly(ring, F, "x"));
  CHECK(single.basis.prime == kSmallPrime);

  auto unit = gbasis_mod_p({mod_poly(ring, F, "x^2 + y"), mod_poly(ring, F, "3")}, F);
  REQUIRE(unit.basis.polys.size() == 1);
  CHECK(unit.basis.polys[0] == mod_poly(ring, F, "1"));

  auto zeros = gbasis_mod_p({ModPoly(ring, F), mod_poly(ring, F, "2*y")}, F);
  REQUIRE(zeros.basis.polys.size() == 1);
  CHECK(zeros.basis.polys[0] == mod_poly(ring, F, "y"));

  CHECK(gbasis_mod_p({}, F).basis.polys.empty());

  // x*y - 1 together with x and y generates the unit ideal.
  auto inconsistent = gbasis_mod_p(mod_system(ring, F, "x*y - 1, x, y"), F);
  REQUIRE(inconsistent.basis.polys.size() == 1);
  CHECK(inconsistent.basis.polys[0].leading_monomial().is_one());
}

TEST_CASE("gbasis_mod_p matches the Buchberger oracle") {
  std::mt19937_64 rng(77);
  const std::uint32_t p = nth_prime_below_2_29(3);
  const PrimeField F(p);
  auto check = [&](const std::vector<QPoly>& system) {
    const RingPtr ring = system.front().ring();
    auto expected = from_oracle(oracle_basis_p(system, p), ring, F);
    for (std::size_t max_pairs : {std::size_t{0}, std::size_t{1}, std::size_t{3}}) {
      F4Options opt;
      opt.max_pairs = max_pairs;
      auto got = gbasis_mod_p(reduce_system(system, F), F, opt);
      CHECK(got.basis.polys == expected);
    }
  };
  for (std::size_t n : {3, 4, 5}) {
    auto ring = make_ring(indexed_variables(n));
    check(generate_cyclic(n, ring));
  }
  auto ring3 = make_ring({"x", "y", "z"});
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<QPoly> system;
    for (int k = 0; k < 3; ++k) system.push_back(random_dense(rng, ring3, 1 + rng() % 3, 10));
    system.erase(std::remove_if(system.begin(), system.end(), [](const QPoly& f) { return f.is_zero(); }),
                 system.end());
    if (system.empty()) continue;
    check(system);
  }
  auto ring2 = make_ring({"x", "y"});
  check(parse_system("x^3 - 2*x*y, x^2*y - 2*y^2 + x", ring2));
}

TEST_CASE("modular bases are reduced Groebner bases") {
  for (std::size_t n : {4, 5, 6}) {
    const PrimeField F(nth_prime_below_2_29(n));
    auto result = gbasis_mod_p(cyclic_mod(n, F), F);
    CHECK(is_reduced_groebner(result.basis.polys));
    CHECK(std::is_sorted(result.basis.polys.begin(), result.basis.polys.end(), [](const ModPoly& a, const ModPoly& b) {
      return grevlex_less(a.leading_monomial(), b.leading_monomial());
    }));
  }
}

TEST_CASE("record, replay and plain agree") {
  const PrimeField F1(nth_prime_below_2_29(0));
  auto sys1 = cyclic_mod(5, F1);
  F4Options rec_opt;
  rec_opt.mode = F4Mode::Record;
  auto recorded = gbasis_mod_p(sys1, F1, rec_opt);
  REQUIRE(recorded.learning.has_value());
  const LearningRecord& record = *recorded.learning;
  CHECK(record.skeleton == recorded.basis.leading_monomials());
  CHECK(record.zero_rows() == recorded.stats.zero_rows);

  F4Options rep_opt;
  rep_opt.mode = F4Mode::Replay;
  rep_opt.learning = &record;
  auto replayed = gbasis_mod_p(sys1, F1, rep_opt);
  CHECK(replayed.basis.polys == recorded.basis.polys);
  CHECK(replayed.stats.zero_rows == 0);
  CHECK(replayed.stats.rows_skipped == record.zero_rows());
  CHECK(replayed.stats.rows_eliminated + replayed.stats.rows_skipped == record.total_rows());

  for (std::size_t idx : {5, 17, 300}) {
    const PrimeField F(nth_prime_below_2_29(idx));
    auto sys = cyclic_mod(5, F);
    auto plain = gbasis_mod_p(sys, F);
    auto rep = gbasis_mod_p(sys, F, rep_opt);
    CHECK(rep.basis.polys == plain.basis.polys);
    F4Options r2;
    r2.mode = F4Mode::Record;
    auto again = gbasis_mod_p(sys, F, r2);
    // Same zero-row pattern at a different good prime.
    REQUIRE(again.learning.has_value());
    CHECK(again.learning->batches == record.batches);
  }
}

TEST_CASE("replay detects deviations") {
  const PrimeField F(nth_prime_below_2_29(0));
  auto ring = make_ring({"x", "y"});
  F4Options rec_opt;
  rec_opt.mode = F4Mode::Record;
  auto rec = gbasis_mod_p(mod_system(ring, F, "x^2 - y, x*y - 1"), F, rec_opt);
  F4Options rep_opt;
  rep_opt.mode = F4Mode::Replay;
  rep_opt.learning = &*rec.learning;
  // Same supports up to a vanished coefficient: the ideal becomes the unit ideal.
  CHECK_THROWS_AS(gbasis_mod_p(mod_system(ring, F, "x^2, x*y - 1"), F, rep_opt), UnluckyPrime);
  // A different ideal with the same leading-monomial skeleton follows the record.
  auto same_shape = gbasis_mod_p(mod_system(ring, F, "x^2 - y, x*y"), F, rep_opt);
  CHECK(same_shape.basis.polys == gbasis_mod_p(mod_system(ring, F, "x^2 - y, x*y"), F).basis.polys);
  CHECK_THROWS_AS(gbasis_mod_p(mod_system(ring, F, "x^2 - y"), F, rep_opt), UnluckyPrime);
  CHECK_THROWS_AS(gbasis_mod_p(mod_system(ring, F, "x^2 - y, x*y - 1"), F, F4Options{F4Mode::Replay}),
                  std::invalid_argument);
}

TEST_CASE("learning record serialization") {
  const PrimeField F(nth_prime_below_2_29(0));
  F4Options opt;
  opt.mode = F4Mode::Record;
  opt.system_hash = 0x1234abcdULL;
  auto rec = gbasis_mod_p(cyclic_mod(4, F), F, opt);
  auto bytes = serialize_learning(*rec.learning);
  CHECK(bytes.size() > 16);
  auto back = deserialize_learning(bytes);
  CHECK(back == *rec.learning);
  CHECK(back.system_hash == 0x1234abcdULL);

  auto truncated = bytes;
  truncated.resize(bytes.size() - 5);
  CHECK_THROWS(deserialize_learning(truncated));
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS(deserialize_learning(bad_magic));
  auto bad_version = bytes;
  bad_version[4] = 99;
  CHECK_THROWS(deserialize_learning(bad_version));
  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS(deserialize_learning(trailing));
}

TEST_CASE("interreduce") {
  const PrimeField F(kSmallPrime);
  auto ring = make_ring({"x", "y"});
  auto r = interreduce(mod_system(ring, F, "x + y, x"), 1);
  CHECK(r == mod_system(ring, F, "y, x"));

  auto basis = gbasis_mod_p(cyclic_mod(4, F), F).basis.polys;
  CHECK(interreduce(basis) == basis);
  std::mt19937_64 rng(1);
  auto shuffled = basis;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  CHECK(interreduce(shuffled, 2) == basis);
  // Adding an ideal member changes nothing after reduction.
  shuffled.push_back(poly_add(basis[0], poly_mul_term(basis[1], mono({1, 0, 0, 0}), 3)));
  CHECK(interreduce(shuffled) == basis);
}

TEST_CASE("result does not depend on the thread count") {
  const PrimeField F(nth_prime_below_2_29(2));
  auto sys = cyclic_mod(6, F);
  F4Options one;
  F4Options four;
  four.threads = 4;
  CHECK(gbasis_mod_p(sys, F, one).basis.polys == gbasis_mod_p(sys, F, four).basis.polys);
}
