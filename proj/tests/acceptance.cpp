// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.
//
//   gbmod_acceptance [--data DIR] [--freeze-baseline] [--only N]

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "cli_app.hpp"
#include "gbmod/orchestrator.hpp"
#include "support.hpp"

using namespace gbmod;
using namespace testing_support;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string data_dir = GBMOD_TEST_DATA_DIR;
bool freeze_baseline = false;

std::vector<QPoly> cyclic(std::size_t n) { return generate_cyclic(n, make_ring(indexed_variables(n))); }

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::vector<QPoly> random_system(std::mt19937_64& rng, const RingPtr& ring) {
  std::vector<QPoly> sys;
  std::uniform_int_distribution<unsigned> deg(1, 3);
  for (int k = 0; k < 3; ++k) sys.push_back(random_dense(rng, ring, deg(rng), 10));
  return sys;
}

std::vector<std::vector<QPoly>> random_systems() {
  std::mt19937_64 rng(20240611);
  auto ring = make_ring({"x", "y", "z"});
  std::vector<std::vector<QPoly>> out;
  for (int i = 0; i < 20; ++i) out.push_back(random_system(rng, ring));
  return out;
}

ModularBasis modular_basis(const std::vector<QPoly>& sys, std::uint32_t p, const F4Options& opt = {}) {
  const PrimeField F(p);
  return gbasis_mod_p(reduce_system(sys, F), F, opt).basis;
}

bool same_basis(const ModularBasis& a, const ModularBasis& b) {
  return a.prime == b.prime && a.polys == b.polys;
}

std::uint32_t random_prime(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::uint32_t> d(kPrimeLow, kPrimeHigh - 1);
  std::uint32_t p = d(rng) | 1u;
  while (!is_prime_u32(p)) p = p + 2 >= kPrimeHigh ? kPrimeLow + 1 : p + 2;
  return p;
}

// 1. Oracle equivalence.
Outcome criterion1() {
  std::ostringstream detail;
  bool ok = true;
  for (std::size_t n : {4, 5, 6}) {
    auto sys = cyclic(n);
    auto t0 = Clock::now();
    SessionResult r = run_session(sys, {});
    const double pipeline = seconds_since(t0);
    t0 = Clock::now();
    auto expected = oracle_basis_q(sys);
    const double oracle = seconds_since(t0);
    const bool eq = r.complete && to_oracle(r.basis) == expected;
    ok = ok && eq;
    char buf[160];
    std::snprintf(buf, sizeof buf, "cyclic%zu %s (%zu elements, pipeline %.2fs, oracle %.2fs); ", n,
                  eq ? "equal" : "DIFFERENT", r.basis.size(), pipeline, oracle);
    detail << buf;
  }
  std::size_t equal = 0;
  const auto systems = random_systems();
  for (const auto& sys : systems) {
    SessionResult r = run_session(sys, {});
    if (r.complete && to_oracle(r.basis) == oracle_basis_q(sys)) ++equal;
  }
  ok = ok && equal == systems.size();
  detail << equal << "/" << systems.size() << " random dense systems equal";
  return {ok, detail.str()};
}

// 2. Groebner property of every output basis, over Q and mod p.
Outcome criterion2() {
  std::vector<std::vector<QPoly>> systems = {cyclic(4), cyclic(5), cyclic(6)};
  for (auto& s : random_systems()) systems.push_back(std::move(s));
  std::size_t checked = 0;
  bool ok = true;
  for (const auto& sys : systems) {
    SessionResult r = run_session(sys, {});
    ok = ok && r.complete && is_reduced_groebner(r.basis);
    ++checked;
    for (std::size_t k : {0, 7}) {
      ModularBasis b = modular_basis(sys, nth_prime_below_2_29(k));
      ok = ok && is_reduced_groebner(b.polys);
      ++checked;
    }
  }
  return {ok, std::to_string(checked) + " bases checked (S-pairs reduce to 0, inter-reduced, monic)"};
}

// 3. Modular determinism on cyclic6.
Outcome criterion3() {
  auto sys = cyclic(6);
  const std::uint32_t p0 = nth_prime_below_2_29(0);
  F4Options rec_opt;
  rec_opt.mode = F4Mode::Record;
  const PrimeField F0(p0);
  F4Result recorded = gbasis_mod_p(reduce_system(sys, F0), F0, rec_opt);
  const LearningRecord& record = *recorded.learning;

  std::mt19937_64 rng(31337);
  bool ok = true;
  for (int i = 0; i < 10; ++i) {
    const std::uint32_t p = random_prime(rng);
    const PrimeField F(p);
    const auto input = reduce_system(sys, F);
    F4Options plain;
    F4Options rec;
    rec.mode = F4Mode::Record;
    F4Options rep;
    rep.mode = F4Mode::Replay;
    rep.learning = &record;
    F4Result a = gbasis_mod_p(input, F, plain);
    F4Result b = gbasis_mod_p(input, F, rec);
    F4Result c;
    try {
      c = gbasis_mod_p(input, F, rep);
    } catch (const UnluckyPrime& e) {
      return {false, "replay deviated at prime " + std::to_string(p) + ": " + e.what()};
    }
    ok = ok && same_basis(a.basis, b.basis) && same_basis(a.basis, c.basis);
    ok = ok && c.stats.zero_rows == 0 && c.stats.rows_skipped == record.zero_rows() &&
         c.stats.rows_eliminated + c.stats.rows_skipped == record.total_rows();
  }
  return {ok, "10 random primes identical across plain/record/replay; replay skipped " +
                  std::to_string(record.zero_rows()) + " recorded zero rows per prime with 0 eliminated to zero"};
}

// 4. Learning speedup on cyclic7 at a fixed prime.
Outcome criterion4() {
  auto sys = cyclic(7);
  const std::uint32_t p = nth_prime_below_2_29(0);
  const PrimeField F(p);
  const auto input = reduce_system(sys, F);
  F4Options rec;
  rec.mode = F4Mode::Record;
  double best_record = 1e30, best_replay = 1e30;
  std::optional<LearningRecord> record;
  for (int i = 0; i < 3; ++i) {
    auto t0 = Clock::now();
    F4Result r = gbasis_mod_p(input, F, rec);
    best_record = std::min(best_record, seconds_since(t0));
    record = std::move(r.learning);
  }
  F4Options rep;
  rep.mode = F4Mode::Replay;
  rep.learning = &*record;
  for (int i = 0; i < 3; ++i) {
    auto t0 = Clock::now();
    gbasis_mod_p(input, F, rep);
    best_replay = std::min(best_replay, seconds_since(t0));
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "record %.3fs, replay %.3fs (best of 3), ratio %.1fx", best_record, best_replay,
                best_record / best_replay);
  return {best_replay < best_record, buf};
}

std::vector<std::size_t> read_curve(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::size_t> out;
  for (std::size_t v; in >> v;) out.push_back(v);
  return out;
}

std::string curve_text(const std::vector<std::size_t>& curve) {
  std::string s;
  for (std::size_t i = 0; i < curve.size(); ++i) s += (i ? " " : "") + std::to_string(curve[i]);
  return s;
}

// Check of a rational basis against fresh primes never used by the session:
// its images there must equal the modular bases.
bool verified_by_fresh_primes(const std::vector<QPoly>& sys, const std::vector<QPoly>& basis) {
  for (std::size_t k : {5000, 5001, 5002}) {
    const std::uint32_t p = nth_prime_below_2_29(k);
    const PrimeField F(p);
    ModularBasis expected = modular_basis(sys, p);
    if (expected.polys.size() != basis.size()) return false;
    for (std::size_t i = 0; i < basis.size(); ++i) {
      auto img = reduce_mod(basis[i], F);
      if (!img || !(*img == expected.polys[i])) return false;
    }
  }
  return true;
}

// 5. Reconstruction clustering regression on cyclic7.
Outcome criterion5() {
  auto sys = cyclic(7);
  const auto t0 = Clock::now();
  SessionResult a = run_session(sys, {});
  const double secs = seconds_since(t0);
  SessionResult b = run_session(sys, {});
  if (!a.complete) return {false, "cyclic7 did not complete"};
  const std::string path = data_dir + "/cyclic7_frontier.txt";
  if (freeze_baseline) {
    if (!verified_by_fresh_primes(sys, a.basis)) return {false, "cyclic7 basis failed verification, not frozen"};
    std::ofstream out(path);
    out << curve_text(a.frontier_curve) << '\n';
  }
  const auto baseline = read_curve(path);
  if (baseline.empty()) return {false, "no baseline at " + path + " (run with --freeze-baseline)"};
  const bool ok = a.frontier_curve == baseline && b.frontier_curve == baseline;
  char buf[96];
  std::snprintf(buf, sizeof buf, "%zu elements after %zu primes in %.2fs; curve ", a.basis.size(), a.primes_merged,
                secs);
  return {ok, buf + curve_text(a.frontier_curve) + (ok ? " matches baseline" : " != baseline " + curve_text(baseline))};
}

// 6. A synthetic image with a perturbed skeleton is discarded.
Outcome criterion6() {
  auto sys = cyclic(6);
  const SessionResult clean = run_session(sys, {});
  SessionConfig config;
  std::size_t perturbed = 0;
  config.image_hook = [&](std::size_t index, ModularBasis& image) {
    if (index != 2 || image.polys.size() < 2) return;
    // Replace the last element by its product with the first variable.
    auto& last = image.polys.back();
    last = poly_mul_term(last, Monomial::variable(last.ring()->num_variables(), 0), 1);
    ++perturbed;
  };
  SessionResult r = run_session(sys, config);
  const bool ok = perturbed == 1 && r.complete && r.unlucky_primes == 1 && r.basis == clean.basis;
  return {ok, "perturbed images " + std::to_string(perturbed) + ", discarded " + std::to_string(r.unlucky_primes) +
                  ", basis " + (r.basis == clean.basis ? "unchanged" : "CHANGED")};
}

// 7. CRT and rational reconstruction round trips.
Outcome criterion7() {
  std::mt19937_64 rng(777);
  std::size_t crt_fail = 0, rr_fail = 0;
  for (int t = 0; t < 10000; ++t) {
    ResidueAccumulator acc;
    std::vector<std::uint32_t> images;
    const std::size_t start = rng() % 2000, count = 1 + rng() % 6;
    for (std::size_t k = 0; k < count; ++k) {
      const std::uint32_t p = nth_prime_below_2_29(start + k);
      images.push_back(static_cast<std::uint32_t>(rng() % p));
      acc.merge(images.back(), p);
    }
    for (std::size_t k = 0; k < count; ++k) {
      if (mpz_class(acc.value() % acc.primes()[k]) != images[k]) ++crt_fail;
    }
  }
  gmp_randclass gr(gmp_randinit_default);
  gr.seed(777);
  mpz_class M = 1;
  for (int k = 0; k < 8; ++k) M *= nth_prime_below_2_29(3000 + k);
  for (int t = 0; t < 10000; ++t) {
    mpz_class a = gr.get_z_bits(1 + rng() % 100);
    mpz_class b = gr.get_z_bits(1 + rng() % 100) + 1;
    if (rng() & 1) a = -a;
    mpq_class q(a, b);
    q.canonicalize();
    mpz_class inv;
    if (mpz_invert(inv.get_mpz_t(), q.get_den_mpz_t(), M.get_mpz_t()) == 0) continue;
    mpz_class r = q.get_num() * inv % M;
    if (r < 0) r += M;
    auto back = rational_reconstruct(r, M);
    if (!back || *back != q) ++rr_fail;
  }
  return {crt_fail == 0 && rr_fail == 0,
          "10^4 CRT and 10^4 rational round trips, failures " + std::to_string(crt_fail) + "/" + std::to_string(rr_fail)};
}

int run_cli(std::vector<std::string> args, std::string& out) {
  args.insert(args.begin(), "gbmod");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream o, e;
  const int code = gbmod::cli::main(static_cast<int>(argv.size()), argv.data(), o, e);
  out = o.str();
  return code;
}

// 8. Checkpoint staging through the command line.
Outcome criterion8() {
  std::string full, part, resumed;
  if (run_cli({"--family", "cyclic", "--n", "6"}, full) != gbmod::cli::kComplete) return {false, "unstaged run failed"};
  auto ring = make_ring(indexed_variables(6));
  const std::size_t size = parse_system(full, ring).size();
  const std::size_t k = size / 2;
  const std::string ck = (std::filesystem::temp_directory_path() / "gbmod_acceptance_stage.ckpt").string();
  const int c1 = run_cli({"--family", "cyclic", "--n", "6", "--reinject-stop", std::to_string(k), "--archive", ck}, part);
  const int c2 = run_cli({"--family", "cyclic", "--n", "6", "--resume", ck}, resumed);
  std::remove(ck.c_str());
  const std::size_t staged = parse_system(part, ring).size();
  const bool ok = c1 == gbmod::cli::kPartial && staged == k && c2 == gbmod::cli::kComplete && resumed == full;
  return {ok, "basis size " + std::to_string(size) + ", stage 1 archived " + std::to_string(staged) +
                  " (exit " + std::to_string(c1) + "), resumed output " + (resumed == full ? "identical" : "DIFFERENT")};
}

// 9. Re-injection invariance on cyclic6.
Outcome criterion9() {
  auto sys = cyclic(6);
  SessionResult none = run_session(sys, {});
  SessionConfig thr;
  thr.reinject = ReinjectPolicy::threshold(0.05, 0.05);
  SessionResult a = run_session(sys, thr);
  SessionConfig forced;
  forced.reinject = ReinjectPolicy::threshold(0, 0);
  SessionResult b = run_session(sys, forced);
  const bool ok = none.complete && a.complete && b.complete && a.basis == none.basis && b.basis == none.basis &&
                  b.reinjections >= 1;
  return {ok, "threshold(0.05,0.05) re-injected " + std::to_string(a.reinjections) + "x, forced re-injected " +
                  std::to_string(b.reinjections) + "x (phase " + std::to_string(b.phase) + "), bases " +
                  (a.basis == none.basis && b.basis == none.basis ? "identical" : "DIFFERENT")};
}

// 10. Schedule and thread-budget independence on cyclic6.
Outcome criterion10() {
  auto sys = cyclic(6);
  SessionResult ref = run_session(sys, {});
  bool ok = ref.complete;
  std::ostringstream detail;
  for (const char* sched : {"1", "2", "4,10,2,20,1"}) {
    for (unsigned T : {1u, 4u}) {
      SessionConfig c;
      c.schedule = parse_schedule(std::string_view(sched));
      c.threads = T;
      SessionResult r = run_session(sys, c);
      const bool eq = r.complete && r.basis == ref.basis && r.peak_threads <= T;
      ok = ok && eq;
      detail << "(" << sched << ")/T=" << T << " peak " << r.peak_threads << (eq ? " ok" : " FAIL") << "; ";
    }
  }
  return {ok, detail.str()};
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--freeze-baseline") {
      freeze_baseline = true;
    } else if (a == "--data" && i + 1 < argc) {
      data_dir = argv[++i];
    } else if (a == "--only" && i + 1 < argc) {
      only = std::stoi(argv[++i]);
    } else {
      std::cerr << "usage: gbmod_acceptance [--data DIR] [--freeze-baseline] [--only N]\n";
      return 2;
    }
  }
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"oracle equivalence", criterion1},     {"groebner property", criterion2},
      {"modular determinism", criterion3},    {"learning speedup", criterion4},
      {"reconstruction clustering", criterion5}, {"unlucky prime handling", criterion6},
      {"crt/reconstruction round trips", criterion7}, {"checkpoint staging", criterion8},
      {"re-injection invariance", criterion9}, {"schedule independence", criterion10},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only && static_cast<int>(i + 1) != only) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s criterion %zu (%s): %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
