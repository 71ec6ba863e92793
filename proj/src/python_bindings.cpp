#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gbmod/orchestrator.hpp"

namespace py = pybind11;
using namespace gbmod;

namespace {

RingPtr ring_for(const std::vector<std::string>& polys, std::optional<std::vector<std::string>> variables) {
  if (variables) return make_ring(*variables);
  std::string all;
  for (const auto& p : polys) all += p + ",";
  return make_ring(infer_variables(all));
}

std::vector<QPoly> parse_all(const std::vector<std::string>& polys, const RingPtr& ring) {
  std::vector<QPoly> out;
  for (const auto& p : polys) out.push_back(parse_polynomial(p, ring));
  return out;
}

mpz_class to_mpz(const py::int_& v) { return mpz_class(std::string(py::str(v)), 10); }

py::int_ to_py(const mpz_class& v) { return py::int_(py::str(v.get_str())); }

py::dict session(const std::vector<std::string>& polys, std::optional<std::vector<std::string>> variables,
                 unsigned threads, const std::string& simult_primes, std::optional<std::pair<double, double>> reinject,
                 std::optional<std::size_t> reinject_stop, std::size_t max_pairs, double proba_epsilon,
                 std::optional<std::string> archive, std::optional<std::string> resume, std::size_t max_primes) {
  if (reinject && reinject_stop) throw std::invalid_argument("reinject and reinject_stop are mutually exclusive");
  auto ring = ring_for(polys, std::move(variables));
  auto system = parse_all(polys, ring);
  SessionConfig config;
  config.threads = threads;
  config.schedule = parse_schedule(std::string_view(simult_primes));
  if (reinject) config.reinject = ReinjectPolicy::threshold(reinject->first, reinject->second);
  if (reinject_stop) config.reinject = ReinjectPolicy::early_stop(*reinject_stop);
  config.max_pairs = max_pairs;
  config.proba_epsilon = proba_epsilon;
  config.archive_path = std::move(archive);
  config.resume_path = std::move(resume);
  config.max_primes = max_primes;

  SessionResult r;
  {
    py::gil_scoped_release release;
    r = run_session(system, config);
  }
  std::vector<std::string> basis;
  for (const auto& f : r.basis) basis.push_back(format_polynomial(primitive_integer_form(f)));
  py::dict out;
  out["basis"] = basis;
  out["variables"] = ring->variables;
  out["complete"] = r.complete;
  out["basis_size"] = r.basis_size;
  out["primes_merged"] = r.primes_merged;
  out["primes_drawn"] = r.primes_drawn;
  out["unlucky_primes"] = r.unlucky_primes;
  out["reinjections"] = r.reinjections;
  out["frontier_curve"] = r.frontier_curve;
  out["peak_threads"] = r.peak_threads;
  out["phase"] = r.phase;
  out["seconds"] = r.seconds;
  return out;
}

std::vector<std::string> basis_mod_p(const std::vector<std::string>& polys,
                                     std::optional<std::vector<std::string>> variables, std::uint32_t prime,
                                     std::size_t max_pairs, unsigned threads) {
  if (!is_prime_u32(prime)) throw std::invalid_argument("modulus must be prime");
  auto ring = ring_for(polys, std::move(variables));
  const PrimeField F(prime);
  std::vector<ModPoly> system;
  for (const auto& q : parse_all(polys, ring)) {
    auto r = reduce_mod(q, F);
    if (!r) throw std::invalid_argument("a coefficient denominator vanishes modulo the prime");
    system.push_back(std::move(*r));
  }
  F4Options opt;
  opt.max_pairs = max_pairs;
  opt.threads = threads;
  F4Result res;
  {
    py::gil_scoped_release release;
    res = gbasis_mod_p(system, F, opt);
  }
  std::vector<std::string> out;
  for (const auto& f : res.basis.polys) out.push_back(format_polynomial(f));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Groebner bases over Q by multi-modular F4";

  m.def("groebner_basis", &session, py::arg("polys"), py::arg("variables") = py::none(), py::arg("threads") = 1,
        py::arg("simult_primes") = "1", py::arg("reinject") = py::none(), py::arg("reinject_stop") = py::none(),
        py::arg("max_pairs") = 0, py::arg("proba_epsilon") = 1e-7, py::arg("archive") = py::none(),
        py::arg("resume") = py::none(), py::arg("max_primes") = 0,
        "Reduced grevlex basis over Q; returns a dict with the basis (primitive integer form) and run statistics.");

  m.def("groebner_basis_mod_p", &basis_mod_p, py::arg("polys"), py::arg("variables") = py::none(),
        py::arg("prime") = nth_prime_below_2_29(0), py::arg("max_pairs") = 0, py::arg("threads") = 1,
        "Reduced monic basis modulo a prime, coefficients in [0, p).");

  m.def(
      "cyclic",
      [](std::size_t n, std::size_t first) {
        auto ring = make_ring(indexed_variables(n, first));
        std::vector<std::string> out;
        for (const auto& f : generate_cyclic(n, ring)) out.push_back(format_polynomial(f));
        return py::make_tuple(out, ring->variables);
      },
      py::arg("n"), py::arg("first") = 0, "The cyclic-n system and its variables.");

  m.def("nth_prime", &nth_prime_below_2_29, py::arg("index"), "index-th prime below 2^29, counting down.");

  m.def(
      "crt_pair",
      [](const py::int_& r1, const py::int_& m1, std::uint32_t r2, std::uint32_t p2) {
        return to_py(crt_pair(to_mpz(r1), to_mpz(m1), r2, p2));
      },
      py::arg("r1"), py::arg("m1"), py::arg("r2"), py::arg("p2"));

  m.def(
      "rational_reconstruct",
      [](const py::int_& r, const py::int_& mod) -> py::object {
        auto q = rational_reconstruct(to_mpz(r), to_mpz(mod));
        if (!q) return py::none();
        return py::make_tuple(to_py(q->get_num()), to_py(q->get_den()));
      },
      py::arg("r"), py::arg("m"), "(numerator, denominator) or None.");

  m.def(
      "parse_schedule",
      [](const std::string& text) {
        std::vector<std::pair<std::size_t, std::optional<std::size_t>>> out;
        for (const auto& s : parse_schedule(std::string_view(text)).segments) {
          std::optional<std::size_t> until;
          if (s.until != std::numeric_limits<std::size_t>::max()) until = s.until;
          out.emplace_back(s.count, until);
        }
        return out;
      },
      py::arg("text"), "Segments as (count, merged-prime breakpoint or None).");

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<CheckpointError>(m, "CheckpointError", PyExc_RuntimeError);
}
