#include "cli_app.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "gbmod/orchestrator.hpp"

namespace gbmod::cli {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_names(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',' || c == ' ' || c == '[' || c == ']') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

ReinjectPolicy parse_reinject(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) {
    // A single negative number is the early-stop form.
    long long n = 0;
    try {
      n = std::stoll(text);
    } catch (const std::exception&) {
      throw UsageError("--reinject expects ratio,speed_ratio or -n");
    }
    if (n >= 0) throw UsageError("--reinject expects ratio,speed_ratio or -n");
    return ReinjectPolicy::early_stop(static_cast<std::size_t>(-n));
  }
  try {
    std::size_t used1 = 0, used2 = 0;
    const std::string a = text.substr(0, comma), b = text.substr(comma + 1);
    const double r = std::stod(a, &used1);
    const double s = std::stod(b, &used2);
    if (used1 != a.size() || used2 != b.size()) throw std::invalid_argument("trailing characters");
    return ReinjectPolicy::threshold(r, s);
  } catch (const std::exception& e) {
    throw UsageError(std::string("--reinject: ") + e.what());
  }
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read input file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Groebner bases over Q by multi-modular F4 with learning"};
  app.name("gbmod");

  unsigned threads = 1;
  std::string simult = "1";
  std::string reinject;
  std::size_t reinject_stop = 0;
  std::size_t max_pairs = 0;
  double epsilon = 1e-7;
  std::string archive, resume, family, input, vars, output, save_learning;
  std::size_t n = 0;
  std::size_t max_primes = 0;
  bool verbose = false;

  app.add_option("--threads", threads, "Global thread budget")->check(CLI::PositiveNumber);
  app.add_option("--simult-primes", simult, "Simultaneous primes: n or n1,p1,n2,p2,n3");
  auto* opt_reinject = app.add_option("--reinject", reinject, "Re-inject at ratio,speed_ratio (or -n to stop early)");
  auto* opt_stop =
      app.add_option("--reinject-stop", reinject_stop, "Stop after the first n basis elements are confirmed")
          ->check(CLI::PositiveNumber);
  opt_reinject->excludes(opt_stop);
  app.add_option("--max-pairs", max_pairs, "Cap on critical pairs per F4 batch (0 = no cap)");
  app.add_option("--proba-epsilon", epsilon, "Accepted probability of a wrong answer")
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--archive", archive, "Write the reconstructed generators to this checkpoint");
  app.add_option("--resume", resume, "Re-inject the generators of this checkpoint");
  auto* opt_family = app.add_option("--family", family, "Builtin benchmark family")->check(CLI::IsMember({"cyclic"}));
  auto* opt_n = app.add_option("--n", n, "Size of the benchmark family instance");
  auto* opt_input = app.add_option("--input", input, "File with comma separated polynomials");
  opt_family->excludes(opt_input);
  opt_family->needs(opt_n);
  opt_n->needs(opt_family);
  app.add_option("--vars", vars, "Variables, highest first (default: inferred)");
  app.add_option("--output", output, "Write the basis here instead of standard output");
  app.add_option("--save-learning", save_learning, "Write the learning record of the last recording run");
  app.add_option("--max-primes", max_primes, "Give up after this many primes (0 = no limit)");
  app.add_flag("-v,--verbose", verbose, "Progress log on standard error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kComplete : kUsage;
  }

  SessionConfig config;
  std::vector<QPoly> system;
  try {
    if (family.empty() && input.empty()) throw UsageError("one of --family or --input is required");
    if (!(epsilon > 0 && epsilon < 1)) throw UsageError("--proba-epsilon must lie in (0, 1)");
    try {
      config.schedule = parse_schedule(std::string_view(simult));
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("--simult-primes: ") + e.what());
    }
    if (!reinject.empty()) config.reinject = parse_reinject(reinject);
    if (reinject_stop) config.reinject = ReinjectPolicy::early_stop(reinject_stop);
    config.threads = threads;
    config.max_pairs = max_pairs;
    config.proba_epsilon = epsilon;
    config.max_primes = max_primes;
    if (!archive.empty()) config.archive_path = archive;
    if (!resume.empty()) config.resume_path = resume;
    if (verbose) config.log = &err;

    if (!family.empty()) {
      if (n < 2) throw UsageError("--n must be at least 2");
      auto names = vars.empty() ? indexed_variables(n) : split_names(vars);
      if (names.size() != n) throw UsageError("--vars must list exactly n variables");
      system = generate_cyclic(n, make_ring(names));
    } else {
      const std::string text = slurp(input);
      auto names = vars.empty() ? infer_variables(text) : split_names(vars);
      system = parse_system(text, make_ring(names));
    }
    if (system.empty()) throw UsageError("the input system is empty");
  } catch (const UsageError& e) {
    err << "gbmod: " << e.what() << '\n';
    return kUsage;
  } catch (const ParseError& e) {
    err << "gbmod: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    err << "gbmod: " << e.what() << '\n';
    return kUsage;
  }

  try {
    SessionResult result = run_session(system, config);
    const std::string text = format_basis(result.basis);
    if (output.empty()) {
      out << text;
    } else {
      std::ofstream file(output);
      if (!file) throw std::runtime_error("cannot write '" + output + "'");
      file << text;
    }
    if (!save_learning.empty() && result.learning) {
      const auto bytes = serialize_learning(*result.learning);
      std::ofstream file(save_learning, std::ios::binary);
      if (!file) throw std::runtime_error("cannot write '" + save_learning + "'");
      file.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    }
    err << (result.complete ? "complete" : "partial") << " elements=" << result.basis.size()
        << " basis_size=" << result.basis_size << " primes=" << result.primes_merged
        << " unlucky=" << result.unlucky_primes << " seconds=" << result.seconds << '\n';
    return result.complete ? kComplete : kPartial;
  } catch (const std::exception& e) {
    err << "gbmod: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace gbmod::cli
