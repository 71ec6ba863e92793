#include "gbmod/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <deque>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace gbmod {

std::size_t Schedule::count_at(std::size_t merged) const {
  for (const auto& s : segments) {
    if (merged < s.until) return s.count;
  }
  return segments.back().count;
}

Schedule Schedule::constant(std::size_t count) {
  if (count == 0) throw std::invalid_argument("simultaneous prime count must be positive");
  Schedule s;
  s.segments = {{count, std::numeric_limits<std::size_t>::max()}};
  return s;
}

Schedule parse_schedule(std::span<const long long> args) {
  if (args.size() != 1 && args.size() != 5) {
    throw std::invalid_argument("simultaneous primes take 1 or 5 arguments (n or n1,p1,n2,p2,n3)");
  }
  for (std::size_t i = 0; i < args.size(); i += 2) {
    if (args[i] < 1) throw std::invalid_argument("simultaneous prime counts must be at least 1");
  }
  if (args.size() == 1) return Schedule::constant(static_cast<std::size_t>(args[0]));
  if (args[1] < 1 || args[3] <= args[1]) {
    throw std::invalid_argument("schedule breakpoints must be positive and strictly increasing");
  }
  Schedule s;
  s.segments = {{static_cast<std::size_t>(args[0]), static_cast<std::size_t>(args[1])},
                {static_cast<std::size_t>(args[2]), static_cast<std::size_t>(args[3])},
                {static_cast<std::size_t>(args[4]), std::numeric_limits<std::size_t>::max()}};
  return s;
}

Schedule parse_schedule(std::string_view text) {
  std::vector<long long> values;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(',', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view field = text.substr(pos, end - pos);
    while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
    while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
    long long v = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
      throw std::invalid_argument("bad schedule entry '" + std::string(field) + "'");
    }
    values.push_back(v);
    pos = end + 1;
  }
  return parse_schedule(std::span<const long long>(values));
}

unsigned threads_per_worker(unsigned budget, std::size_t workers) {
  if (workers == 0) return std::max(1u, budget);
  return std::max<unsigned>(1, static_cast<unsigned>(budget / workers));
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

class ThreadBudget {
 public:
  explicit ThreadBudget(unsigned total) : total_(total) {}

  unsigned available() const { return total_ - in_use_.load(); }
  unsigned peak() const { return peak_.load(); }

  void acquire(unsigned n) {
    const unsigned now = in_use_.fetch_add(n) + n;
    if (now > total_) {
      in_use_.fetch_sub(n);
      throw std::logic_error("thread budget exceeded");
    }
    unsigned p = peak_.load();
    while (now > p && !peak_.compare_exchange_weak(p, now)) {
    }
  }
  void release(unsigned n) { in_use_.fetch_sub(n); }

 private:
  unsigned total_;
  std::atomic<unsigned> in_use_{0};
  std::atomic<unsigned> peak_{0};
};

struct Job {
  std::size_t id = 0;
  std::size_t generation = 0;
  PrimeStream::Draw draw{};
  std::shared_ptr<const std::vector<QPoly>> input;
  std::shared_ptr<const LearningRecord> learning;
  unsigned threads = 1;
  std::size_t max_pairs = 0;
  std::uint64_t hash = 0;
};

struct Outcome {
  std::size_t job_id = 0;
  std::size_t generation = 0;
  std::size_t prime_index = 0;
  std::uint32_t prime = 0;
  unsigned threads = 1;
  std::optional<ModularBasis> image;
  std::optional<LearningRecord> learning;
  bool replayed = false;
  bool replay_failed = false;
  bool bad_reduction = false;
  std::string error;
  double seconds = 0;
};

Outcome run_job(const Job& job) {
  Outcome out;
  out.job_id = job.id;
  out.generation = job.generation;
  out.prime_index = job.draw.index;
  out.prime = job.draw.prime;
  out.threads = job.threads;
  const auto start = Clock::now();
  try {
    const PrimeField F(job.draw.prime);
    std::vector<ModPoly> system;
    system.reserve(job.input->size());
    for (const auto& q : *job.input) {
      auto r = reduce_mod(q, F);
      if (!r) {
        out.bad_reduction = true;
        out.seconds = seconds_since(start);
        return out;
      }
      system.push_back(std::move(*r));
    }
    F4Options opt;
    opt.max_pairs = job.max_pairs;
    opt.threads = job.threads;
    opt.system_hash = job.hash;
    if (job.learning) {
      opt.mode = F4Mode::Replay;
      opt.learning = job.learning.get();
      try {
        out.image = gbasis_mod_p(system, F, opt).basis;
        out.replayed = true;
      } catch (const UnluckyPrime&) {
        out.replay_failed = true;
      }
    }
    if (!out.image) {
      opt.mode = F4Mode::Record;
      opt.learning = nullptr;
      F4Result r = gbasis_mod_p(system, F, opt);
      out.image = std::move(r.basis);
      out.learning = std::move(r.learning);
    }
  } catch (const std::exception& e) {
    out.error = e.what();
    out.image.reset();
  }
  out.seconds = seconds_since(start);
  return out;
}

std::size_t confirmed_prefix(const ReconstructionState& state, std::size_t required) {
  std::size_t n = 0;
  while (n < state.frontier && state.confirmations[n] >= required) ++n;
  return n;
}

struct Deviant {
  std::vector<Monomial> skeleton;
  ModularBasis image;
  std::optional<LearningRecord> learning;
  std::size_t prime_index;
};

class Session {
 public:
  Session(const std::vector<QPoly>& system, const SessionConfig& config)
      : system_(system),
        config_(config),
        ring_(system.front().ring()),
        hash_(system_hash(system)),
        required_(required_confirmations(config.proba_epsilon)),
        budget_(config.threads),
        rec_(std::make_unique<Reconstructor>(ring_, required_)) {}

  SessionResult run();

 private:
  enum class Stop { None, Complete, Partial, Exhausted };

  bool limit_reached() const {
    return config_.max_primes != 0 && stream_->drawn() - first_index_ >= config_.max_primes;
  }
  Job make_job(unsigned threads, bool record);
  void launch(Job job);
  Outcome wait_one();
  void handle(Outcome& o, bool recording);
  void on_deviant(std::vector<Monomial> skeleton, Outcome& o);
  void restart_from(const std::vector<Monomial>& skeleton);
  void check_stop();
  void reinject();
  void log_outcome(const Outcome& o, const char* status);
  void finish_recording();

  const std::vector<QPoly>& system_;
  const SessionConfig& config_;
  RingPtr ring_;
  std::uint64_t hash_;
  std::size_t required_;
  ThreadBudget budget_;
  std::unique_ptr<Reconstructor> rec_;
  std::unique_ptr<PrimeStream> stream_;
  std::size_t first_index_ = 0;
  std::shared_ptr<const std::vector<QPoly>> input_;
  std::shared_ptr<const LearningRecord> learning_;
  std::size_t generation_ = 0;
  std::size_t next_job_ = 0;

  std::map<std::size_t, std::thread> running_;
  std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<Outcome> done_;

  std::vector<Deviant> deviants_;
  std::size_t failed_recordings_ = 0;
  Stop stop_ = Stop::None;
  std::size_t partial_size_ = 0;
  Clock::time_point start_ = Clock::now();
  SessionResult result_;
};

Job Session::make_job(unsigned threads, bool record) {
  Job job;
  job.id = next_job_++;
  job.generation = generation_;
  job.draw = stream_->draw();
  job.input = input_;
  if (!record) job.learning = learning_;
  job.threads = threads;
  job.max_pairs = config_.max_pairs;
  job.hash = hash_;
  return job;
}

void Session::launch(Job job) {
  budget_.acquire(job.threads);
  const std::size_t id = job.id;
  running_.emplace(id, std::thread([this, job = std::move(job)] {
                     Outcome o = run_job(job);
                     {
                       std::lock_guard lock(mutex_);
                       done_.push_back(std::move(o));
                     }
                     ready_.notify_one();
                   }));
}

Outcome Session::wait_one() {
  std::unique_lock lock(mutex_);
  ready_.wait(lock, [this] { return !done_.empty(); });
  Outcome o = std::move(done_.front());
  done_.pop_front();
  lock.unlock();
  auto it = running_.find(o.job_id);
  it->second.join();
  running_.erase(it);
  budget_.release(o.threads);
  return o;
}

void Session::log_outcome(const Outcome& o, const char* status) {
  if (!config_.log) return;
  const char* mode = o.replayed ? "replay" : o.replay_failed ? "replay-then-record" : "record";
  const auto& st = rec_->state();
  char line[384];
  std::snprintf(line, sizeof line,
                "prime_index=%zu prime=%u phase=%d mode=%s status=%s frontier=%zu size=%zu merged=%zu "
                "seconds=%.4f wall=%.3f",
                o.prime_index, o.prime, st.phase, mode, status, st.frontier, rec_->size(),
                result_.primes_merged, o.seconds, seconds_since(start_));
  *config_.log << line << '\n';
  if (!o.error.empty()) *config_.log << "error=\"" << o.error << "\"\n";
  config_.log->flush();
}

void Session::finish_recording() {
  auto& st = rec_->state();
  if (st.phase == 1) {
    st.needs_recording = false;
  } else {
    advance_phase(st, PhaseEvent::FirstPrimeDone);
  }
}

void Session::handle(Outcome& o, bool recording) {
  if (!o.error.empty()) {
    ++result_.abandoned_primes;
    log_outcome(o, "abandoned");
    if (recording) ++failed_recordings_;
    return;
  }
  if (o.bad_reduction) {
    ++result_.skipped_primes;
    log_outcome(o, "skipped");
    return;
  }
  if (config_.image_hook) config_.image_hook(o.prime_index, *o.image);
  auto skeleton = o.image->leading_monomials();
  if (rec_->initialized() && skeleton != rec_->skeleton()) {
    on_deviant(std::move(skeleton), o);
    if (recording) ++failed_recordings_;
    return;
  }
  SubmitResult s = rec_->submit(*o.image);
  if (!s.accepted) {
    on_deviant(std::move(skeleton), o);
    if (recording) ++failed_recordings_;
    return;
  }
  ++result_.primes_merged;
  result_.frontier_curve.push_back(s.frontier_after);
  auto& st = rec_->state();
  if (recording) {
    failed_recordings_ = 0;
    learning_ = std::make_shared<const LearningRecord>(std::move(*o.learning));
    ++generation_;
    finish_recording();
    st.first_run_seconds = o.seconds;
    if (config_.log) {
      *config_.log << "recorded batches=" << learning_->batches.size() << " rows=" << learning_->total_rows()
                   << " zero_rows=" << learning_->zero_rows() << " basis_size=" << o.image->polys.size()
                   << " basis_terms=" << o.image->term_count()
                   << " memory_estimate_bytes=" << o.image->term_count() * (sizeof(Monomial) + 8) << '\n';
    }
  } else if (o.replayed && o.generation == generation_) {
    st.record_learned_run(o.seconds);
  }
  log_outcome(o, "merged");
  check_stop();
}

void Session::on_deviant(std::vector<Monomial> skeleton, Outcome& o) {
  ++result_.unlucky_primes;
  log_outcome(o, "unlucky");
  deviants_.push_back({std::move(skeleton), std::move(*o.image), std::move(o.learning), o.prime_index});
  const auto& key = deviants_.back().skeleton;
  const auto agreeing =
      std::count_if(deviants_.begin(), deviants_.end(), [&](const Deviant& d) { return d.skeleton == key; });
  if (agreeing >= 2) restart_from(std::vector<Monomial>(key));
}

void Session::restart_from(const std::vector<Monomial>& skeleton) {
  ++result_.restarts;
  if (config_.log) *config_.log << "restart reason=agreeing_deviant_primes size=" << skeleton.size() << '\n';
  std::vector<Deviant> adopted;
  std::vector<Deviant> rest;
  for (auto& d : deviants_) (d.skeleton == skeleton ? adopted : rest).push_back(std::move(d));
  deviants_ = std::move(rest);
  std::sort(adopted.begin(), adopted.end(),
            [](const Deviant& a, const Deviant& b) { return a.prime_index < b.prime_index; });

  const int phase = rec_->state().phase;
  rec_ = std::make_unique<Reconstructor>(ring_, required_);
  auto& st = rec_->state();
  st.phase = phase;
  st.needs_recording = true;
  learning_.reset();
  for (auto& d : adopted) {
    rec_->submit(d.image);
    if (!learning_ && d.learning) learning_ = std::make_shared<const LearningRecord>(std::move(*d.learning));
  }
  ++generation_;
  if (learning_) {
    if (st.phase == 0) {
      advance_phase(st, PhaseEvent::FirstPrimeDone);
    } else {
      st.needs_recording = false;
    }
  }
  for (std::size_t i = 0; i < adopted.size(); ++i) result_.frontier_curve.push_back(st.frontier);
  result_.primes_merged += adopted.size();
  result_.unlucky_primes -= std::min(result_.unlucky_primes, adopted.size());
  check_stop();
}

void Session::reinject() {
  auto& st = rec_->state();
  advance_phase(st, PhaseEvent::ReinjectionTriggered);
  ++result_.reinjections;
  auto extended = std::make_shared<std::vector<QPoly>>(system_);
  for (const auto& q : st.reconstructed) extended->push_back(primitive_integer_form(q));
  input_ = std::move(extended);
  if (config_.log) {
    *config_.log << "reinject phase=" << st.phase << " generators=" << input_->size()
                 << " reinjected=" << st.reinjected << '\n';
  }
}

void Session::check_stop() {
  if (stop_ != Stop::None) return;
  const auto& policy = config_.reinject;
  if (policy.mode == ReinjectPolicy::Mode::EarlyStop && rec_->initialized() && policy.early_stop_n < rec_->size() &&
      confirmed_prefix(rec_->state(), required_) >= policy.early_stop_n) {
    stop_ = Stop::Partial;
    partial_size_ = policy.early_stop_n;
    return;
  }
  if (rec_->complete()) {
    stop_ = Stop::Complete;
    return;
  }
  if (rec_->state().needs_recording) return;
  switch (decide_reinjection(rec_->state(), config_.reinject, rec_->size())) {
    case ReinjectDecision::Proceed:
      return;
    case ReinjectDecision::StopPartial:
      return;
    case ReinjectDecision::Reinject:
      reinject();
      return;
  }
}

SessionResult Session::run() {
  first_index_ = config_.first_prime_index;
  input_ = std::make_shared<const std::vector<QPoly>>(system_);
  if (config_.resume_path) {
    std::size_t consumed = 0;
    rec_->state() = restore_checkpoint(*config_.resume_path, system_, &consumed);
    first_index_ = std::max(first_index_, consumed);
    auto extended = std::make_shared<std::vector<QPoly>>(system_);
    for (const auto& q : rec_->state().reconstructed) extended->push_back(primitive_integer_form(q));
    input_ = std::move(extended);
    if (config_.log) {
      *config_.log << "resume generators=" << rec_->state().frontier << " first_prime_index=" << first_index_
                   << '\n';
    }
  }
  stream_ = std::make_unique<PrimeStream>(first_index_);
  const unsigned T = config_.threads;
  constexpr std::size_t kMaxFailedRecordings = 16;

  while (stop_ == Stop::None) {
    if (rec_->state().needs_recording) {
      while (!running_.empty() && stop_ == Stop::None) {
        Outcome o = wait_one();
        handle(o, false);
      }
      if (stop_ != Stop::None || !rec_->state().needs_recording) continue;
      if (limit_reached()) {
        stop_ = Stop::Exhausted;
        break;
      }
      if (failed_recordings_ >= kMaxFailedRecordings) {
        throw std::runtime_error("no recording prime agrees with the accumulated skeleton after " +
                                 std::to_string(failed_recordings_) + " attempts");
      }
      Job job = make_job(T, true);
      budget_.acquire(T);
      Outcome o;
      try {
        o = run_job(job);
      } catch (...) {
        budget_.release(T);
        throw;
      }
      budget_.release(T);
      handle(o, true);
      continue;
    }

    const std::size_t want = std::min<std::size_t>(config_.schedule.count_at(result_.primes_merged), T);
    const unsigned per = threads_per_worker(T, want);
    while (running_.size() < want && budget_.available() >= per && !limit_reached()) {
      launch(make_job(per, false));
    }
    if (running_.empty()) {
      stop_ = Stop::Exhausted;
      break;
    }
    Outcome o = wait_one();
    handle(o, false);
  }
  while (!running_.empty()) wait_one();

  auto& st = rec_->state();
  if (stop_ == Stop::Complete) {
    advance_phase(st, PhaseEvent::FinalReconstruction);
    result_.complete = true;
    result_.basis = st.reconstructed;
  } else {
    const std::size_t n = stop_ == Stop::Partial ? partial_size_ : confirmed_prefix(st, required_);
    result_.basis.assign(st.reconstructed.begin(), st.reconstructed.begin() + static_cast<std::ptrdiff_t>(n));
  }
  result_.basis_size = rec_->size();
  result_.primes_drawn = stream_->drawn() - first_index_;
  result_.peak_threads = budget_.peak();
  result_.phase = st.phase;
  result_.seconds = seconds_since(start_);
  if (learning_) result_.learning = *learning_;

  if (config_.archive_path) {
    Checkpoint ck;
    ck.variables = ring_->variables;
    ck.system_hash = hash_;
    ck.phase = st.phase;
    ck.primes_consumed = stream_->drawn();
    ck.generators = result_.basis;
    write_checkpoint(ck, *config_.archive_path);
  }
  if (config_.log) {
    *config_.log << "done complete=" << (result_.complete ? 1 : 0) << " size=" << result_.basis.size()
                 << " merged=" << result_.primes_merged << " drawn=" << result_.primes_drawn
                 << " unlucky=" << result_.unlucky_primes << " peak_threads=" << result_.peak_threads
                 << " wall=" << result_.seconds << '\n';
  }
  return std::move(result_);
}

// Checkpoint body encoding.

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_mpz(std::ostream& out, const mpz_class& z) {
  out.put(static_cast<char>(sgn(z) < 0 ? 1 : 0));
  std::size_t count = 0;
  std::vector<unsigned char> bytes((mpz_sizeinbase(z.get_mpz_t(), 2) + 7) / 8 + 1);
  mpz_export(bytes.data(), &count, 1, 1, 0, 0, z.get_mpz_t());
  put_u32(out, static_cast<std::uint32_t>(count));
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(count));
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  void bytes(void* dst, std::size_t n) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw CheckpointError("checkpoint is truncated");
  }
  std::uint8_t u8() {
    std::uint8_t v;
    bytes(&v, 1);
    return v;
  }
  std::uint32_t u32() {
    unsigned char b[4];
    bytes(b, 4);
    return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
           static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
  }
  mpz_class mpz() {
    const std::uint8_t negative = u8();
    const std::uint32_t n = u32();
    if (n > (1u << 28)) throw CheckpointError("checkpoint integer too large");
    std::vector<unsigned char> buf(n);
    if (n) bytes(buf.data(), n);
    mpz_class z;
    mpz_import(z.get_mpz_t(), n, 1, 1, 0, 0, buf.data());
    if (negative) z = -z;
    return z;
  }
  std::string line() {
    std::string s;
    if (!std::getline(in_, s) || in_.eof()) throw CheckpointError("checkpoint is truncated");
    return s;
  }

 private:
  std::istream& in_;
};

std::string expect_field(Reader& r, const std::string& key) {
  const std::string s = r.line();
  if (s.rfind(key, 0) != 0 || (s.size() > key.size() && s[key.size()] != ' ')) {
    throw CheckpointError("checkpoint header: expected '" + key + "', found '" + s + "'");
  }
  return s.size() > key.size() ? s.substr(key.size() + 1) : std::string();
}

std::size_t parse_count(const std::string& s, const char* what) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw CheckpointError(std::string("checkpoint header: bad ") + what);
  }
  return v;
}

constexpr const char* kMagic = "GBMODCKPT";
constexpr const char* kTrailer = "END";

}  // namespace

SessionResult run_session(const std::vector<QPoly>& system, const SessionConfig& config) {
  if (system.empty()) throw std::invalid_argument("empty input system");
  if (config.threads == 0) throw std::invalid_argument("thread count must be positive");
  for (const auto& s : config.schedule.segments) {
    if (s.count == 0) throw std::invalid_argument("simultaneous prime counts must be at least 1");
  }
  Session session(system, config);
  return session.run();
}

void write_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open checkpoint '" + path + "' for writing");
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(ck.system_hash));
  out << kMagic << ' ' << Checkpoint::kVersion << '\n';
  out << "variables";
  for (const auto& v : ck.variables) out << ' ' << v;
  out << '\n';
  out << "system_hash " << hash << '\n';
  out << "phase " << ck.phase << '\n';
  out << "primes_consumed " << ck.primes_consumed << '\n';
  out << "generators " << ck.generators.size() << '\n';
  const std::size_t nvars = ck.variables.size();
  for (const auto& g : ck.generators) {
    put_u32(out, static_cast<std::uint32_t>(g.terms().size()));
    for (const auto& t : g.terms()) {
      for (std::size_t v = 0; v < nvars; ++v) out.put(static_cast<char>(t.monomial[v]));
      put_mpz(out, t.coeff.get_num());
      put_mpz(out, t.coeff.get_den());
    }
  }
  out << kTrailer << '\n';
  if (!out) throw CheckpointError("failed writing checkpoint '" + path + "'");
}

Checkpoint read_checkpoint(const std::string& path, const RingPtr& ring) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path + "'");
  Reader r(in);
  Checkpoint ck;
  const std::string version = expect_field(r, kMagic);
  if (version != std::to_string(Checkpoint::kVersion)) {
    throw CheckpointError("unsupported checkpoint version " + version);
  }
  std::istringstream vars(expect_field(r, "variables"));
  for (std::string v; vars >> v;) ck.variables.push_back(v);
  if (ck.variables != ring->variables) throw CheckpointError("checkpoint variables differ from the ring");
  const std::string hash = expect_field(r, "system_hash");
  {
    std::uint64_t h = 0;
    auto [ptr, ec] = std::from_chars(hash.data(), hash.data() + hash.size(), h, 16);
    if (hash.empty() || ec != std::errc() || ptr != hash.data() + hash.size()) {
      throw CheckpointError("checkpoint header: bad system hash");
    }
    ck.system_hash = h;
  }
  ck.phase = static_cast<int>(parse_count(expect_field(r, "phase"), "phase"));
  ck.primes_consumed = parse_count(expect_field(r, "primes_consumed"), "prime count");
  const std::size_t count = parse_count(expect_field(r, "generators"), "generator count");

  const std::size_t nvars = ring->num_variables();
  const RationalField Q;
  std::vector<unsigned> exps(nvars);
  for (std::size_t g = 0; g < count; ++g) {
    const std::uint32_t nterms = r.u32();
    std::vector<QPoly::Term> terms;
    terms.reserve(std::min<std::uint32_t>(nterms, 1u << 16));
    for (std::uint32_t t = 0; t < nterms; ++t) {
      for (std::size_t v = 0; v < nvars; ++v) exps[v] = r.u8();
      mpz_class num = r.mpz();
      mpz_class den = r.mpz();
      if (den <= 0) throw CheckpointError("checkpoint has a non-positive denominator");
      mpq_class c(num, den);
      c.canonicalize();
      terms.push_back({Monomial::from_exponents(exps), std::move(c)});
    }
    try {
      ck.generators.push_back(QPoly::from_terms(ring, Q, std::move(terms)));
    } catch (const std::exception& e) {
      throw CheckpointError(std::string("checkpoint polynomial is malformed: ") + e.what());
    }
  }
  if (r.line() != kTrailer) throw CheckpointError("checkpoint trailer missing");
  if (in.peek() != std::char_traits<char>::eof()) throw CheckpointError("trailing data after checkpoint");
  return ck;
}

void archive_checkpoint(const ReconstructionState& state, const std::vector<QPoly>& system,
                        std::size_t primes_consumed, const std::string& path) {
  if (system.empty()) throw std::invalid_argument("empty input system");
  Checkpoint ck;
  ck.variables = system.front().ring()->variables;
  ck.system_hash = system_hash(system);
  ck.phase = state.phase;
  ck.primes_consumed = primes_consumed;
  ck.generators.assign(state.reconstructed.begin(),
                       state.reconstructed.begin() + static_cast<std::ptrdiff_t>(state.frontier));
  write_checkpoint(ck, path);
}

ReconstructionState restore_checkpoint(const std::string& path, const std::vector<QPoly>& system,
                                       std::size_t* primes_consumed) {
  if (system.empty()) throw std::invalid_argument("empty input system");
  Checkpoint ck = read_checkpoint(path, system.front().ring());
  if (ck.system_hash != system_hash(system)) {
    throw CheckpointError("checkpoint was written for a different input system");
  }
  for (std::size_t i = 1; i < ck.generators.size(); ++i) {
    if (!grevlex_less(ck.generators[i - 1].leading_monomial(), ck.generators[i].leading_monomial())) {
      throw CheckpointError("checkpoint generators are not in increasing leading-monomial order");
    }
  }
  ReconstructionState state;
  state.frontier = ck.generators.size();
  for (auto& g : ck.generators) {
    if (g.is_zero()) throw CheckpointError("checkpoint contains a zero generator");
    state.reconstructed.push_back(monic_form(g));
  }
  state.primes_at_reconstruction.assign(state.frontier, 0);
  state.confirmations.assign(state.frontier, 0);
  advance_phase(state, PhaseEvent::ResumeFromCheckpoint);
  if (primes_consumed) *primes_consumed = ck.primes_consumed;
  return state;
}

}  // namespace gbmod
