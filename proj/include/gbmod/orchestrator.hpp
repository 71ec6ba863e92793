#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gbmod/f4.hpp"
#include "gbmod/reconstructor.hpp"
#include "gbmod/system_io.hpp"

namespace gbmod {

/// Number of simultaneous prime computations as a step function of the
/// number of merged primes.
struct Schedule {
  struct Segment {
    std::size_t count;
    /// Applies while fewer than `until` primes are merged.
    std::size_t until;
  };

  std::vector<Segment> segments{{1, std::numeric_limits<std::size_t>::max()}};

  std::size_t count_at(std::size_t merged) const;
  static Schedule constant(std::size_t count);
};

/// Accepts (n) or (n1, p1, n2, p2, n3). Throws std::invalid_argument on zero
/// counts, non-increasing breakpoints or a wrong argument count.
Schedule parse_schedule(std::span<const long long> args);
/// Comma separated form of the above, e.g. "12,800,9,1600,2".
Schedule parse_schedule(std::string_view text);

/// Threads handed to each of `workers` simultaneous computations.
unsigned threads_per_worker(unsigned budget, std::size_t workers);

struct SessionConfig {
  unsigned threads = 1;
  Schedule schedule;
  ReinjectPolicy reinject;
  std::size_t max_pairs = 0;
  double proba_epsilon = 1e-7;
  std::optional<std::string> archive_path;
  std::optional<std::string> resume_path;
  /// Progress lines go here when set.
  std::ostream* log = nullptr;
  /// Index of the first prime in the descending stream.
  std::size_t first_prime_index = 0;
  /// Abort after this many primes (0 = no limit).
  std::size_t max_primes = 0;
  /// Called on the coordinator with every finished prime image before it is
  /// merged; tests use it to inject faults.
  std::function<void(std::size_t prime_index, ModularBasis& image)> image_hook;
};

struct SessionResult {
  /// Monic rational basis in increasing leading-monomial order; the
  /// reconstructed prefix when `complete` is false.
  std::vector<QPoly> basis;
  bool complete = false;
  std::size_t basis_size = 0;
  std::size_t primes_merged = 0;
  std::size_t primes_drawn = 0;
  std::size_t unlucky_primes = 0;
  std::size_t skipped_primes = 0;
  std::size_t abandoned_primes = 0;
  std::size_t restarts = 0;
  std::size_t reinjections = 0;
  /// Frontier after each merged prime, in merge order.
  std::vector<std::size_t> frontier_curve;
  unsigned peak_threads = 0;
  int phase = 0;
  double seconds = 0;
  std::optional<LearningRecord> learning;
};

/// Multi-modular Groebner basis over Q of `system` (grevlex, the ring of the
/// first polynomial).
SessionResult run_session(const std::vector<QPoly>& system, const SessionConfig& config);

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::vector<std::string> variables;
  std::uint64_t system_hash = 0;
  int phase = 0;
  std::size_t primes_consumed = 0;
  std::vector<QPoly> generators;
};

void write_checkpoint(const Checkpoint& checkpoint, const std::string& path);
/// Throws CheckpointError on a bad header, version mismatch or truncation.
Checkpoint read_checkpoint(const std::string& path, const RingPtr& ring);

/// Archives the reconstructed prefix of `state` for `system`.
void archive_checkpoint(const ReconstructionState& state, const std::vector<QPoly>& system,
                        std::size_t primes_consumed, const std::string& path);

/// Loads an archive written for `system`; the result sits in phase 2 with the
/// archived generators as its reconstructed prefix. Throws CheckpointError
/// when the archive belongs to another system.
ReconstructionState restore_checkpoint(const std::string& path, const std::vector<QPoly>& system,
                                       std::size_t* primes_consumed = nullptr);

}  // namespace gbmod
