#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "gbmod/f4.hpp"
#include "gbmod/modarith.hpp"
#include "gbmod/polynomial.hpp"
#include "gbmod/system_io.hpp"

namespace gbmod {

/// A prime image whose leading monomials differ from the accumulated skeleton.
class SkeletonMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidTransition : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// CRT accumulators for every coefficient of a basis whose shape is fixed by
/// the first merged image. All live accumulators share one modulus.
class AccumulatedBasis {
 public:
  AccumulatedBasis(RingPtr ring, std::vector<Monomial> skeleton);

  std::size_t size() const { return skeleton_.size(); }
  const RingPtr& ring() const { return ring_; }
  const std::vector<Monomial>& skeleton() const { return skeleton_; }
  const mpz_class& modulus() const { return modulus_; }
  const std::vector<std::uint32_t>& primes() const { return primes_; }
  bool has_prime(std::uint32_t p) const;

  /// Throws SkeletonMismatch (nothing modified) when the leading monomials
  /// differ and std::invalid_argument when the prime was already merged.
  void merge(const ModularBasis& image);

  bool released(std::size_t i) const { return released_[i]; }
  const std::vector<Monomial>& support(std::size_t i) const { return supports_[i]; }
  const std::vector<mpz_class>& residues(std::size_t i) const { return residues_[i]; }

  /// Drops the accumulators of element i once it is reconstructed.
  void release(std::size_t i);
  /// Re-creates the accumulators of a released element from its rational
  /// form. Throws std::logic_error if a denominator shares a factor with M.
  void restore(std::size_t i, const QPoly& value);

  /// Accumulator of the coefficient of `m` in element i, 0 when absent.
  mpz_class residue_of(std::size_t i, const Monomial& m) const;

 private:
  RingPtr ring_;
  std::vector<Monomial> skeleton_;
  std::vector<std::vector<Monomial>> supports_;  // decreasing grevlex
  std::vector<std::vector<mpz_class>> residues_;
  std::vector<bool> released_;
  mpz_class modulus_ = 1;
  std::vector<std::uint32_t> primes_;
};

/// Same as `acc.merge(image)`.
void merge_prime_image(AccumulatedBasis& acc, const ModularBasis& image);

enum class PhaseEvent { FirstPrimeDone, ReinjectionTriggered, ResumeFromCheckpoint, FinalReconstruction };

struct ReconstructionState {
  std::size_t frontier = 0;
  /// Monic rational elements for indices below the frontier.
  std::vector<QPoly> reconstructed;
  /// Primes merged when each element was reconstructed.
  std::vector<std::size_t> primes_at_reconstruction;
  /// Fresh primes whose image agreed with each element.
  std::vector<std::size_t> confirmations;
  int phase = 0;
  bool finished = false;
  /// Learning must be (re)recorded before the next replay.
  bool needs_recording = true;
  /// Elements already added to the input system.
  std::size_t reinjected = 0;
  double first_run_seconds = 0;
  double learned_run_seconds = 0;
  std::size_t learned_runs = 0;
  std::size_t skipped_checks = 0;

  void record_learned_run(double seconds);
};

/// Threshold mode reinjects once the share of reconstructed elements not yet
/// re-injected exceeds `ratio` and learned runs are slower than
/// `speed_ratio` times the first run. Early-stop mode stops once `early_stop_n`
/// elements are reconstructed.
struct ReinjectPolicy {
  enum class Mode { None, Threshold, EarlyStop };

  Mode mode = Mode::None;
  double ratio = 0;
  double speed_ratio = 0;
  std::size_t early_stop_n = 0;

  static ReinjectPolicy none() { return {}; }
  static ReinjectPolicy threshold(double ratio, double speed_ratio);
  static ReinjectPolicy early_stop(std::size_t n);
};

enum class ReinjectDecision { Proceed, Reinject, StopPartial };

ReinjectDecision decide_reinjection(const ReconstructionState& state, const ReinjectPolicy& policy,
                                    std::size_t basis_size);

/// Throws InvalidTransition for events that make no sense in the current phase.
void advance_phase(ReconstructionState& state, PhaseEvent event);

struct ClusterOutcome {
  std::size_t reconstructed = 0;
  /// Element at the frontier whose coefficients all reconstructed but that
  /// disagreed with the check image.
  bool check_failed = false;
};

/// Reconstructs elements from the frontier on until one fails. An element is
/// accepted when every coefficient reconstructs and its image modulo the
/// check prime equals `check`. Passing counts as a confirmation only when the
/// check prime is not among the accumulated primes.
ClusterOutcome attempt_cluster_reconstruction(AccumulatedBasis& acc, ReconstructionState& state,
                                              const ModularBasis& check);

struct VerifyReport {
  std::vector<std::size_t> failed;
  std::size_t skipped = 0;
};

/// Compares every reconstructed element with the image. Passing elements gain
/// a confirmation; elements whose denominators vanish mod p are skipped.
VerifyReport verify_reconstructed(ReconstructionState& state, const ModularBasis& image);

/// Confirmations needed for a failure probability below `epsilon`: the
/// smallest k with (2^-29)^k <= epsilon.
std::size_t required_confirmations(double epsilon);

struct SubmitResult {
  bool accepted = false;
  std::size_t frontier_before = 0;
  std::size_t frontier_after = 0;
  std::vector<std::size_t> verification_failures;
  std::size_t skipped_checks = 0;
};

/// Single-threaded coordinator state: accumulators plus reconstruction state.
class Reconstructor {
 public:
  Reconstructor(RingPtr ring, std::size_t required_confirmations);

  /// Merges one prime image; an image whose skeleton differs from the first
  /// one is rejected and leaves the state untouched. Elements placed in
  /// state() before the first image are treated as already reconstructed.
  SubmitResult submit(const ModularBasis& image);

  bool initialized() const { return acc_.has_value(); }
  std::size_t size() const { return acc_ ? acc_->size() : 0; }
  std::size_t primes_merged() const { return acc_ ? acc_->primes().size() : 0; }
  const std::vector<Monomial>& skeleton() const;
  bool complete() const;

  ReconstructionState& state() { return state_; }
  const ReconstructionState& state() const { return state_; }
  const AccumulatedBasis& accumulator() const { return *acc_; }
  std::size_t required_confirmations() const { return required_; }

  /// The reconstructed prefix (indices below the frontier).
  std::vector<QPoly> reconstructed_prefix() const;

 private:
  void demote_from(std::size_t index);

  RingPtr ring_;
  std::size_t required_;
  std::optional<AccumulatedBasis> acc_;
  ReconstructionState state_;
};

}  // namespace gbmod
