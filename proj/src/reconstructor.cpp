#include "gbmod/reconstructor.hpp"

#include <algorithm>
#include <cmath>

namespace gbmod {

namespace {

std::uint32_t mod_u32(const mpz_class& v, std::uint32_t p) {
  return static_cast<std::uint32_t>(mpz_fdiv_ui(v.get_mpz_t(), p));
}

bool matches_image(const QPoly& value, const ModPoly& image, bool& skipped) {
  const PrimeField& F = image.field();
  auto reduced = reduce_mod(value, F);
  if (!reduced) {
    skipped = true;
    return true;
  }
  return *reduced == image;
}

}  // namespace

AccumulatedBasis::AccumulatedBasis(RingPtr ring, std::vector<Monomial> skeleton)
    : ring_(std::move(ring)), skeleton_(std::move(skeleton)) {
  supports_.resize(skeleton_.size());
  residues_.resize(skeleton_.size());
  released_.assign(skeleton_.size(), false);
}

bool AccumulatedBasis::has_prime(std::uint32_t p) const {
  return std::find(primes_.begin(), primes_.end(), p) != primes_.end();
}

void AccumulatedBasis::merge(const ModularBasis& image) {
  if (image.leading_monomials() != skeleton_) throw SkeletonMismatch("image leading monomials differ from the skeleton");
  const std::uint32_t p = image.prime;
  if (has_prime(p)) throw std::invalid_argument("prime " + std::to_string(p) + " already merged");
  const std::uint32_t m_inv = PrimeField(p).inv(mod_u32(modulus_, p));

  for (std::size_t i = 0; i < skeleton_.size(); ++i) {
    if (released_[i]) continue;
    const auto& img = image.polys[i].terms();
    auto& support = supports_[i];
    auto& res = residues_[i];
    // Union of supports; a monomial seen for the first time has residue 0
    // modulo the primes merged so far.
    std::vector<Monomial> merged_support;
    std::vector<mpz_class> merged_res;
    merged_support.reserve(std::max(support.size(), img.size()));
    merged_res.reserve(merged_support.capacity());
    std::size_t a = 0, b = 0;
    while (a < support.size() || b < img.size()) {
      int c = a == support.size() ? -1 : b == img.size() ? 1 : grevlex_cmp(support[a], img[b].monomial);
      if (c > 0) {
        merged_support.push_back(support[a]);
        merged_res.push_back(std::move(res[a]));
        crt_merge_inplace(merged_res.back(), modulus_, 0, p, m_inv);
        ++a;
      } else if (c < 0) {
        merged_support.push_back(img[b].monomial);
        merged_res.emplace_back(0);
        crt_merge_inplace(merged_res.back(), modulus_, img[b].coeff, p, m_inv);
        ++b;
      } else {
        merged_support.push_back(support[a]);
        merged_res.push_back(std::move(res[a]));
        crt_merge_inplace(merged_res.back(), modulus_, img[b].coeff, p, m_inv);
        ++a;
        ++b;
      }
    }
    support = std::move(merged_support);
    res = std::move(merged_res);
  }
  modulus_ *= p;
  primes_.push_back(p);
}

void AccumulatedBasis::release(std::size_t i) {
  released_.at(i) = true;
  std::vector<Monomial>().swap(supports_[i]);
  std::vector<mpz_class>().swap(residues_[i]);
}

void AccumulatedBasis::restore(std::size_t i, const QPoly& value) {
  released_.at(i) = false;
  supports_[i].clear();
  residues_[i].clear();
  for (const auto& t : value.terms()) {
    mpz_class inv;
    if (mpz_invert(inv.get_mpz_t(), t.coeff.get_den_mpz_t(), modulus_.get_mpz_t()) == 0 && modulus_ != 1) {
      throw std::logic_error("cannot restore an accumulator: denominator shares a factor with the modulus");
    }
    mpz_class r = t.coeff.get_num() * inv;
    mpz_fdiv_r(r.get_mpz_t(), r.get_mpz_t(), modulus_.get_mpz_t());
    supports_[i].push_back(t.monomial);
    residues_[i].push_back(std::move(r));
  }
}

mpz_class AccumulatedBasis::residue_of(std::size_t i, const Monomial& m) const {
  const auto& s = supports_[i];
  auto it = std::lower_bound(s.begin(), s.end(), m, GrevlexGreater{});
  if (it == s.end() || !(*it == m)) return 0;
  return residues_[i][static_cast<std::size_t>(it - s.begin())];
}

void merge_prime_image(AccumulatedBasis& acc, const ModularBasis& image) { acc.merge(image); }

void ReconstructionState::record_learned_run(double seconds) {
  learned_run_seconds = (learned_run_seconds * static_cast<double>(learned_runs) + seconds) /
                        static_cast<double>(learned_runs + 1);
  ++learned_runs;
}

ReinjectPolicy ReinjectPolicy::threshold(double ratio, double speed_ratio) {
  if (!(ratio >= 0 && ratio <= 1) || !(speed_ratio >= 0 && speed_ratio <= 1)) {
    throw std::invalid_argument("re-injection ratios must lie in [0, 1]");
  }
  ReinjectPolicy p;
  p.mode = Mode::Threshold;
  p.ratio = ratio;
  p.speed_ratio = speed_ratio;
  return p;
}

ReinjectPolicy ReinjectPolicy::early_stop(std::size_t n) {
  if (n == 0) throw std::invalid_argument("early stop needs a positive element count");
  ReinjectPolicy p;
  p.mode = Mode::EarlyStop;
  p.early_stop_n = n;
  return p;
}

ReinjectDecision decide_reinjection(const ReconstructionState& state, const ReinjectPolicy& policy,
                                    std::size_t basis_size) {
  switch (policy.mode) {
    case ReinjectPolicy::Mode::None:
      return ReinjectDecision::Proceed;
    case ReinjectPolicy::Mode::EarlyStop:
      return state.frontier >= policy.early_stop_n ? ReinjectDecision::StopPartial : ReinjectDecision::Proceed;
    case ReinjectPolicy::Mode::Threshold: {
      if (basis_size == 0 || state.frontier <= state.reinjected || state.frontier >= basis_size) {
        return ReinjectDecision::Proceed;
      }
      const double share = static_cast<double>(state.frontier - state.reinjected) / static_cast<double>(basis_size);
      if (share <= policy.ratio) return ReinjectDecision::Proceed;
      if (state.first_run_seconds <= 0 || state.learned_runs == 0) return ReinjectDecision::Proceed;
      const double speed = state.learned_run_seconds / state.first_run_seconds;
      return speed > policy.speed_ratio ? ReinjectDecision::Reinject : ReinjectDecision::Proceed;
    }
  }
  return ReinjectDecision::Proceed;
}

void advance_phase(ReconstructionState& state, PhaseEvent event) {
  switch (event) {
    case PhaseEvent::FirstPrimeDone:
      if (state.phase == 1) throw InvalidTransition("first prime already done in phase 1");
      if (state.phase == 0) state.phase = 1;
      state.needs_recording = false;
      return;
    case PhaseEvent::ReinjectionTriggered:
      if (state.phase < 1) throw InvalidTransition("re-injection before the first prime");
      if (state.finished) throw InvalidTransition("re-injection after final reconstruction");
      ++state.phase;
      state.needs_recording = true;
      state.reinjected = state.frontier;
      state.learned_runs = 0;
      state.learned_run_seconds = 0;
      state.first_run_seconds = 0;
      return;
    case PhaseEvent::ResumeFromCheckpoint:
      if (state.phase != 0) throw InvalidTransition("resume is only possible in a fresh session");
      state.phase = 2;
      state.needs_recording = true;
      state.reinjected = state.frontier;
      return;
    case PhaseEvent::FinalReconstruction:
      if (state.phase < 1) throw InvalidTransition("final reconstruction before the first prime");
      state.finished = true;
      return;
  }
}

ClusterOutcome attempt_cluster_reconstruction(AccumulatedBasis& acc, ReconstructionState& state,
                                              const ModularBasis& check) {
  ClusterOutcome out;
  if (acc.primes().empty() || check.polys.size() != acc.size()) return out;
  const bool independent = !acc.has_prime(check.prime);
  // Self-checked reconstructions must fit in a quarter of the modulus bits.
  ReconstructionBounds bounds = reconstruction_bounds(acc.modulus());
  if (!independent) {
    mpz_root(bounds.numerator.get_mpz_t(), acc.modulus().get_mpz_t(), 4);
    bounds.denominator = bounds.numerator;
  }
  const RationalField Q;
  while (state.frontier < acc.size()) {
    const std::size_t i = state.frontier;
    const auto& support = acc.support(i);
    const auto& res = acc.residues(i);
    std::vector<QPoly::Term> terms;
    terms.reserve(support.size());
    bool ok = true;
    for (std::size_t k = 0; k < support.size(); ++k) {
      auto q = rational_reconstruct(res[k], acc.modulus(), bounds);
      if (!q) {
        ok = false;
        break;
      }
      if (sgn(*q) != 0) terms.push_back({support[k], std::move(*q)});
    }
    if (!ok) break;
    QPoly value = QPoly::from_sorted_terms(acc.ring(), Q, std::move(terms));
    bool skipped = false;
    if (value.is_zero() || !matches_image(value, check.polys[i], skipped)) {
      out.check_failed = true;
      break;
    }
    state.reconstructed.push_back(std::move(value));
    state.primes_at_reconstruction.push_back(acc.primes().size());
    state.confirmations.push_back(independent && !skipped ? 1 : 0);
    if (skipped) ++state.skipped_checks;
    acc.release(i);
    ++state.frontier;
    ++out.reconstructed;
  }
  return out;
}

VerifyReport verify_reconstructed(ReconstructionState& state, const ModularBasis& image) {
  VerifyReport report;
  for (std::size_t i = 0; i < state.frontier; ++i) {
    if (i >= image.polys.size()) {
      report.failed.push_back(i);
      continue;
    }
    bool skipped = false;
    if (!matches_image(state.reconstructed[i], image.polys[i], skipped)) {
      report.failed.push_back(i);
    } else if (skipped) {
      ++report.skipped;
    } else {
      ++state.confirmations[i];
    }
  }
  state.skipped_checks += report.skipped;
  return report;
}

std::size_t required_confirmations(double epsilon) {
  if (!(epsilon > 0 && epsilon < 1)) throw std::invalid_argument("proba_epsilon must lie in (0, 1)");
  const double k = std::log(1 / epsilon) / std::log(std::ldexp(1.0, 29));
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(k - 1e-12)));
}

Reconstructor::Reconstructor(RingPtr ring, std::size_t required_confirmations)
    : ring_(std::move(ring)), required_(std::max<std::size_t>(1, required_confirmations)) {}

const std::vector<Monomial>& Reconstructor::skeleton() const {
  static const std::vector<Monomial> empty;
  return acc_ ? acc_->skeleton() : empty;
}

bool Reconstructor::complete() const {
  if (!acc_ || state_.frontier != acc_->size()) return false;
  return std::all_of(state_.confirmations.begin(), state_.confirmations.end(),
                     [this](std::size_t c) { return c >= required_; });
}

std::vector<QPoly> Reconstructor::reconstructed_prefix() const { return state_.reconstructed; }

void Reconstructor::demote_from(std::size_t index) {
  for (std::size_t i = index; i < state_.frontier; ++i) acc_->restore(i, state_.reconstructed[i]);
  state_.reconstructed.erase(state_.reconstructed.begin() + static_cast<std::ptrdiff_t>(index), state_.reconstructed.end());
  state_.primes_at_reconstruction.resize(index);
  state_.confirmations.resize(index);
  state_.frontier = index;
  state_.reinjected = std::min(state_.reinjected, index);
}

SubmitResult Reconstructor::submit(const ModularBasis& image) {
  SubmitResult result;
  result.frontier_before = state_.frontier;
  if (!acc_) {
    // A restored prefix has to agree with the shape of the first image.
    auto lms = image.leading_monomials();
    if (state_.frontier > lms.size()) {
      result.frontier_after = state_.frontier;
      return result;
    }
    for (std::size_t i = 0; i < state_.frontier; ++i) {
      if (state_.reconstructed[i].leading_monomial() != lms[i]) {
        result.frontier_after = state_.frontier;
        return result;
      }
    }
    acc_.emplace(ring_, std::move(lms));
    for (std::size_t i = 0; i < state_.frontier; ++i) acc_->release(i);
  }
  if (image.leading_monomials() != acc_->skeleton()) {
    result.frontier_after = state_.frontier;
    return result;
  }
  if (acc_->has_prime(image.prime)) throw std::invalid_argument("prime already merged");
  result.accepted = true;

  VerifyReport report = verify_reconstructed(state_, image);
  result.skipped_checks = report.skipped;
  result.verification_failures = report.failed;
  if (!report.failed.empty()) demote_from(report.failed.front());

  if (acc_->primes().empty()) {
    acc_->merge(image);
    attempt_cluster_reconstruction(*acc_, state_, image);
  } else {
    attempt_cluster_reconstruction(*acc_, state_, image);
    acc_->merge(image);
  }
  result.frontier_after = state_.frontier;
  return result;
}

}  // namespace gbmod
