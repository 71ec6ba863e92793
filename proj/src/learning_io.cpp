// Binary layout (little endian):
//   "GBLR" u32 version u32 nvars u64 system_hash u64 num_inputs
//   u32 batches, then per batch:
//     u32 n, n x (u32 i, u32 j, mono lcm)             pairs
//     u32 n, n x (u8 source, u32 index, mono, u8 zero) rows
//     u32 n, n x mono                                  columns
//     u32 n, n x (u32 basis index, mono)               reducers
//     u32 n, n x mono                                  new leading monomials
//   u32 n, n x u32 final active indices
//   u32 n, n x mono skeleton
//   "END!"
// A monomial is nvars exponent bytes.

#include <array>
#include <string>

#include "gbmod/f4.hpp"

namespace gbmod {

namespace {

constexpr std::array<std::uint8_t, 4> kMagic{'G', 'B', 'L', 'R'};
constexpr std::array<std::uint8_t, 4> kTrailer{'E', 'N', 'D', '!'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(std::uint32_t nvars) : nvars_(nvars) {}

  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int k = 0; k < 4; ++k) out_.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  void u64(std::uint64_t v) {
    for (int k = 0; k < 8; ++k) out_.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  void count(std::size_t n) { u32(static_cast<std::uint32_t>(n)); }
  void mono(const Monomial& m) {
    if (m.num_variables() != nvars_) throw std::invalid_argument("monomial over the wrong variable count");
    for (std::uint32_t i = 0; i < nvars_; ++i) out_.push_back(static_cast<std::uint8_t>(m[i]));
  }

  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::uint32_t nvars_;
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  void set_nvars(std::uint32_t n) {
    if (n > Monomial::kMaxVariables) throw std::runtime_error("learning record: too many variables");
    nvars_ = n;
  }

  void expect(std::span<const std::uint8_t> b, const char* what) {
    need(b.size());
    if (!std::equal(b.begin(), b.end(), in_.begin() + static_cast<std::ptrdiff_t>(pos_))) {
      throw std::runtime_error(std::string("learning record: bad ") + what);
    }
    pos_ += b.size();
  }
  std::uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= std::uint32_t{in_[pos_++]} << (8 * k);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= std::uint64_t{in_[pos_++]} << (8 * k);
    return v;
  }
  std::size_t count() {
    std::uint32_t n = u32();
    // Every counted item occupies at least one byte.
    if (n > in_.size() - pos_) throw std::runtime_error("learning record: truncated");
    return n;
  }
  Monomial mono() {
    need(nvars_);
    std::array<unsigned, Monomial::kMaxVariables> e{};
    for (std::uint32_t i = 0; i < nvars_; ++i) e[i] = in_[pos_++];
    return Monomial::from_exponents(std::span<const unsigned>(e.data(), nvars_));
  }
  bool at_end() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw std::runtime_error("learning record: truncated");
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
  std::uint32_t nvars_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_learning(const LearningRecord& record) {
  Writer w(record.num_variables);
  w.bytes(kMagic);
  w.u32(kVersion);
  w.u32(record.num_variables);
  w.u64(record.system_hash);
  w.u64(record.num_inputs);
  w.count(record.batches.size());
  for (const BatchRecord& b : record.batches) {
    w.count(b.pairs.size());
    for (const auto& p : b.pairs) {
      w.u32(p.i);
      w.u32(p.j);
      w.mono(p.lcm);
    }
    w.count(b.rows.size());
    for (std::size_t k = 0; k < b.rows.size(); ++k) {
      w.u8(static_cast<std::uint8_t>(b.rows[k].source));
      w.u32(b.rows[k].index);
      w.mono(b.rows[k].multiplier);
      w.u8(b.zero_flags[k]);
    }
    w.count(b.monomials.size());
    for (const auto& m : b.monomials) w.mono(m);
    w.count(b.reducers.size());
    for (const auto& r : b.reducers) {
      w.u32(r.basis_index);
      w.mono(r.multiplier);
    }
    w.count(b.new_leads.size());
    for (const auto& m : b.new_leads) w.mono(m);
  }
  w.count(record.final_active.size());
  for (auto idx : record.final_active) w.u32(idx);
  w.count(record.skeleton.size());
  for (const auto& m : record.skeleton) w.mono(m);
  w.bytes(kTrailer);
  return w.take();
}

LearningRecord deserialize_learning(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  r.expect(kMagic, "magic");
  if (std::uint32_t v = r.u32(); v != kVersion) {
    throw std::runtime_error("learning record: unsupported version " + std::to_string(v));
  }
  LearningRecord rec;
  rec.num_variables = r.u32();
  r.set_nvars(rec.num_variables);
  rec.system_hash = r.u64();
  rec.num_inputs = r.u64();
  rec.batches.resize(r.count());
  for (BatchRecord& b : rec.batches) {
    b.pairs.resize(r.count());
    for (auto& p : b.pairs) {
      p.i = r.u32();
      p.j = r.u32();
      p.lcm = r.mono();
    }
    const std::size_t nrows = r.count();
    b.rows.reserve(nrows);
    b.zero_flags.reserve(nrows);
    for (std::size_t k = 0; k < nrows; ++k) {
      auto source = r.u8();
      if (source > 1) throw std::runtime_error("learning record: bad row source");
      RowSpec spec{static_cast<RowSpec::Source>(source), 0, {}};
      spec.index = r.u32();
      spec.multiplier = r.mono();
      b.rows.push_back(spec);
      b.zero_flags.push_back(r.u8());
    }
    b.monomials.resize(r.count());
    for (auto& m : b.monomials) m = r.mono();
    b.reducers.resize(r.count());
    for (auto& red : b.reducers) {
      red.basis_index = r.u32();
      red.multiplier = r.mono();
    }
    b.new_leads.resize(r.count());
    for (auto& m : b.new_leads) m = r.mono();
  }
  rec.final_active.resize(r.count());
  for (auto& idx : rec.final_active) idx = r.u32();
  rec.skeleton.resize(r.count());
  for (auto& m : rec.skeleton) m = r.mono();
  r.expect(kTrailer, "trailer");
  if (!r.at_end()) throw std::runtime_error("learning record: trailing bytes");
  return rec;
}

}  // namespace gbmod
