#pragma once

#include <cstdint>
#include <vector>

#include "bbj/word_spec.hpp"

namespace bbj {

// One-sided, zero-filled bit memory. The allocated length is always a whole
// number of cells; reads past the end yield 0 and never allocate.
class BitMemory {
 public:
  explicit BitMemory(WordSpec spec = WordSpec::make(32));

  const WordSpec& spec() const { return spec_; }
  std::uint64_t length_bits() const { return length_; }
  std::uint64_t cell_count() const { return length_ / spec_.word_size; }

  bool get_bit(BitAddress addr) const {
    if (addr >= length_) return false;
    return (chunks_[addr >> 6] >> (addr & 63)) & 1u;
  }

  // Returns false (memory untouched) if growing would pass max_bits.
  bool set_bit(BitAddress addr, bool v, std::uint64_t max_bits) {
    if (addr >= length_ && !grow_to(addr, max_bits)) return false;
    std::uint64_t& c = chunks_[addr >> 6];
    const std::uint64_t m = std::uint64_t{1} << (addr & 63);
    c = v ? (c | m) : (c & ~m);
    return true;
  }

  // LSB-first read of word_size bits starting at any bit address.
  Word read_word(BitAddress addr) const {
    if (addr >= length_) return 0;
    const std::size_t idx = addr >> 6;
    const unsigned sh = addr & 63;
    std::uint64_t v = chunks_[idx] >> sh;
    if (sh != 0 && sh + spec_.word_size > 64) v |= chunks_[idx + 1] << (64 - sh);
    return v & spec_.neg_one;
  }

  bool write_word(BitAddress addr, Word v, std::uint64_t max_bits);

  // Cell-indexed helpers for loaders and tests.
  Word cell(std::uint64_t index) const { return read_word(index * spec_.word_size); }

  friend bool operator==(const BitMemory& a, const BitMemory& b);

 private:
  bool grow_to(BitAddress addr, std::uint64_t max_bits);

  WordSpec spec_;
  std::uint64_t length_ = 0;
  // Two spare chunks past length_ keep unaligned reads in bounds.
  std::vector<std::uint64_t> chunks_;
};

}  // namespace bbj
