#include "bbj/memory.hpp"

#include <algorithm>

namespace bbj {

BitMemory::BitMemory(WordSpec spec) : spec_(spec), chunks_(2, 0) {}

bool BitMemory::grow_to(BitAddress addr, std::uint64_t max_bits) {
  const std::uint64_t ws = spec_.word_size;
  const std::uint64_t cells = addr / ws + 1;
  if (cells > max_bits / ws) return false;
  length_ = cells * ws;
  chunks_.resize(static_cast<std::size_t>(length_ / 64 + 2), 0);
  return true;
}

bool BitMemory::write_word(BitAddress addr, Word v, std::uint64_t max_bits) {
  const unsigned ws = spec_.word_size;
  if (addr + ws - 1 >= length_ && !grow_to(addr + ws - 1, max_bits)) return false;
  for (unsigned i = 0; i < ws; ++i) set_bit(addr + i, (v >> i) & 1u, max_bits);
  return true;
}

bool operator==(const BitMemory& a, const BitMemory& b) {
  if (!(a.spec_ == b.spec_) || a.length_ != b.length_) return false;
  const std::size_t n = static_cast<std::size_t>(a.length_ / 64 + 2);
  return std::equal(a.chunks_.begin(), a.chunks_.begin() + n, b.chunks_.begin());
}

}  // namespace bbj
