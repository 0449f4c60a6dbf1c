#include "bbj/machine.hpp"

#include <istream>
#include <ostream>
#include <stdexcept>

namespace bbj {

std::string_view status_name(RunStatus s) {
  switch (s) {
    case RunStatus::Running: return "running";
    case RunStatus::Halted: return "halted";
    case RunStatus::StepLimit: return "step-limit";
    case RunStatus::MemoryLimit: return "memory-limit";
    case RunStatus::InputExhausted: return "input-exhausted";
  }
  return "unknown";
}

int exit_code(RunStatus s) {
  switch (s) {
    case RunStatus::Halted: return 0;
    case RunStatus::StepLimit: return 2;
    case RunStatus::MemoryLimit: return 3;
    case RunStatus::InputExhausted: return 4;
    case RunStatus::Running: break;
  }
  return 1;
}

std::optional<bool> BitIo::read_bit() {
  if (in_count_ == 0) {
    if (in_ == nullptr) return std::nullopt;
    const int c = in_->get();
    if (c == std::char_traits<char>::eof()) return std::nullopt;
    in_byte_ = static_cast<unsigned char>(c);
    in_count_ = 8;
  }
  const bool v = in_byte_ & 1u;
  in_byte_ >>= 1;
  --in_count_;
  return v;
}

void BitIo::write_bit(bool v) {
  out_byte_ |= static_cast<unsigned>(v) << out_count_;
  if (++out_count_ == 8) {
    if (out_ != nullptr) out_->put(static_cast<char>(out_byte_));
    ++bytes_written_;
    out_byte_ = 0;
    out_count_ = 0;
  }
}

unsigned BitIo::discard_pending_output() {
  const unsigned n = out_count_;
  out_byte_ = 0;
  out_count_ = 0;
  return n;
}

namespace {

inline RunStatus step_impl(MachineState& s, BitIo& io, const RunLimits& limits,
                           std::ostream* trace) {
  BitMemory& mem = s.memory;
  const WordSpec& spec = mem.spec();
  const Word neg_one = spec.neg_one;
  const unsigned ws = spec.word_size;
  const BitAddress ip = s.ip;
  // An ip at or past the end of memory reads three zero words; the guard also
  // keeps ip + 2*ws from wrapping for 64-bit words.
  const bool in_mem = ip < mem.length_bits();
  const Word a = in_mem ? mem.read_word(ip) : 0;
  const Word b = in_mem ? mem.read_word(ip + ws) : 0;

  bool bit;
  if (a == neg_one) {
    auto v = io.read_bit();
    if (!v) {
      if (limits.eof == EofPolicy::Halt) return RunStatus::InputExhausted;
      v = false;
    }
    bit = *v;
  } else {
    bit = mem.get_bit(a);
  }

  if (b == neg_one) {
    io.write_bit(bit);
  } else if (!mem.set_bit(b, bit, limits.max_memory_bits)) {
    return RunStatus::MemoryLimit;
  }

  const Word c = in_mem ? mem.read_word(ip + 2 * ws) : 0;
  if (trace != nullptr) {
    *trace << s.steps << ' ' << ip << ' ' << a << ' ' << b << ' ' << (bit ? 1 : 0) << ' ' << c
           << '\n';
    trace->flush();
  }
  ++s.steps;
  if (c == neg_one) {
    s.halted = true;
    return RunStatus::Halted;
  }
  s.ip = c;
  return RunStatus::Running;
}

}  // namespace

RunStatus step(MachineState& state, BitIo& io, const RunLimits& limits, std::ostream* trace) {
  if (state.halted) return RunStatus::Halted;
  return step_impl(state, io, limits, trace);
}

RunResult run(MachineState& state, BitIo& io, const RunLimits& limits, std::ostream* trace) {
  RunStatus status = state.halted ? RunStatus::Halted : RunStatus::Running;
  if (trace == nullptr) {
    while (status == RunStatus::Running && state.steps < limits.max_steps)
      status = step_impl(state, io, limits, nullptr);
  } else {
    while (status == RunStatus::Running && state.steps < limits.max_steps)
      status = step_impl(state, io, limits, trace);
  }
  if (status == RunStatus::Running) status = RunStatus::StepLimit;

  RunResult r;
  r.status = status;
  r.steps = state.steps;
  r.peak_memory_bits = state.memory.length_bits();
  r.discarded_output_bits = io.discard_pending_output();
  return r;
}

MachineState load_object(const ObjectProgram& obj, const RunLimits& limits) {
  MachineState s(obj.spec);
  const unsigned ws = obj.spec.word_size;
  for (std::size_t i = 0; i < obj.words.size(); ++i) {
    if (!s.memory.write_word(i * ws, obj.spec.reduce(obj.words[i]), limits.max_memory_bits))
      throw std::length_error("program of " + std::to_string(obj.words.size()) +
                              " cells exceeds the memory limit of " +
                              std::to_string(limits.max_memory_bits) + " bits");
  }
  return s;
}

}  // namespace bbj
