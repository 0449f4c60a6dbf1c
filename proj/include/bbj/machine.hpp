#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>

#include "bbj/memory.hpp"
#include "bbj/object.hpp"

namespace bbj {

enum class RunStatus { Running, Halted, StepLimit, MemoryLimit, InputExhausted };

std::string_view status_name(RunStatus s);
// Process exit code for a finished run: 0 halted, 2 step limit, 3 memory
// limit, 4 input exhausted.
int exit_code(RunStatus s);

enum class EofPolicy { Halt, FeedZero };

struct RunLimits {
  std::uint64_t max_steps = 10'000'000'000ULL;
  std::uint64_t max_memory_bits = std::uint64_t{1} << 26;
  EofPolicy eof = EofPolicy::Halt;
};

// Bit streams behind address -1. Bytes map to bits least significant first.
class BitIo {
 public:
  BitIo(std::istream* in, std::ostream* out) : in_(in), out_(out) {}

  // Empty when the input is exhausted.
  std::optional<bool> read_bit();
  void write_bit(bool v);

  unsigned pending_output_bits() const { return out_count_; }
  // Drops a partial output byte and returns how many bits were lost.
  unsigned discard_pending_output();
  std::uint64_t bytes_written() const { return bytes_written_; }

 private:
  std::istream* in_;
  std::ostream* out_;
  unsigned in_byte_ = 0;
  unsigned in_count_ = 0;
  unsigned out_byte_ = 0;
  unsigned out_count_ = 0;
  std::uint64_t bytes_written_ = 0;
};

struct MachineState {
  BitMemory memory;
  BitAddress ip = 0;
  std::uint64_t steps = 0;
  bool halted = false;

  explicit MachineState(WordSpec spec) : memory(spec) {}
};

struct RunResult {
  RunStatus status = RunStatus::Running;
  std::uint64_t steps = 0;
  std::uint64_t peak_memory_bits = 0;
  unsigned discarded_output_bits = 0;

  friend bool operator==(const RunResult&, const RunResult&) = default;
};

// Executes one instruction at ip. Operand C is read after the copy. When
// trace is set a line "step ip a b bit c" is written for the step.
RunStatus step(MachineState& state, BitIo& io, const RunLimits& limits,
               std::ostream* trace = nullptr);

// Steps until halt, a limit, or input exhaustion, then drops partial output.
RunResult run(MachineState& state, BitIo& io, const RunLimits& limits,
              std::ostream* trace = nullptr);

// Throws std::length_error if the program does not fit max_memory_bits.
MachineState load_object(const ObjectProgram& obj, const RunLimits& limits);

}  // namespace bbj
