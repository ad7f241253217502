#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "dlocker/dram.hpp"
#include "dlocker/types.hpp"

namespace dlocker {

using word16 = std::uint16_t;

enum class Opcode : std::uint8_t { Nop = 0b00, Copy = 0b01, Bnez = 0b10, Done = 0b11 };

// 16-bit control instruction.
// Layout: bits[15:14] opcode; Copy: [13:7] src reg, [6:0] dst reg;
// Bnez: [13:7] counter reg, [6:0] absolute target; Nop/Done: payload 0.
struct Instruction {
  Opcode op = Opcode::Nop;
  std::uint8_t a = 0;  // src reg / counter reg
  std::uint8_t b = 0;  // dst reg / branch target

  bool operator==(const Instruction&) const = default;

  static Instruction copy(std::uint8_t src, std::uint8_t dst) {
    return {Opcode::Copy, src, dst};
  }
  static Instruction bnez(std::uint8_t reg, std::uint8_t target) {
    return {Opcode::Bnez, reg, target};
  }
  static Instruction done() { return {Opcode::Done, 0, 0}; }
  static Instruction nop() { return {Opcode::Nop, 0, 0}; }
};

inline word16 encode(const Instruction& in) {
  return static_cast<word16>((static_cast<word16>(in.op) << 14) |
                             ((in.a & 0x7F) << 7) | (in.b & 0x7F));
}

inline Instruction decode(word16 w) {
  const auto op = static_cast<Opcode>(w >> 14);
  const auto a = static_cast<std::uint8_t>((w >> 7) & 0x7F);
  const auto b = static_cast<std::uint8_t>(w & 0x7F);
  if ((op == Opcode::Nop || op == Opcode::Done) && (w & 0x3FFF) != 0)
    throw invalid_payload("nop/done require a zero payload");
  return {op, a, b};
}

// Lowers SWAP into its three-copy sequence:
// locked -> buffer, free -> locked, buffer -> free.
inline std::vector<Instruction> assemble_swap(std::uint8_t locked_reg,
                                              std::uint8_t free_reg,
                                              std::uint8_t buffer_reg) {
  if (locked_reg == free_reg || locked_reg == buffer_reg ||
      free_reg == buffer_reg)
    throw degenerate_swap("swap registers must be distinct");
  return {Instruction::copy(locked_reg, buffer_reg),
          Instruction::copy(free_reg, locked_reg),
          Instruction::copy(buffer_reg, free_reg)};
}

// A uReg holds either a row address (copy operands) or a loop counter (bnez).
using RegValue = std::variant<std::monostate, RowAddress, std::uint64_t>;

struct RegFile {
  std::array<RegValue, 128> regs{};

  void set_row(std::uint8_t i, RowAddress a) { regs.at(i) = a; }
  void set_counter(std::uint8_t i, std::uint64_t v) { regs.at(i) = v; }

  const RowAddress& row(std::uint8_t i) const {
    const auto* p = std::get_if<RowAddress>(&regs.at(i));
    if (!p) throw type_confusion("uReg does not hold a row address");
    return *p;
  }
  std::uint64_t& counter(std::uint8_t i) {
    auto* p = std::get_if<std::uint64_t>(&regs.at(i));
    if (!p) throw type_confusion("uReg does not hold a counter");
    return *p;
  }
};

struct ProgramStep {
  std::size_t pc = 0;
  Instruction instr;
  ns_t latency = 0;
  bool copy_success = true;
};

struct ProgramTrace {
  std::vector<ProgramStep> steps;
  ns_t total_latency = 0;
  bool halted = false;
};

// Executes a program of 16-bit words against DRAM. Copy issues a trusted
// row_clone on the addresses held in the named uRegs.
inline ProgramTrace execute_program(const std::vector<word16>& words,
                                    RegFile& regs, DramState& dram, Rng& rng,
                                    std::size_t step_budget = 4096) {
  if (words.size() > 128) throw format_error("program exceeds 128 words");
  ProgramTrace trace;
  std::size_t pc = 0;
  for (std::size_t step = 0; step < step_budget; ++step) {
    if (pc >= words.size())
      throw nontermination("program ran off the end without done");
    const Instruction in = decode(words[pc]);
    ProgramStep ps;
    ps.pc = pc;
    ps.instr = in;
    switch (in.op) {
      case Opcode::Copy: {
        CopyResult cr = dram.row_clone(regs.row(in.a), regs.row(in.b), rng);
        ps.latency = cr.latency;
        ps.copy_success = cr.success;
        ++pc;
        break;
      }
      case Opcode::Bnez: {
        std::uint64_t& c = regs.counter(in.a);
        if (c > 0) --c;
        pc = (c != 0) ? in.b : pc + 1;
        break;
      }
      case Opcode::Done:
        trace.steps.push_back(ps);
        trace.halted = true;
        return trace;
      case Opcode::Nop:
        ++pc;
        break;
    }
    trace.steps.push_back(ps);
    trace.total_latency += ps.latency;
  }
  throw nontermination("step budget exhausted before done");
}

// --- textual assembly / binary program files ---

inline std::string to_assembly(const Instruction& in) {
  switch (in.op) {
    case Opcode::Copy:
      return "copy r" + std::to_string(in.a) + ", r" + std::to_string(in.b);
    case Opcode::Bnez:
      return "bnez r" + std::to_string(in.a) + ", " + std::to_string(in.b);
    case Opcode::Done:
      return "done";
    case Opcode::Nop:
      return "nop";
  }
  throw format_error("unreachable opcode");
}

inline Instruction parse_assembly_line(const std::string& line) {
  std::istringstream is(line);
  std::string mnem;
  is >> mnem;
  auto parse_reg = [&](bool comma_ok) -> std::uint8_t {
    std::string tok;
    is >> tok;
    if (comma_ok && !tok.empty() && tok.back() == ',') tok.pop_back();
    if (tok.size() < 2 || tok[0] != 'r')
      throw format_error("expected register operand, got '" + tok + "'");
    int v = std::stoi(tok.substr(1));
    if (v < 0 || v > 127) throw format_error("register index out of range");
    return static_cast<std::uint8_t>(v);
  };
  if (mnem == "copy") {
    std::uint8_t a = parse_reg(true);
    std::uint8_t b = parse_reg(false);
    return Instruction::copy(a, b);
  }
  if (mnem == "bnez") {
    std::uint8_t a = parse_reg(true);
    int t;
    if (!(is >> t) || t < 0 || t > 127)
      throw format_error("bnez target out of range");
    return Instruction::bnez(a, static_cast<std::uint8_t>(t));
  }
  if (mnem == "done") return Instruction::done();
  if (mnem == "nop") return Instruction::nop();
  throw format_error("unknown mnemonic: " + mnem);
}

inline std::vector<word16> assemble_text(std::istream& in) {
  std::vector<word16> words;
  std::string line;
  while (std::getline(in, line)) {
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    words.push_back(encode(parse_assembly_line(line.substr(first))));
  }
  return words;
}

inline void disassemble_text(const std::vector<word16>& words,
                             std::ostream& out) {
  for (word16 w : words) out << to_assembly(decode(w)) << "\n";
}

inline std::vector<word16> read_program_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open program file: " + path);
  std::vector<word16> words;
  std::uint8_t lo, hi;
  while (in.read(reinterpret_cast<char*>(&lo), 1) &&
         in.read(reinterpret_cast<char*>(&hi), 1))
    words.push_back(static_cast<word16>(lo | (hi << 8)));
  return words;
}

inline void write_program_binary(const std::vector<word16>& words,
                                 const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open output file: " + path);
  for (word16 w : words) {
    const char bytes[2] = {static_cast<char>(w & 0xFF),
                           static_cast<char>(w >> 8)};
    out.write(bytes, 2);
  }
}

}  // namespace dlocker
