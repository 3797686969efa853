#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tiledrive/error.hpp"

namespace td {

// Loop-nest IR for host driver programs that feed a streaming MatMul
// accelerator. Element type is fixed at 32-bit signed integers.

struct Dims {
  int64_t m = 0;
  int64_t n = 0;
  int64_t k = 0;
};

struct Tiling {
  int64_t tm = 0;
  int64_t tn = 0;
  int64_t tk = 0;
};

enum class MemSpace { Heap, Dma };

struct Buffer {
  std::string id;
  MemSpace space = MemSpace::Heap;
  int64_t rows = 0;
  int64_t cols = 0;

  int64_t elems() const { return rows * cols; }
};

// Either a constant or one enclosing loop's induction variable. Nothing
// affine; passes that would need iv+c arithmetic must bail out instead.
struct IndexExpr {
  enum class Kind { Const, Iv } kind = Kind::Const;
  int64_t value = 0;  // Kind::Const
  std::string iv;     // Kind::Iv

  static IndexExpr constant(int64_t v) { return {Kind::Const, v, {}}; }
  static IndexExpr var(std::string name) {
    return {Kind::Iv, 0, std::move(name)};
  }
  bool is_const() const { return kind == Kind::Const; }
};

struct TileRef {
  std::string base;  // id of the underlying Buffer
  IndexExpr row_start;
  IndexExpr col_start;
  int64_t rows = 0;
  int64_t cols = 0;

  int64_t elems() const { return rows * cols; }
};

// A raw 32-bit word in the command stream (opcode or packed config). Costs
// one element of stream traffic when sent.
struct InstructionWord {
  uint32_t value = 0;
};

using PayloadItem = std::variant<InstructionWord, TileRef>;

enum class RecvMode { Accumulate, Overwrite };

struct Op;

struct SendLiteralOp {
  InstructionWord word;
};

// One input-channel transaction. A coalesced send carries several literals
// and tiles back to back in a single burst.
struct SendOp {
  std::vector<PayloadItem> payload;
};

struct RecvOp {
  TileRef target;
  RecvMode mode = RecvMode::Accumulate;
};

struct ForOp {
  std::string iv;
  int64_t lower = 0;
  int64_t upper = 0;
  int64_t step = 1;
  std::vector<Op> body;
};

struct Op {
  std::variant<SendLiteralOp, SendOp, RecvOp, ForOp> node;
};

struct AccelRequirements {
  bool needs_double_buffer = false;
};

// Allocations live in `buffers` (program scope); the body never contains
// them. By convention buffers[0]/[1]/[2] are the A (m x k), B (k x n) and
// C (m x n) matrices of the driver.
struct Program {
  std::string name;
  Dims dims;
  Tiling tiling;
  std::vector<Buffer> buffers;
  std::vector<Op> body;
  AccelRequirements accel_requirements;
};

// Diagnostics from validate() and parse_ir().
struct Diagnostic {
  std::string code;     // stable identifier, e.g. "TileOutOfBounds"
  std::string message;  // human readable detail
  std::string path;     // op path like "body[1].body[0].body[2]", or line:col
};

std::string to_string(const Diagnostic& d);

// Emits the canonical tiled driver: config literal up front, then a triple
// loop over (i, j, k) with steps (tm, tn, tk) whose innermost body loads one
// A tile and one B tile (each preceded by its opcode literal) and receives
// the C tile with accumulate semantics. All buffers start on the heap.
// Throws Err::NonDividingTiling when the tiling does not divide the dims.
Program build_tiled_matmul_driver(const Dims& dims, const Tiling& tiling);

// Structural checks: declared buffers, in-scope induction variables, tile
// bounds under every reachable iv binding, non-empty loops and payloads,
// receive targets shaped tm x tn, divisibility of the tiling, and the
// double-buffer requirement flag for pipelined shapes. Empty result means
// the program is valid.
std::vector<Diagnostic> validate(const Program& program);

// Textual form. print_ir is total on valid programs and deterministic;
// parse_ir accepts exactly what print_ir emits (modulo whitespace and
// comments) and validates the result.
std::string print_ir(const Program& program);

struct ParseResult {
  std::optional<Program> program;
  std::vector<Diagnostic> diagnostics;
};

ParseResult parse_ir(const std::string& text);

// Alpha-equivalence: buffer ids and induction variable names may differ,
// everything else (dims, tiling, spaces, shapes, op structure, literals,
// modes, the double-buffer flag, the program name) must match.
bool structurally_equal(const Program& a, const Program& b);

}  // namespace td
