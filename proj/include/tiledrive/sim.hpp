#pragma once

#include <cstdint>
#include <string>

#include "tiledrive/ir.hpp"
#include "tiledrive/machine.hpp"
#include "tiledrive/matrix.hpp"

namespace td {

// Co-simulation of a driver program against the machine model. The engine is
// deterministic and works at whole-transaction granularity; there is no
// per-cycle stepping.
//
// Host semantics (the host runs ops strictly in program order):
//
//  * sendLiteral / send: pay sync_cycles, stage heap-resident tiles at
//    copy_per_elem per element, then block until the input-channel
//    transaction finishes. One op is one transaction; its position (first
//    or queued) depends on whether an input transaction already ran in the
//    current loop iteration. Entering a loop iteration resets the position.
//  * recv: block until the oldest undrained tile product is computed, pay
//    sync_cycles, block while the result streams out (stores always pay
//    first_beat), then fold the tile into the target on the host,
//    acc_per_elem per element for accumulate, copy_per_elem for overwrite
//    into a heap buffer and free for overwrite into a DMA buffer.
//
// Accelerator semantics: incoming A/B tiles pair up in arrival order into
// compute units. A unit occupies an input bank from the start of its first
// tile transfer until its product is computed; 2 banks when double
// buffered, 1 otherwise. A product starts once both tiles arrived, the
// previous product finished, and the previous result was drained, and it
// takes compute_cycles. Pipelined programs (needs_double_buffer) refuse to
// run on single-buffered models.
//
// The accel stage ledger reports service demand per tile in the spirit of a
// stage breakdown chart: the first tile streamed in an iteration is charged
// at first_beat plus its beats, later tiles at queued_overhead plus theirs;
// opcode words are control traffic and belong to no stage. These charges
// follow the load-group structure rather than exact channel occupancy, so
// accel_idle is the remainder of the makespan.

struct SimInputs {
  Matrix a;
  Matrix b;
  Matrix c;  // initial accumulator contents
};

struct SimReport {
  uint64_t makespan = 0;

  uint64_t host_copy = 0;
  uint64_t host_sync = 0;
  uint64_t host_accumulate = 0;
  uint64_t host_idle = 0;  // waiting on compute or a free input bank

  uint64_t accel_load_a = 0;
  uint64_t accel_load_b = 0;
  uint64_t accel_compute = 0;
  uint64_t accel_store = 0;
  uint64_t accel_idle = 0;

  uint64_t send_txns = 0;  // input-channel transactions, literals included
  uint64_t recv_txns = 0;

  double utilization = 0.0;  // accel_compute / makespan
};

// JSON object with exactly the SimReport field names. Deterministic.
std::string report_to_json(const SimReport& report);

struct SimResult {
  Matrix c;
  SimReport report;
};

// Runs the program. Throws Err::Validation when the program does not
// validate or its first three buffers are not an m x k, k x n, m x n
// triple, Err::ShapeMismatch when inputs do not match the dims,
// Err::PeMismatch when the tiling does not match the PE grid,
// Err::DoubleBufferRequired for pipelined programs on single-buffered
// models, and Err::Deadlock when the op order can never make progress.
SimResult simulate(const Program& program, const MachineModel& model,
                   const SimInputs& inputs);

// Stage shares of the makespan, in percent. Throws Err::EmptyRun when the
// makespan is zero.
struct Breakdown {
  double load_a = 0.0;
  double load_b = 0.0;
  double compute = 0.0;
  double store = 0.0;
  double other = 0.0;
};

Breakdown breakdown(const SimReport& report);

}  // namespace td
