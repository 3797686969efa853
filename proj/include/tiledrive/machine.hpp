#pragma once

#include <cstdint>
#include <string_view>

#include "tiledrive/error.hpp"

namespace td {

struct Tiling;  // ir.hpp

// Cost model for the host, the DMA engine and the accelerator. All costs are
// in cycles; elements are 32-bit words, so element count equals beat count.
//
// The timing rules everyone else builds on:
//
//  * Every host-visible accelerator operation (send, receive) pays
//    sync_cycles of driver setup before anything moves.
//  * A DMA transaction costs a position-dependent overhead plus one per_beat
//    per word. The first transaction after an iteration boundary pays
//    first_beat (the head of a fresh burst), later ones in the same
//    iteration pay queued_overhead because the engine is already streaming.
//  * The store (output) channel has no queue to hide behind, so every store
//    transaction pays first_beat.

struct HostModel {
  uint64_t copy_per_elem = 4;  // staging copy, heap buffer to DMA window
  uint64_t acc_per_elem = 1;   // host-side accumulate of a received tile
};

struct DmaModel {
  uint64_t sync_cycles = 100;     // driver setup per transaction
  uint64_t first_beat = 50;       // latency of the first packet of a burst
  uint64_t queued_overhead = 10;  // latency of a queued follow-on packet
  uint64_t per_beat = 1;          // per word streamed
};

struct AccelModel {
  int64_t pe_rows = 4;
  int64_t pe_cols = 4;
  bool double_buffered = true;

  // Input banks on the accelerator. Double buffering gives one bank to fill
  // while another is being consumed.
  int banks() const { return double_buffered ? 2 : 1; }
};

struct MachineModel {
  HostModel host;
  DmaModel dma;
  AccelModel accel;
};

MachineModel default_model();

// Throws Err::InvalidArg when a model violates its own constraints
// (queued_overhead must not exceed first_beat, PE grid must be positive).
void validate_model(const MachineModel& model);

// Named access to the scalar model fields, shared by the C API and the CLI
// JSON schema. double_buffered is exposed as 0/1. Returns false for an
// unknown key.
bool set_model_field(MachineModel& model, std::string_view key, int64_t value);
bool get_model_field(const MachineModel& model, std::string_view key,
                     int64_t& value);

enum class Position { First, Queued };

// Cycles a DMA transaction of n_elems words occupies its channel.
uint64_t transfer_cycles(int64_t n_elems, Position pos, const DmaModel& dma);

// Cycles the PE grid needs for one tile product. The grid is output
// stationary over a tm x tn tile, so tm and tn must match the grid exactly;
// tk sweeps through the array. Throws Err::PeMismatch otherwise.
uint64_t compute_cycles(const Tiling& tiling, const AccelModel& accel);

// Opcode words understood by the accelerator's command stream.
inline constexpr uint32_t kOpcConfig = 0x10;
inline constexpr uint32_t kOpcLoadA = 0x11;
inline constexpr uint32_t kOpcLoadB = 0x12;

// Packs a tiling into the 32-bit configuration word: tm in bits 0..9,
// tn in bits 10..19, tk in bits 20..29. Fields must fit in 10 bits;
// throws Err::FieldOverflow otherwise.
uint32_t encode_config_literal(const Tiling& tiling);

}  // namespace td
