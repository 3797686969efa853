#include "tiledrive/machine.hpp"

#include "tiledrive/ir.hpp"

namespace td {

const char* err_name(Err e) {
  switch (e) {
    case Err::InvalidArg: return "InvalidArg";
    case Err::NonDividingTiling: return "NonDividingTiling";
    case Err::FieldOverflow: return "FieldOverflow";
    case Err::Parse: return "Parse";
    case Err::Validation: return "Validation";
    case Err::NoDoubleBuffer: return "NoDoubleBuffer";
    case Err::UnsupportedShape: return "UnsupportedShape";
    case Err::PeMismatch: return "PeMismatch";
    case Err::DoubleBufferRequired: return "DoubleBufferRequired";
    case Err::ShapeMismatch: return "ShapeMismatch";
    case Err::EmptyRun: return "EmptyRun";
    case Err::Deadlock: return "Deadlock";
    case Err::VerifyFailed: return "VerifyFailed";
    case Err::Json: return "Json";
    case Err::Io: return "Io";
  }
  return "Unknown";
}

MachineModel default_model() { return MachineModel{}; }

void validate_model(const MachineModel& model) {
  if (model.dma.queued_overhead > model.dma.first_beat) {
    fail(Err::InvalidArg, "queued_overhead exceeds first_beat");
  }
  if (model.accel.pe_rows < 1 || model.accel.pe_cols < 1) {
    fail(Err::InvalidArg, "PE grid must be at least 1x1");
  }
}

bool set_model_field(MachineModel& m, std::string_view key, int64_t value) {
  if (key == "double_buffered") {
    m.accel.double_buffered = value != 0;
    return true;
  }
  if (key == "pe_rows" || key == "pe_cols") {
    if (value < 1) fail(Err::InvalidArg, std::string(key) + " must be >= 1");
    (key == "pe_rows" ? m.accel.pe_rows : m.accel.pe_cols) = value;
    return true;
  }
  if (value < 0) fail(Err::InvalidArg, std::string(key) + " must be >= 0");
  uint64_t v = static_cast<uint64_t>(value);
  if (key == "copy_per_elem") m.host.copy_per_elem = v;
  else if (key == "acc_per_elem") m.host.acc_per_elem = v;
  else if (key == "sync_cycles") m.dma.sync_cycles = v;
  else if (key == "first_beat") m.dma.first_beat = v;
  else if (key == "queued_overhead") m.dma.queued_overhead = v;
  else if (key == "per_beat") m.dma.per_beat = v;
  else return false;
  return true;
}

bool get_model_field(const MachineModel& m, std::string_view key,
                     int64_t& value) {
  if (key == "copy_per_elem") value = static_cast<int64_t>(m.host.copy_per_elem);
  else if (key == "acc_per_elem") value = static_cast<int64_t>(m.host.acc_per_elem);
  else if (key == "sync_cycles") value = static_cast<int64_t>(m.dma.sync_cycles);
  else if (key == "first_beat") value = static_cast<int64_t>(m.dma.first_beat);
  else if (key == "queued_overhead") value = static_cast<int64_t>(m.dma.queued_overhead);
  else if (key == "per_beat") value = static_cast<int64_t>(m.dma.per_beat);
  else if (key == "pe_rows") value = m.accel.pe_rows;
  else if (key == "pe_cols") value = m.accel.pe_cols;
  else if (key == "double_buffered") value = m.accel.double_buffered ? 1 : 0;
  else return false;
  return true;
}

uint64_t transfer_cycles(int64_t n_elems, Position pos, const DmaModel& dma) {
  if (n_elems < 0) fail(Err::InvalidArg, "negative element count");
  uint64_t overhead =
      pos == Position::First ? dma.first_beat : dma.queued_overhead;
  return overhead + static_cast<uint64_t>(n_elems) * dma.per_beat;
}

uint64_t compute_cycles(const Tiling& tiling, const AccelModel& accel) {
  if (tiling.tm != accel.pe_rows || tiling.tn != accel.pe_cols) {
    fail(Err::PeMismatch,
         "tile " + std::to_string(tiling.tm) + "x" + std::to_string(tiling.tn) +
             " does not match PE grid " + std::to_string(accel.pe_rows) + "x" +
             std::to_string(accel.pe_cols));
  }
  uint64_t work = static_cast<uint64_t>(tiling.tm) *
                  static_cast<uint64_t>(tiling.tn) *
                  static_cast<uint64_t>(tiling.tk);
  uint64_t grid = static_cast<uint64_t>(accel.pe_rows) *
                  static_cast<uint64_t>(accel.pe_cols);
  return (work + grid - 1) / grid;
}

uint32_t encode_config_literal(const Tiling& tiling) {
  for (int64_t f : {tiling.tm, tiling.tn, tiling.tk}) {
    if (f < 1 || f > 1023) {
      fail(Err::FieldOverflow,
           "tile field " + std::to_string(f) + " does not fit in 10 bits");
    }
  }
  return static_cast<uint32_t>(tiling.tm) |
         (static_cast<uint32_t>(tiling.tn) << 10) |
         (static_cast<uint32_t>(tiling.tk) << 20);
}

}  // namespace td
