#pragma once

#include <cstdint>
#include <vector>

#include "tiledrive/ir.hpp"
#include "tiledrive/machine.hpp"
#include "tiledrive/matrix.hpp"
#include "tiledrive/passes.hpp"

namespace td {

// Deterministic 32-bit linear congruential generator,
//   x_{n+1} = (1664525 * x_n + 1013904223) mod 2^32.
// Elements are drawn from the high byte and centred on zero:
//   elem = int32((x >> 24) & 0xFF) - 128, so each lies in [-128, 127].
// Fixed here so seeded matrices are reproducible across platforms.
class SeededLcg {
 public:
  explicit SeededLcg(uint32_t seed) : state_(seed) {}

  uint32_t next_u32() {
    state_ = 1664525u * state_ + 1013904223u;
    return state_;
  }

  int32_t next_elem() {
    return static_cast<int32_t>((next_u32() >> 24) & 0xFFu) - 128;
  }

 private:
  uint32_t state_;
};

// Row-major fill from the generator above.
Matrix seeded_matrix(int64_t rows, int64_t cols, uint32_t seed);

// Exact int32 product-and-add: result = c0 + a * b, computed with 64-bit
// intermediates and truncated per element. Throws ShapeMismatch when the
// operands do not conform.
Matrix reference_matmul(const Matrix& a, const Matrix& b, const Matrix& c0);

// A driver variant described by what was requested, not by its IR. The
// analytic model below prices this directly from the structure the builder
// and passes are known to produce.
struct VariantSpec {
  Dims dims;
  Tiling tiling;
  bool dma_alloc = false;
  bool coalesce = false;
  bool pipeline = false;
  MachineModel model = default_model();
};

VariantSpec make_variant(const Dims& dims, const Tiling& tiling,
                         const std::vector<PassName>& passes,
                         const MachineModel& model);

// Closed-form makespan for a variant. Mirrors the timed semantics of
// simulate() without building IR or replaying events; the two must agree
// cycle for cycle on every builder-produced driver.
uint64_t analytic_makespan(const VariantSpec& spec);

// One seeded equivalence check: inputs a, b and the initial accumulator are
// derived from seed, seed + 1 and seed + 2.
struct VerifyOutcome {
  uint32_t seed = 0;
  bool ok = false;
  int64_t row = -1;  // first mismatching element when !ok
  int64_t col = -1;
};

// Runs the simulator on seeded inputs and compares its output matrix with
// reference_matmul, one outcome per seed.
std::vector<VerifyOutcome> verify_equivalence(const Program& program,
                                              const MachineModel& model,
                                              const std::vector<uint32_t>& seeds);

}  // namespace td
