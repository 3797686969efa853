#include "tiledrive/oracle.hpp"

#include <algorithm>

#include "tiledrive/sim.hpp"

namespace td {

Matrix seeded_matrix(int64_t rows, int64_t cols, uint32_t seed) {
  Matrix m(rows, cols);
  SeededLcg rng(seed);
  for (int64_t r = 0; r < rows; ++r) {
    for (int64_t c = 0; c < cols; ++c) {
      m.at(r, c) = rng.next_elem();
    }
  }
  return m;
}

Matrix reference_matmul(const Matrix& a, const Matrix& b, const Matrix& c0) {
  if (a.cols != b.rows || c0.rows != a.rows || c0.cols != b.cols) {
    fail(Err::ShapeMismatch, "matmul operands do not conform");
  }
  Matrix out = c0;
  for (int64_t r = 0; r < a.rows; ++r) {
    for (int64_t c = 0; c < b.cols; ++c) {
      int64_t acc = out.at(r, c);
      for (int64_t x = 0; x < a.cols; ++x) {
        acc += static_cast<int64_t>(a.at(r, x)) *
               static_cast<int64_t>(b.at(x, c));
      }
      out.at(r, c) = static_cast<int32_t>(acc);
    }
  }
  return out;
}

VariantSpec make_variant(const Dims& dims, const Tiling& tiling,
                         const std::vector<PassName>& passes,
                         const MachineModel& model) {
  auto has = [&](PassName p) {
    return std::find(passes.begin(), passes.end(), p) != passes.end();
  };
  VariantSpec v;
  v.dims = dims;
  v.tiling = tiling;
  v.dma_alloc = has(PassName::DmaAlloc);
  v.coalesce = has(PassName::Coalesce);
  v.pipeline = has(PassName::Pipeline);
  v.model = model;
  return v;
}

uint64_t analytic_makespan(const VariantSpec& spec) {
  const Dims& d = spec.dims;
  const Tiling& t = spec.tiling;
  if (d.m <= 0 || d.n <= 0 || d.k <= 0) {
    fail(Err::InvalidArg, "dims must be positive");
  }
  if (t.tm <= 0 || t.tn <= 0 || t.tk <= 0 || d.m % t.tm != 0 ||
      d.n % t.tn != 0 || d.k % t.tk != 0) {
    fail(Err::NonDividingTiling, "tiling must evenly divide the dims");
  }
  validate_model(spec.model);
  encode_config_literal(t);  // same well-formedness gate as the builder
  if (spec.pipeline && !spec.model.accel.double_buffered) {
    fail(Err::DoubleBufferRequired,
         "pipelined variant needs a double-buffered accelerator");
  }

  const DmaModel& dma = spec.model.dma;
  const HostModel& host = spec.model.host;
  uint64_t cc = compute_cycles(t, spec.model.accel);
  uint64_t sync = static_cast<uint64_t>(dma.sync_cycles);
  auto first = [&](int64_t n) {
    return transfer_cycles(n, Position::First, dma);
  };
  auto queued = [&](int64_t n) {
    return transfer_cycles(n, Position::Queued, dma);
  };
  int64_t ea = t.tm * t.tk;
  int64_t eb = t.tk * t.tn;
  int64_t ec = t.tm * t.tn;
  // With DMA-resident input buffers the host skips the staging copy.
  uint64_t copy_a = spec.dma_alloc ? 0 : host.copy_per_elem * uint64_t(ea);
  uint64_t copy_b = spec.dma_alloc ? 0 : host.copy_per_elem * uint64_t(eb);
  uint64_t fold_c = host.acc_per_elem * static_cast<uint64_t>(ec);
  int64_t nm = d.m / t.tm, nn = d.n / t.tn, nk = d.k / t.tk;

  uint64_t h = sync + first(1);  // configuration word

  // Streams one iteration's input tiles and returns the cycle at which they
  // are resident. The position resets every loop iteration, so the first
  // transaction of a group always pays the full handshake.
  auto load_group = [&]() {
    if (spec.coalesce) {
      h += sync + copy_a + copy_b + first(2 + ea + eb);
    } else {
      h += sync + first(1);            // load-A opcode
      h += sync + copy_a + queued(ea); // A tile
      h += sync + queued(1);           // load-B opcode
      h += sync + copy_b + queued(eb); // B tile
    }
    return h;
  };
  // Drains one finished product: wait for it, sync, stream it back, fold.
  auto drain = [&](uint64_t compute_end) {
    h = std::max(h, compute_end);
    h += sync;
    uint64_t store_end = h + first(ec);
    h = store_end + fold_c;
    return store_end;
  };

  if (!spec.pipeline) {
    // One product in flight; the PE is free again once the previous result
    // was both computed and stored.
    uint64_t pe_gate = 0;
    for (int64_t i = 0; i < nm * nn * nk; ++i) {
      uint64_t resident = load_group();
      uint64_t compute_end = std::max(resident, pe_gate) + cc;
      uint64_t store_end = drain(compute_end);
      pe_gate = std::max(compute_end, store_end);
    }
    return h;
  }

  // Pipelined: per (i, j) block the loads of step t overlap the compute of
  // step t - 1, whose result is drained right after.
  uint64_t pe_gate = 0;
  for (int64_t ij = 0; ij < nm * nn; ++ij) {
    uint64_t resident = load_group();  // prologue, k-index 0
    uint64_t ce_prev = std::max(resident, pe_gate) + cc;
    for (int64_t step = 1; step < nk; ++step) {
      resident = load_group();
      uint64_t store_end = drain(ce_prev);
      uint64_t start = std::max(resident, std::max(ce_prev, store_end));
      ce_prev = start + cc;
    }
    uint64_t store_end = drain(ce_prev);
    pe_gate = std::max(ce_prev, store_end);
  }
  return h;
}

std::vector<VerifyOutcome> verify_equivalence(
    const Program& program, const MachineModel& model,
    const std::vector<uint32_t>& seeds) {
  std::vector<VerifyOutcome> out;
  out.reserve(seeds.size());
  for (uint32_t seed : seeds) {
    SimInputs in{seeded_matrix(program.dims.m, program.dims.k, seed),
                 seeded_matrix(program.dims.k, program.dims.n, seed + 1),
                 seeded_matrix(program.dims.m, program.dims.n, seed + 2)};
    Matrix want = reference_matmul(in.a, in.b, in.c);
    SimResult got = simulate(program, model, in);
    VerifyOutcome o;
    o.seed = seed;
    o.ok = true;
    for (int64_t r = 0; r < want.rows && o.ok; ++r) {
      for (int64_t c = 0; c < want.cols; ++c) {
        if (got.c.at(r, c) != want.at(r, c)) {
          o.ok = false;
          o.row = r;
          o.col = c;
          break;
        }
      }
    }
    out.push_back(o);
  }
  return out;
}

}  // namespace td
