#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include "tiledrive/error.hpp"
#include "tiledrive/ir.hpp"
#include "tiledrive/machine.hpp"
#include "tiledrive/oracle.hpp"
#include "tiledrive/passes.hpp"
#include "tiledrive/sim.hpp"

using namespace td;

namespace {

SimInputs seeded_inputs(const Dims& d, uint32_t seed) {
  return {seeded_matrix(d.m, d.k, seed), seeded_matrix(d.k, d.n, seed + 1),
          seeded_matrix(d.m, d.n, seed + 2)};
}

SimResult run(const Dims& d, const Tiling& t, std::vector<PassName> passes,
              MachineModel model = default_model(), uint32_t seed = 1) {
  Program p = run_passes(build_tiled_matmul_driver(d, t), passes,
                         AccelCaps{model.accel.double_buffered});
  return simulate(p, model, seeded_inputs(d, seed));
}

Program parsed(const char* text) {
  ParseResult r = parse_ir(text);
  REQUIRE(r.program.has_value());
  return *r.program;
}

Err code_of_sim(const Program& p, const MachineModel& m, const SimInputs& in) {
  try {
    simulate(p, m, in);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected the simulation to fail");
  return Err::InvalidArg;
}

}  // namespace

TEST_CASE("single-tile baseline ledger, cycle for cycle") {
  SimResult r = run({4, 4, 4}, {4, 4, 4}, {});
  const SimReport& rep = r.report;
  CHECK(rep.makespan == 979);
  CHECK(rep.host_sync == 600);
  CHECK(rep.host_copy == 128);
  CHECK(rep.host_accumulate == 16);
  CHECK(rep.host_idle == 4);
  CHECK(rep.accel_load_a == 66);
  CHECK(rep.accel_load_b == 26);
  CHECK(rep.accel_compute == 4);
  CHECK(rep.accel_store == 66);
  CHECK(rep.accel_idle == 817);
  CHECK(rep.send_txns == 5);
  CHECK(rep.recv_txns == 1);
  CHECK(rep.utilization == doctest::Approx(4.0 / 979.0).epsilon(1e-12));
}

TEST_CASE("full problem makespans across the rewrite lattice") {
  struct Row {
    int mask;
    uint64_t want16, want4;
  };
  // mask bits: 1 dma-alloc, 2 coalesce, 4 pipeline
  const Row rows[] = {
      {0, 53143, 979}, {1, 44951, 851}, {2, 32023, 649}, {3, 23831, 521},
      {4, 52887, 979}, {5, 44695, 851}, {6, 31767, 649}, {7, 23575, 521},
  };
  for (const Row& row : rows) {
    std::vector<PassName> passes;
    if (row.mask & 1) passes.push_back(PassName::DmaAlloc);
    if (row.mask & 2) passes.push_back(PassName::Coalesce);
    if (row.mask & 4) passes.push_back(PassName::Pipeline);
    CAPTURE(row.mask);
    CHECK(run({16, 16, 16}, {4, 4, 4}, passes).report.makespan == row.want16);
    CHECK(run({4, 4, 4}, {4, 4, 4}, passes).report.makespan == row.want4);
  }
}

TEST_CASE("transaction counts collapse under coalescing only") {
  SimResult base = run({16, 16, 16}, {4, 4, 4}, {});
  CHECK(base.report.send_txns == 257);
  CHECK(base.report.recv_txns == 64);
  SimResult co = run({16, 16, 16}, {4, 4, 4}, {PassName::Coalesce});
  CHECK(co.report.send_txns == 65);
  CHECK(co.report.recv_txns == 64);
  SimResult all = run({16, 16, 16}, {4, 4, 4},
                      {PassName::DmaAlloc, PassName::Coalesce,
                       PassName::Pipeline});
  CHECK(all.report.send_txns == 65);
  CHECK(all.report.recv_txns == 64);
}

TEST_CASE("a rectangular problem scales the single-tile ledger") {
  SimResult r = run({8, 4, 4}, {4, 4, 4}, {});
  CHECK(r.report.makespan == 1807);
  CHECK(r.report.recv_txns == 2);
}

TEST_CASE("per-iteration stage gap equals the handshake premium") {
  // With square tiles the A and B tiles are the same size, so the only
  // difference between their stage charges is first-vs-queued position.
  for (int64_t t : {2, 4}) {
    MachineModel model = default_model();
    model.accel.pe_rows = t;
    model.accel.pe_cols = t;
    SimResult r = run({16, 16, 16}, {t, t, t}, {}, model);
    uint64_t iters = (16 / t) * (16 / t) * (16 / t);
    CHECK(r.report.accel_load_a % iters == 0);
    CHECK(r.report.accel_load_b % iters == 0);
    uint64_t gap = r.report.accel_load_a / iters - r.report.accel_load_b / iters;
    CHECK(gap == static_cast<uint64_t>(model.dma.first_beat -
                                       model.dma.queued_overhead));
  }
}

TEST_CASE("accelerator ledger partitions the makespan") {
  for (int mask = 0; mask < 8; ++mask) {
    std::vector<PassName> passes;
    if (mask & 1) passes.push_back(PassName::DmaAlloc);
    if (mask & 2) passes.push_back(PassName::Coalesce);
    if (mask & 4) passes.push_back(PassName::Pipeline);
    SimResult r = run({8, 8, 8}, {4, 4, 4}, passes);
    const SimReport& rep = r.report;
    CHECK(rep.accel_load_a + rep.accel_load_b + rep.accel_compute +
              rep.accel_store + rep.accel_idle ==
          rep.makespan);
    CHECK(rep.utilization ==
          doctest::Approx(double(rep.accel_compute) / double(rep.makespan)));
  }
}

TEST_CASE("coalescing and buffer placement never hurt") {
  for (bool dma : {false, true}) {
    for (bool pipe : {false, true}) {
      std::vector<PassName> without, with;
      if (dma) {
        without.push_back(PassName::DmaAlloc);
        with.push_back(PassName::DmaAlloc);
      }
      with.push_back(PassName::Coalesce);
      if (pipe) {
        without.push_back(PassName::Pipeline);
        with.push_back(PassName::Pipeline);
      }
      uint64_t plain = run({16, 8, 16}, {4, 4, 4}, without).report.makespan;
      uint64_t merged = run({16, 8, 16}, {4, 4, 4}, with).report.makespan;
      CHECK(merged <= plain);
    }
  }
}

TEST_CASE("simulated output matches the exact product") {
  for (uint32_t seed : {2u, 19u, 4096u}) {
    Dims d{8, 8, 8};
    SimInputs in = seeded_inputs(d, seed);
    Matrix want = reference_matmul(in.a, in.b, in.c);
    SimResult got = run(d, {4, 4, 4}, {PassName::DmaAlloc, PassName::Coalesce,
                                       PassName::Pipeline},
                        default_model(), seed);
    CHECK(got.c == want);
  }
}

TEST_CASE("integer wraparound matches the reference") {
  Dims d{4, 4, 4};
  SimInputs in{Matrix(4, 4), Matrix(4, 4), Matrix(4, 4)};
  // Large enough that every dot product overflows int32 (the fold must wrap
  // exactly like the reference), small enough that the 64-bit intermediate
  // stays exact.
  for (int64_t r = 0; r < 4; ++r) {
    for (int64_t c = 0; c < 4; ++c) {
      in.a.at(r, c) = (r == c) ? (1 << 21) + 7 : 1 << 20;
      in.b.at(r, c) = (r <= c) ? 3 << 19 : -(1 << 20);
      in.c.at(r, c) = INT32_MIN + 17;
    }
  }
  Matrix want = reference_matmul(in.a, in.b, in.c);
  Program p = build_tiled_matmul_driver(d, {4, 4, 4});
  CHECK(simulate(p, default_model(), in).c == want);
}

TEST_CASE("overwrite receive replaces instead of folding") {
  Program p = parsed(
      "func f (m=4, n=4, k=4, tm=4, tn=4, tk=4) {\n"
      "  %A = alloc <4x4>\n  %B = alloc <4x4>\n  %C = alloc <4x4>\n"
      "  accel.send(%A[0,0]<4x4>)\n"
      "  accel.send(%B[0,0]<4x4>)\n"
      "  accel.recv {mode=\"overwrite\"} (%C[0,0]<4x4>)\n"
      "}\n");
  Dims d{4, 4, 4};
  SimInputs in = seeded_inputs(d, 5);  // nonzero initial C must be discarded
  Matrix want = reference_matmul(in.a, in.b, Matrix(4, 4));
  SimResult r = simulate(p, default_model(), in);
  CHECK(r.c == want);
  // heap target pays the copy-back: 16 elements at copy_per_elem
  CHECK(r.report.host_copy == 4 * 16 + 4 * 16 + 4 * 16);
  CHECK(r.report.host_accumulate == 0);
}

TEST_CASE("overwrite into a DMA-resident target skips the copy-back") {
  Program p = parsed(
      "func f (m=4, n=4, k=4, tm=4, tn=4, tk=4) {\n"
      "  %A = alloc #dma <4x4>\n  %B = alloc #dma <4x4>\n"
      "  %C = alloc #dma <4x4>\n"
      "  accel.send(%A[0,0]<4x4>)\n"
      "  accel.send(%B[0,0]<4x4>)\n"
      "  accel.recv {mode=\"overwrite\"} (%C[0,0]<4x4>)\n"
      "}\n");
  SimResult r = simulate(p, default_model(), seeded_inputs({4, 4, 4}, 5));
  CHECK(r.report.host_copy == 0);
  CHECK(r.report.host_accumulate == 0);
}

TEST_CASE("tiles snapshot their data at send time") {
  // The first product lands in A itself; the second send must see the
  // updated A while the first pairing used the original.
  Program p = parsed(
      "func f (m=2, n=2, k=2, tm=2, tn=2, tk=2) {\n"
      "  %A = alloc <2x2>\n  %B = alloc <2x2>\n  %C = alloc <2x2>\n"
      "  accel.send(%A[0,0]<2x2>)\n"
      "  accel.send(%B[0,0]<2x2>)\n"
      "  accel.recv {mode=\"overwrite\"} (%A[0,0]<2x2>)\n"
      "  accel.send(%A[0,0]<2x2>)\n"
      "  accel.send(%B[0,0]<2x2>)\n"
      "  accel.recv {mode=\"overwrite\"} (%C[0,0]<2x2>)\n"
      "}\n");
  MachineModel model = default_model();
  model.accel.pe_rows = 2;
  model.accel.pe_cols = 2;
  SimInputs in{Matrix(2, 2), Matrix(2, 2), Matrix(2, 2)};
  in.a.at(0, 0) = 1; in.a.at(0, 1) = 2; in.a.at(1, 0) = 3; in.a.at(1, 1) = 4;
  in.b.at(0, 0) = 5; in.b.at(0, 1) = 6; in.b.at(1, 0) = 7; in.b.at(1, 1) = 8;
  SimResult r = simulate(p, model, in);
  Matrix ab = reference_matmul(in.a, in.b, Matrix(2, 2));
  Matrix abb = reference_matmul(ab, in.b, Matrix(2, 2));
  CHECK(r.c == abb);
}

TEST_CASE("receive with nothing computed deadlocks") {
  Program no_loads = parsed(
      "func f (m=4, n=4, k=4, tm=4, tn=4, tk=4) {\n"
      "  %C = alloc <4x4>\n"
      "  accel.recv {mode=\"accumulate\"} (%C[0,0]<4x4>)\n"
      "}\n");
  SimInputs in{Matrix(4, 4), Matrix(4, 4), Matrix(4, 4)};
  // the canonical buffer triple is required
  CHECK(code_of_sim(no_loads, default_model(), in) == Err::Validation);

  Program half_pair = parsed(
      "func f (m=4, n=4, k=4, tm=4, tn=4, tk=4) {\n"
      "  %A = alloc <4x4>\n  %B = alloc <4x4>\n  %C = alloc <4x4>\n"
      "  accel.send(%A[0,0]<4x4>)\n"
      "  accel.recv {mode=\"accumulate\"} (%C[0,0]<4x4>)\n"
      "}\n");
  CHECK(code_of_sim(half_pair, default_model(), in) == Err::Deadlock);
}

TEST_CASE("input banks are a hard limit without a receive to free them") {
  Program two_a = parsed(
      "func f (m=8, n=4, k=4, tm=4, tn=4, tk=4) {\n"
      "  %A = alloc <8x4>\n  %B = alloc <4x4>\n  %C = alloc <8x4>\n"
      "  accel.send(%A[0,0]<4x4>)\n"
      "  accel.send(%A[4,0]<4x4>)\n"
      "  accel.send(%B[0,0]<4x4>)\n"
      "  accel.send(%B[0,0]<4x4>)\n"
      "  accel.recv {mode=\"accumulate\"} (%C[0,0]<4x4>)\n"
      "  accel.recv {mode=\"accumulate\"} (%C[4,0]<4x4>)\n"
      "}\n");
  SimInputs in{Matrix(8, 4), Matrix(4, 4), Matrix(8, 4)};
  // two in-flight products fit a double-buffered accelerator
  CHECK_NOTHROW(simulate(two_a, default_model(), in));
  MachineModel single = default_model();
  single.accel.double_buffered = false;
  CHECK(code_of_sim(two_a, single, in) == Err::Deadlock);
}

TEST_CASE("simulation prechecks reject bad setups") {
  Program p = build_tiled_matmul_driver({8, 8, 8}, {4, 4, 4});
  SimInputs good{Matrix(8, 8), Matrix(8, 8), Matrix(8, 8)};
  SimInputs bad{Matrix(8, 4), Matrix(8, 8), Matrix(8, 8)};
  CHECK(code_of_sim(p, default_model(), bad) == Err::ShapeMismatch);

  MachineModel tiny = default_model();
  tiny.accel.pe_rows = 2;
  tiny.accel.pe_cols = 2;
  CHECK(code_of_sim(p, tiny, good) == Err::PeMismatch);

  MachineModel broken = default_model();
  broken.dma.queued_overhead = broken.dma.first_beat + 1;
  CHECK(code_of_sim(p, broken, good) == Err::InvalidArg);

  Program piped = apply_pipelining(p, AccelCaps{true});
  MachineModel single = default_model();
  single.accel.double_buffered = false;
  CHECK(code_of_sim(piped, single, good) == Err::DoubleBufferRequired);

  Program invalid = p;
  invalid.buffers[1].rows = 4;  // B no longer k x n
  CHECK(code_of_sim(invalid, default_model(), good) == Err::Validation);
}

TEST_CASE("an empty driver runs in zero cycles") {
  Program p = parsed("func f (m=4, n=4, k=4, tm=4, tn=4, tk=4) {\n"
                     "  %A = alloc <4x4>\n  %B = alloc <4x4>\n"
                     "  %C = alloc <4x4>\n}\n");
  SimInputs in{Matrix(4, 4), Matrix(4, 4), Matrix(4, 4)};
  SimResult r = simulate(p, default_model(), in);
  CHECK(r.report.makespan == 0);
  CHECK(r.report.utilization == 0.0);
  CHECK_THROWS_AS(breakdown(r.report), Error);
}

TEST_CASE("report serialization carries exactly the report fields") {
  SimResult r = run({4, 4, 4}, {4, 4, 4}, {});
  nlohmann::json j = nlohmann::json::parse(report_to_json(r.report));
  REQUIRE(j.is_object());
  CHECK(j.size() == 13);
  CHECK(j.at("makespan") == 979);
  CHECK(j.at("host_sync") == 600);
  CHECK(j.at("host_copy") == 128);
  CHECK(j.at("host_accumulate") == 16);
  CHECK(j.at("host_idle") == 4);
  CHECK(j.at("accel_load_a") == 66);
  CHECK(j.at("accel_load_b") == 26);
  CHECK(j.at("accel_compute") == 4);
  CHECK(j.at("accel_store") == 66);
  CHECK(j.at("accel_idle") == 817);
  CHECK(j.at("send_txns") == 5);
  CHECK(j.at("recv_txns") == 1);
  CHECK(j.at("utilization").get<double>() ==
        doctest::Approx(4.0 / 979.0).epsilon(1e-12));
}

TEST_CASE("occupancy percentages sum to the whole run") {
  SimResult r = run({16, 16, 16}, {4, 4, 4}, {PassName::Coalesce});
  Breakdown b = breakdown(r.report);
  CHECK(b.load_a + b.load_b + b.compute + b.store + b.other ==
        doctest::Approx(100.0).epsilon(1e-9));
  CHECK(b.compute == doctest::Approx(100.0 * 256.0 / 32023.0));
}
