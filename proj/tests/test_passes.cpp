#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "tiledrive/error.hpp"
#include "tiledrive/ir.hpp"
#include "tiledrive/machine.hpp"
#include "tiledrive/oracle.hpp"
#include "tiledrive/passes.hpp"
#include "tiledrive/sim.hpp"

using namespace td;

namespace {

const AccelCaps kDouble{true};
const AccelCaps kSingle{false};

const std::vector<Op>& innermost(const Program& p) {
  const std::vector<Op>* ops = &p.body;
  while (true) {
    const ForOp* next = nullptr;
    for (const Op& op : *ops) {
      if (const auto* loop = std::get_if<ForOp>(&op.node)) next = loop;
    }
    if (!next) return *ops;
    ops = &next->body;
  }
}

Program parsed(const char* text) {
  ParseResult r = parse_ir(text);
  REQUIRE(r.program.has_value());
  return *r.program;
}

}  // namespace

TEST_CASE("pass names round trip") {
  CHECK(to_string(PassName::DmaAlloc) == "dma-alloc");
  CHECK(to_string(PassName::Coalesce) == "coalesce");
  CHECK(to_string(PassName::Pipeline) == "pipeline");
  CHECK(parse_pass_name("dma-alloc") == PassName::DmaAlloc);
  CHECK(parse_pass_name("coalesce") == PassName::Coalesce);
  CHECK(parse_pass_name("pipeline") == PassName::Pipeline);
  CHECK_FALSE(parse_pass_name("vectorize").has_value());
}

TEST_CASE("dma allocation retags exactly the streamed buffers") {
  Program p = build_tiled_matmul_driver({8, 8, 8}, {4, 4, 4});
  Program q = apply_dma_allocation(p);
  for (const Buffer& b : q.buffers) CHECK(b.space == MemSpace::Dma);
  // untouched original
  for (const Buffer& b : p.buffers) CHECK(b.space == MemSpace::Heap);
  // body identical
  Program q2 = q;
  q2.buffers = p.buffers;
  CHECK(structurally_equal(p, q2));

  // a declared but never-streamed buffer stays on the heap
  Program scratch = parsed(
      "func f (m=4, n=4, k=4, tm=4, tn=4, tk=4) {\n"
      "  %A = alloc <4x4>\n"
      "  %B = alloc <4x4>\n"
      "  %C = alloc <4x4>\n"
      "  %S = alloc <4x4>\n"
      "  accel.send(%A[0,0]<4x4>)\n"
      "  accel.send(%B[0,0]<4x4>)\n"
      "  accel.recv {mode=\"accumulate\"} (%C[0,0]<4x4>)\n"
      "}\n");
  Program tagged = apply_dma_allocation(scratch);
  CHECK(tagged.buffers[0].space == MemSpace::Dma);
  CHECK(tagged.buffers[1].space == MemSpace::Dma);
  CHECK(tagged.buffers[2].space == MemSpace::Dma);  // receive target counts
  CHECK(tagged.buffers[3].space == MemSpace::Heap);

  CHECK(structurally_equal(apply_dma_allocation(tagged), tagged));
}

TEST_CASE("coalescing merges maximal send runs") {
  Program p = build_tiled_matmul_driver({8, 8, 8}, {4, 4, 4});
  Program q = apply_coalescing(p);
  CHECK(validate(q).empty());

  // the lone configuration word at the top stays a plain literal
  CHECK(std::holds_alternative<SendLiteralOp>(q.body[0].node));

  const std::vector<Op>& body = innermost(q);
  REQUIRE(body.size() == 2);
  const auto& send = std::get<SendOp>(body[0].node);
  REQUIRE(send.payload.size() == 4);
  CHECK(std::get<InstructionWord>(send.payload[0]).value == kOpcLoadA);
  CHECK(std::get<TileRef>(send.payload[1]).base == "A");
  CHECK(std::get<InstructionWord>(send.payload[2]).value == kOpcLoadB);
  CHECK(std::get<TileRef>(send.payload[3]).base == "B");
  CHECK(std::holds_alternative<RecvOp>(body[1].node));

  CHECK(structurally_equal(apply_coalescing(q), q));
}

TEST_CASE("coalescing leaves singletons and respects run breakers") {
  Program p = parsed(
      "func f (m=4, n=4, k=4, tm=4, tn=4, tk=4) {\n"
      "  %A = alloc <4x4>\n"
      "  %B = alloc <4x4>\n"
      "  %C = alloc <4x4>\n"
      "  accel.send(%A[0,0]<4x4>)\n"
      "  accel.send(%B[0,0]<4x4>)\n"
      "  accel.recv {mode=\"accumulate\"} (%C[0,0]<4x4>)\n"
      "  accel.send(%A[0,0]<4x4>)\n"
      "  accel.recv {mode=\"accumulate\"} (%C[0,0]<4x4>)\n"
      "}\n");
  Program q = apply_coalescing(p);
  REQUIRE(q.body.size() == 4);
  // first two sends merge; the one after the receive stays single
  const auto& merged = std::get<SendOp>(q.body[0].node);
  CHECK(merged.payload.size() == 2);
  const auto& single = std::get<SendOp>(q.body[2].node);
  CHECK(single.payload.size() == 1);
}

TEST_CASE("coalescing concatenates literal-only runs") {
  Program p = parsed(
      "func f (m=4, n=4, k=4, tm=4, tn=4, tk=4) {\n"
      "  accel.sendLiteral(0x00000010)\n"
      "  accel.sendLiteral(0x00401004)\n"
      "}\n");
  Program q = apply_coalescing(p);
  REQUIRE(q.body.size() == 1);
  const auto& send = std::get<SendOp>(q.body[0].node);
  REQUIRE(send.payload.size() == 2);
  CHECK(std::get<InstructionWord>(send.payload[0]).value == 0x10u);
  CHECK(std::get<InstructionWord>(send.payload[1]).value == 0x00401004u);
}

TEST_CASE("pipelining hoists the first load group and drains late") {
  Program p = build_tiled_matmul_driver({8, 8, 16}, {4, 4, 4});
  Program q = apply_pipelining(p, kDouble);
  CHECK(q.accel_requirements.needs_double_buffer);
  CHECK(validate(q).empty());

  const auto& i_loop = std::get<ForOp>(q.body[1].node);
  const auto& j_loop = std::get<ForOp>(i_loop.body[0].node);
  // [4 prologue ops, steady loop, epilogue receive]
  REQUIRE(j_loop.body.size() == 6);
  const auto& prologue_a = std::get<SendOp>(j_loop.body[1].node);
  const auto& tile_a = std::get<TileRef>(prologue_a.payload[0]);
  CHECK(tile_a.row_start.iv == "i");          // outer iv survives
  CHECK(tile_a.col_start.is_const());         // loop iv pinned to the base
  CHECK(tile_a.col_start.value == 0);
  const auto& steady = std::get<ForOp>(j_loop.body[4].node);
  CHECK(steady.lower == 4);
  CHECK(steady.upper == 16);
  CHECK(steady.step == 4);
  REQUIRE(steady.body.size() == 5);
  CHECK(std::holds_alternative<RecvOp>(steady.body[4].node));
  CHECK(std::holds_alternative<RecvOp>(j_loop.body[5].node));
}

TEST_CASE("pipelining a single-step loop drops the loop") {
  Program p = build_tiled_matmul_driver({8, 8, 4}, {4, 4, 4});
  Program q = apply_pipelining(p, kDouble);
  CHECK(q.accel_requirements.needs_double_buffer);
  const auto& i_loop = std::get<ForOp>(q.body[1].node);
  const auto& j_loop = std::get<ForOp>(i_loop.body[0].node);
  REQUIRE(j_loop.body.size() == 5);  // 4 loads + drain, no inner loop left
  for (const Op& op : j_loop.body) {
    CHECK_FALSE(std::holds_alternative<ForOp>(op.node));
  }
  CHECK(std::holds_alternative<RecvOp>(j_loop.body[4].node));
  CHECK(validate(q).empty());
}

TEST_CASE("pipelining needs hardware and a matching shape") {
  Program p = build_tiled_matmul_driver({8, 8, 8}, {4, 4, 4});
  try {
    apply_pipelining(p, kSingle);
    FAIL("caps should gate");
  } catch (const Error& e) {
    CHECK(e.code() == Err::NoDoubleBuffer);
  }
  Program piped = apply_pipelining(p, kDouble);
  try {
    apply_pipelining(piped, kDouble);
    FAIL("second application should be rejected");
  } catch (const Error& e) {
    CHECK(e.code() == Err::UnsupportedShape);
  }

  auto unsupported = [&](const char* text) {
    try {
      apply_pipelining(parsed(text), kDouble);
      return false;
    } catch (const Error& e) {
      return e.code() == Err::UnsupportedShape;
    }
  };
  // receive indexed by the loop variable cannot stay one step behind
  CHECK(unsupported(
      "func f (m=8, n=4, k=4, tm=4, tn=4, tk=4) {\n"
      "  %A = alloc <8x4>\n  %B = alloc <4x4>\n  %C = alloc <8x4>\n"
      "  scf.for %i = 0 to 8 step 4 {\n"
      "    accel.send(%A[%i,0]<4x4>)\n"
      "    accel.send(%B[0,0]<4x4>)\n"
      "    accel.recv {mode=\"accumulate\"} (%C[%i,0]<4x4>)\n"
      "  }\n"
      "}\n"));
  // no trailing receive
  CHECK(unsupported(
      "func f (m=4, n=4, k=4, tm=4, tn=4, tk=4) {\n"
      "  %A = alloc <4x4>\n"
      "  scf.for %i = 0 to 4 step 4 {\n"
      "    accel.send(%A[0,0]<4x4>)\n"
      "    accel.send(%A[0,0]<4x4>)\n"
      "  }\n"
      "}\n"));
  // overwrite receive is not an accumulation pipeline
  CHECK(unsupported(
      "func f (m=4, n=4, k=4, tm=4, tn=4, tk=4) {\n"
      "  %A = alloc <4x4>\n  %C = alloc <4x4>\n"
      "  scf.for %i = 0 to 4 step 4 {\n"
      "    accel.send(%A[0,0]<4x4>)\n"
      "    accel.recv {mode=\"overwrite\"} (%C[0,0]<4x4>)\n"
      "  }\n"
      "}\n"));
  // two innermost loops are ambiguous
  CHECK(unsupported(
      "func f (m=4, n=4, k=4, tm=4, tn=4, tk=4) {\n"
      "  %A = alloc <4x4>\n  %C = alloc <4x4>\n"
      "  scf.for %i = 0 to 4 step 4 {\n"
      "    accel.send(%A[0,0]<4x4>)\n"
      "    accel.recv {mode=\"accumulate\"} (%C[0,0]<4x4>)\n"
      "  }\n"
      "  scf.for %j = 0 to 4 step 4 {\n"
      "    accel.send(%A[0,0]<4x4>)\n"
      "    accel.recv {mode=\"accumulate\"} (%C[0,0]<4x4>)\n"
      "  }\n"
      "}\n"));
}

TEST_CASE("run_passes applies a canonical order") {
  Program p = build_tiled_matmul_driver({16, 16, 16}, {4, 4, 4});
  Program a = run_passes(
      p, {PassName::Pipeline, PassName::DmaAlloc, PassName::Coalesce},
      kDouble);
  Program b = run_passes(
      p, {PassName::Coalesce, PassName::Coalesce, PassName::DmaAlloc,
          PassName::Pipeline},
      kDouble);
  CHECK(structurally_equal(a, b));
  CHECK(structurally_equal(run_passes(p, {}, kSingle), p));
  // order fixed: coalescing runs before pipelining, so the steady body is
  // one merged send plus the drain
  const auto& i_loop = std::get<ForOp>(a.body[1].node);
  const auto& j_loop = std::get<ForOp>(i_loop.body[0].node);
  const auto& steady = std::get<ForOp>(j_loop.body[1].node);
  REQUIRE(steady.body.size() == 2);
  CHECK(std::get<SendOp>(steady.body[0].node).payload.size() == 4);
}

TEST_CASE("every pass subset preserves the computed product") {
  MachineModel model = default_model();
  model.accel.pe_rows = 2;
  model.accel.pe_cols = 2;
  AccelCaps caps{true};
  Program base = build_tiled_matmul_driver({4, 4, 4}, {2, 2, 2});
  for (int mask = 0; mask < 8; ++mask) {
    std::vector<PassName> passes;
    if (mask & 1) passes.push_back(PassName::DmaAlloc);
    if (mask & 2) passes.push_back(PassName::Coalesce);
    if (mask & 4) passes.push_back(PassName::Pipeline);
    Program p = run_passes(base, passes, caps);
    for (auto& outcome :
         verify_equivalence(p, model, {1u, 7u, 1u << 20, 0xFFFFFFFFu})) {
      CHECK(outcome.ok);
    }
  }
}
