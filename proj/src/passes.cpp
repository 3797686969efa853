#include "tiledrive/passes.hpp"

#include <algorithm>
#include <set>

namespace td {

std::string to_string(PassName p) {
  switch (p) {
    case PassName::DmaAlloc: return "dma-alloc";
    case PassName::Coalesce: return "coalesce";
    case PassName::Pipeline: return "pipeline";
  }
  return "?";
}

std::optional<PassName> parse_pass_name(std::string_view s) {
  if (s == "dma-alloc") return PassName::DmaAlloc;
  if (s == "coalesce") return PassName::Coalesce;
  if (s == "pipeline") return PassName::Pipeline;
  return std::nullopt;
}

namespace {

void collect_referenced(const std::vector<Op>& ops,
                        std::set<std::string>& ids) {
  for (const Op& op : ops) {
    if (const auto* send = std::get_if<SendOp>(&op.node)) {
      for (const auto& item : send->payload) {
        if (const auto* t = std::get_if<TileRef>(&item)) ids.insert(t->base);
      }
    } else if (const auto* recv = std::get_if<RecvOp>(&op.node)) {
      ids.insert(recv->target.base);
    } else if (const auto* loop = std::get_if<ForOp>(&op.node)) {
      collect_referenced(loop->body, ids);
    }
  }
}

bool is_send_like(const Op& op) {
  return std::holds_alternative<SendOp>(op.node) ||
         std::holds_alternative<SendLiteralOp>(op.node);
}

std::vector<Op> coalesce_ops(const std::vector<Op>& ops) {
  std::vector<Op> out;
  size_t i = 0;
  while (i < ops.size()) {
    if (is_send_like(ops[i])) {
      size_t j = i;
      while (j < ops.size() && is_send_like(ops[j])) ++j;
      if (j - i >= 2) {
        SendOp merged;
        for (size_t p = i; p < j; ++p) {
          if (const auto* lit = std::get_if<SendLiteralOp>(&ops[p].node)) {
            merged.payload.push_back(InstructionWord{lit->word.value});
          } else {
            const auto& send = std::get<SendOp>(ops[p].node);
            merged.payload.insert(merged.payload.end(), send.payload.begin(),
                                  send.payload.end());
          }
        }
        out.push_back(Op{std::move(merged)});
      } else {
        out.push_back(ops[i]);
      }
      i = j;
      continue;
    }
    if (const auto* loop = std::get_if<ForOp>(&ops[i].node)) {
      ForOp rewritten = *loop;
      rewritten.body = coalesce_ops(loop->body);
      out.push_back(Op{std::move(rewritten)});
    } else {
      out.push_back(ops[i]);
    }
    ++i;
  }
  return out;
}

IndexExpr substitute(const IndexExpr& e, const std::string& iv,
                     int64_t value) {
  if (!e.is_const() && e.iv == iv) return IndexExpr::constant(value);
  return e;
}

TileRef substitute(const TileRef& t, const std::string& iv, int64_t value) {
  TileRef out = t;
  out.row_start = substitute(t.row_start, iv, value);
  out.col_start = substitute(t.col_start, iv, value);
  return out;
}

bool references_iv(const TileRef& t, const std::string& iv) {
  return (!t.row_start.is_const() && t.row_start.iv == iv) ||
         (!t.col_start.is_const() && t.col_start.iv == iv);
}

// Innermost loop lookup. Exactly one loop without nested loops must exist
// for the pipelining rewrite to be well defined.
ForOp* find_innermost(std::vector<Op>& ops, ForOp*& unique, bool& ambiguous) {
  for (Op& op : ops) {
    if (auto* loop = std::get_if<ForOp>(&op.node)) {
      bool nested = std::any_of(
          loop->body.begin(), loop->body.end(), [](const Op& o) {
            return std::holds_alternative<ForOp>(o.node);
          });
      if (nested) {
        find_innermost(loop->body, unique, ambiguous);
      } else {
        if (unique) ambiguous = true;
        unique = loop;
      }
    }
  }
  return unique;
}

}  // namespace

Program apply_dma_allocation(const Program& program) {
  Program out = program;
  std::set<std::string> referenced;
  collect_referenced(out.body, referenced);
  for (Buffer& b : out.buffers) {
    if (referenced.count(b.id)) b.space = MemSpace::Dma;
  }
  return out;
}

Program apply_coalescing(const Program& program) {
  Program out = program;
  out.body = coalesce_ops(program.body);
  return out;
}

Program apply_pipelining(const Program& program, const AccelCaps& caps) {
  if (!caps.double_buffered) {
    fail(Err::NoDoubleBuffer,
         "pipelining needs a double-buffered accelerator");
  }
  if (program.accel_requirements.needs_double_buffer) {
    fail(Err::UnsupportedShape, "program is already pipelined");
  }

  Program out = program;
  ForOp* loop = nullptr;
  bool ambiguous = false;
  find_innermost(out.body, loop, ambiguous);
  if (!loop) fail(Err::UnsupportedShape, "no loop to pipeline");
  if (ambiguous) {
    fail(Err::UnsupportedShape, "more than one innermost loop");
  }

  // Shape check: load group then exactly one accumulate receive.
  if (loop->body.size() < 2) {
    fail(Err::UnsupportedShape, "innermost loop body too small to pipeline");
  }
  const Op& last = loop->body.back();
  const auto* recv = std::get_if<RecvOp>(&last.node);
  if (!recv || recv->mode != RecvMode::Accumulate) {
    fail(Err::UnsupportedShape,
         "innermost loop must end with an accumulate receive");
  }
  if (references_iv(recv->target, loop->iv)) {
    fail(Err::UnsupportedShape,
         "receive target indexed by the pipelined loop variable");
  }
  for (size_t i = 0; i + 1 < loop->body.size(); ++i) {
    if (!is_send_like(loop->body[i])) {
      fail(Err::UnsupportedShape,
           "innermost loop body is not a load group plus receive");
    }
  }
  int64_t trips = loop->upper > loop->lower
                      ? (loop->upper - loop->lower + loop->step - 1) / loop->step
                      : 0;
  if (trips < 1) fail(Err::UnsupportedShape, "loop never runs");

  std::vector<Op> loads(loop->body.begin(), loop->body.end() - 1);
  Op drain = last;

  // Prologue: the first iteration's loads with the loop variable pinned.
  std::vector<Op> prologue;
  for (const Op& op : loads) {
    if (const auto* send = std::get_if<SendOp>(&op.node)) {
      SendOp pinned;
      for (const auto& item : send->payload) {
        if (const auto* t = std::get_if<TileRef>(&item)) {
          pinned.payload.push_back(substitute(*t, loop->iv, loop->lower));
        } else {
          pinned.payload.push_back(item);
        }
      }
      prologue.push_back(Op{std::move(pinned)});
    } else {
      prologue.push_back(op);
    }
  }

  std::vector<Op> replacement = std::move(prologue);
  if (trips > 1) {
    ForOp steady;
    steady.iv = loop->iv;
    steady.lower = loop->lower + loop->step;
    steady.upper = loop->upper;
    steady.step = loop->step;
    steady.body = loads;
    steady.body.push_back(drain);
    replacement.push_back(Op{std::move(steady)});
  }
  replacement.push_back(drain);

  // Splice over the original loop wherever it sits.
  struct Splicer {
    const ForOp* target;
    std::vector<Op>* replacement;

    bool splice(std::vector<Op>& ops) const {
      for (size_t i = 0; i < ops.size(); ++i) {
        if (auto* l = std::get_if<ForOp>(&ops[i].node)) {
          if (l == target) {
            std::vector<Op> spliced;
            spliced.reserve(ops.size() - 1 + replacement->size());
            spliced.insert(spliced.end(), ops.begin(),
                           ops.begin() + static_cast<ptrdiff_t>(i));
            for (auto& op : *replacement) spliced.push_back(std::move(op));
            spliced.insert(spliced.end(),
                           ops.begin() + static_cast<ptrdiff_t>(i) + 1,
                           ops.end());
            ops = std::move(spliced);
            return true;
          }
          if (splice(l->body)) return true;
        }
      }
      return false;
    }
  };
  Splicer{loop, &replacement}.splice(out.body);
  out.accel_requirements.needs_double_buffer = true;
  return out;
}

Program run_passes(const Program& program, const std::vector<PassName>& passes,
                   const AccelCaps& caps) {
  std::set<PassName> wanted(passes.begin(), passes.end());
  Program p = program;
  if (wanted.count(PassName::DmaAlloc)) p = apply_dma_allocation(p);
  if (wanted.count(PassName::Coalesce)) p = apply_coalescing(p);
  if (wanted.count(PassName::Pipeline)) p = apply_pipelining(p, caps);
  return p;
}

}  // namespace td
