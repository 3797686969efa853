#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tiledrive/ir.hpp"

namespace td {

enum class PassName { DmaAlloc, Coalesce, Pipeline };

// Canonical CLI spellings: dma-alloc, coalesce, pipeline.
std::string to_string(PassName p);
std::optional<PassName> parse_pass_name(std::string_view s);

struct AccelCaps {
  bool double_buffered = false;
};

// Retags every buffer referenced by a send or receive as DMA resident, which
// removes the per-transfer staging copies. Structure is untouched.
Program apply_dma_allocation(const Program& program);

// Within each op sequence (loop bodies and the program top level), replaces
// every run of two or more consecutive send/sendLiteral ops with a single
// variadic send carrying the concatenated payload. Receives and loops end a
// run; single sends stay as they are.
Program apply_coalescing(const Program& program);

// Software pipelines the innermost loop. The body must be a load group (one
// or more send/sendLiteral ops) followed by exactly one accumulate receive
// that does not index with the loop variable. The rewrite hoists the first
// iteration's loads in front of the loop, keeps the receive one iteration
// behind the loads inside it, and drains the last result after it. Needs a
// double-buffered accelerator (Err::NoDoubleBuffer otherwise); any shape
// mismatch or a second application yields Err::UnsupportedShape.
Program apply_pipelining(const Program& program, const AccelCaps& caps);

// Applies the requested subset in the fixed order DmaAlloc, Coalesce,
// Pipeline, each at most once. An empty set returns the program unchanged.
Program run_passes(const Program& program, const std::vector<PassName>& passes,
                   const AccelCaps& caps);

}  // namespace td
