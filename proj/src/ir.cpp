#include "tiledrive/ir.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "tiledrive/machine.hpp"

namespace td {

std::string to_string(const Diagnostic& d) {
  std::string s = d.code;
  if (!d.path.empty()) s += " at " + d.path;
  s += ": " + d.message;
  return s;
}

Program build_tiled_matmul_driver(const Dims& dims, const Tiling& tiling) {
  if (dims.m < 1 || dims.n < 1 || dims.k < 1) {
    fail(Err::InvalidArg, "problem dims must be positive");
  }
  if (tiling.tm < 1 || tiling.tn < 1 || tiling.tk < 1) {
    fail(Err::InvalidArg, "tile dims must be positive");
  }
  if (dims.m % tiling.tm || dims.n % tiling.tn || dims.k % tiling.tk) {
    fail(Err::NonDividingTiling,
         "tiling " + std::to_string(tiling.tm) + "x" +
             std::to_string(tiling.tn) + "x" + std::to_string(tiling.tk) +
             " does not divide problem " + std::to_string(dims.m) + "x" +
             std::to_string(dims.n) + "x" + std::to_string(dims.k));
  }

  Program p;
  p.name = "matmul_driver";
  p.dims = dims;
  p.tiling = tiling;
  p.buffers = {
      {"A", MemSpace::Heap, dims.m, dims.k},
      {"B", MemSpace::Heap, dims.k, dims.n},
      {"C", MemSpace::Heap, dims.m, dims.n},
  };

  auto tile = [](const char* base, IndexExpr r, IndexExpr c, int64_t rows,
                 int64_t cols) {
    return TileRef{base, std::move(r), std::move(c), rows, cols};
  };

  std::vector<Op> inner;
  inner.push_back(Op{SendLiteralOp{{kOpcLoadA}}});
  inner.push_back(Op{SendOp{{PayloadItem{
      tile("A", IndexExpr::var("i"), IndexExpr::var("k"), tiling.tm,
           tiling.tk)}}}});
  inner.push_back(Op{SendLiteralOp{{kOpcLoadB}}});
  inner.push_back(Op{SendOp{{PayloadItem{
      tile("B", IndexExpr::var("k"), IndexExpr::var("j"), tiling.tk,
           tiling.tn)}}}});
  inner.push_back(Op{RecvOp{tile("C", IndexExpr::var("i"), IndexExpr::var("j"),
                                 tiling.tm, tiling.tn),
                            RecvMode::Accumulate}});

  ForOp kloop{"k", 0, dims.k, tiling.tk, std::move(inner)};
  ForOp jloop{"j", 0, dims.n, tiling.tn, {}};
  jloop.body.push_back(Op{std::move(kloop)});
  ForOp iloop{"i", 0, dims.m, tiling.tm, {}};
  iloop.body.push_back(Op{std::move(jloop)});

  p.body.push_back(Op{SendLiteralOp{{encode_config_literal(tiling)}}});
  p.body.push_back(Op{std::move(iloop)});
  return p;
}

namespace {

struct LoopScope {
  std::string iv;
  int64_t lower;
  int64_t upper;
  int64_t step;
};

struct Validator {
  const Program& p;
  std::vector<Diagnostic> diags;
  std::vector<LoopScope> scopes;

  void emit(std::string code, std::string message, std::string path) {
    diags.push_back({std::move(code), std::move(message), std::move(path)});
  }

  const Buffer* find_buffer(const std::string& id) const {
    for (const auto& b : p.buffers)
      if (b.id == id) return &b;
    return nullptr;
  }

  // Extreme values an index expression can take under the current scopes.
  // Loops that never run yield no binding, which makes enclosed bounds
  // checks vacuous; we signal that with has_value = false.
  struct Range {
    bool has_value = false;
    int64_t min = 0;
    int64_t max = 0;
    std::string at_max;  // e.g. "i=12", for the diagnostic message
  };

  Range index_range(const IndexExpr& e, const std::string& path) {
    if (e.is_const()) return {true, e.value, e.value, ""};
    for (auto it = scopes.rbegin(); it != scopes.rend(); ++it) {
      if (it->iv != e.iv) continue;
      if (it->upper <= it->lower) return {};  // zero-trip loop
      int64_t trips = (it->upper - it->lower + it->step - 1) / it->step;
      int64_t max = it->lower + (trips - 1) * it->step;
      return {true, it->lower, max, e.iv + "=" + std::to_string(max)};
    }
    emit("UndefinedInductionVar",
         "%" + e.iv + " is not an enclosing loop's induction variable", path);
    return {};
  }

  void check_tile(const TileRef& t, const std::string& path) {
    const Buffer* b = find_buffer(t.base);
    if (!b) {
      emit("UndeclaredBuffer", "%" + t.base + " is not allocated", path);
      return;
    }
    if (t.rows < 1 || t.cols < 1) {
      emit("NonPositiveTile", "tile of %" + t.base + " has empty extent",
           path);
      return;
    }
    Range r = index_range(t.row_start, path);
    Range c = index_range(t.col_start, path);
    if (r.has_value && (r.min < 0 || r.max + t.rows > b->rows)) {
      std::string where = r.at_max.empty() ? "" : " at " + r.at_max;
      emit("TileOutOfBounds",
           "rows [" + std::to_string(r.max) + ", " +
               std::to_string(r.max + t.rows) + ") exceed %" + t.base + "<" +
               std::to_string(b->rows) + "x" + std::to_string(b->cols) + ">" +
               where,
           path);
    }
    if (c.has_value && (c.min < 0 || c.max + t.cols > b->cols)) {
      std::string where = c.at_max.empty() ? "" : " at " + c.at_max;
      emit("TileOutOfBounds",
           "cols [" + std::to_string(c.max) + ", " +
               std::to_string(c.max + t.cols) + ") exceed %" + t.base + "<" +
               std::to_string(b->rows) + "x" + std::to_string(b->cols) + ">" +
               where,
           path);
    }
  }

  void walk(const std::vector<Op>& ops, const std::string& prefix) {
    for (size_t idx = 0; idx < ops.size(); ++idx) {
      std::string path = prefix + "[" + std::to_string(idx) + "]";
      const Op& op = ops[idx];
      if (const auto* send = std::get_if<SendOp>(&op.node)) {
        if (send->payload.empty()) {
          emit("EmptySendPayload", "send carries no payload", path);
        }
        for (const auto& item : send->payload) {
          if (const auto* t = std::get_if<TileRef>(&item)) check_tile(*t, path);
        }
      } else if (const auto* recv = std::get_if<RecvOp>(&op.node)) {
        check_tile(recv->target, path);
        if (recv->target.rows != p.tiling.tm ||
            recv->target.cols != p.tiling.tn) {
          emit("RecvShapeMismatch",
               "receive target is " + std::to_string(recv->target.rows) + "x" +
                   std::to_string(recv->target.cols) + ", expected " +
                   std::to_string(p.tiling.tm) + "x" +
                   std::to_string(p.tiling.tn),
               path);
        }
      } else if (const auto* loop = std::get_if<ForOp>(&op.node)) {
        if (loop->body.empty()) {
          emit("EmptyLoopBody", "loop %" + loop->iv + " has an empty body",
               path);
        }
        if (loop->step < 1 || loop->lower < 0 || loop->upper < 0) {
          emit("BadLoopBounds",
               "loop %" + loop->iv + " needs non-negative bounds and step >= 1",
               path);
          continue;
        }
        for (const auto& s : scopes) {
          if (s.iv == loop->iv) {
            emit("ShadowedInductionVar",
                 "%" + loop->iv + " shadows an enclosing induction variable",
                 path);
          }
        }
        scopes.push_back({loop->iv, loop->lower, loop->upper, loop->step});
        walk(loop->body, path + ".body");
        scopes.pop_back();
      }
    }
  }
};

// A loop whose body both sends and receives, immediately followed by a
// trailing receive at the same level, is the software-pipelined shape: the
// in-loop receive drains the previous iteration's result while the current
// loads stream. Running that shape needs two input banks.
bool has_pipelined_shape(const std::vector<Op>& ops) {
  for (size_t i = 0; i < ops.size(); ++i) {
    if (const auto* loop = std::get_if<ForOp>(&ops[i].node)) {
      if (has_pipelined_shape(loop->body)) return true;
      bool sends = false, recvs = false;
      for (const auto& op : loop->body) {
        sends |= std::holds_alternative<SendOp>(op.node) ||
                 std::holds_alternative<SendLiteralOp>(op.node);
        recvs |= std::holds_alternative<RecvOp>(op.node);
      }
      if (sends && recvs && i + 1 < ops.size() &&
          std::holds_alternative<RecvOp>(ops[i + 1].node)) {
        return true;
      }
    }
  }
  return false;
}

}  // namespace

std::vector<Diagnostic> validate(const Program& p) {
  Validator v{p, {}, {}};

  if (p.dims.m < 1 || p.dims.n < 1 || p.dims.k < 1 || p.tiling.tm < 1 ||
      p.tiling.tn < 1 || p.tiling.tk < 1) {
    v.emit("NonPositiveDims", "problem and tile dims must be positive", "");
    return v.diags;
  }
  if (p.dims.m % p.tiling.tm || p.dims.n % p.tiling.tn ||
      p.dims.k % p.tiling.tk) {
    v.emit("NonDividingTiling", "tiling does not divide problem dims", "");
  }
  std::set<std::string> ids;
  for (size_t i = 0; i < p.buffers.size(); ++i) {
    const Buffer& b = p.buffers[i];
    std::string path = "buffers[" + std::to_string(i) + "]";
    if (!ids.insert(b.id).second) {
      v.emit("DuplicateBufferId", "%" + b.id + " allocated twice", path);
    }
    if (b.rows < 1 || b.cols < 1) {
      v.emit("NonPositiveBuffer", "%" + b.id + " has an empty extent", path);
    }
  }

  v.walk(p.body, "body");

  if (!p.accel_requirements.needs_double_buffer &&
      has_pipelined_shape(p.body)) {
    v.emit("DoubleBufferFlagMissing",
           "program has a pipelined loop shape but does not declare the "
           "double-buffer requirement",
           "");
  }
  return v.diags;
}

namespace {

// Canonical keys for alpha-equivalence. Buffers map to their declaration
// index, induction variables to the loop's preorder number.
struct EqCtx {
  std::map<std::string, size_t> buffers;
  std::map<std::string, size_t> ivs;
  size_t next_loop = 0;
};

bool eq_index(const IndexExpr& a, const IndexExpr& b, const EqCtx& ca,
              const EqCtx& cb) {
  if (a.kind != b.kind) return false;
  if (a.is_const()) return a.value == b.value;
  auto ia = ca.ivs.find(a.iv);
  auto ib = cb.ivs.find(b.iv);
  if (ia == ca.ivs.end() || ib == cb.ivs.end()) return ia == ca.ivs.end() && ib == cb.ivs.end() && a.iv == b.iv;
  return ia->second == ib->second;
}

bool eq_tile(const TileRef& a, const TileRef& b, const EqCtx& ca,
             const EqCtx& cb) {
  auto ba = ca.buffers.find(a.base);
  auto bb = cb.buffers.find(b.base);
  if (ba == ca.buffers.end() || bb == cb.buffers.end()) return false;
  return ba->second == bb->second && a.rows == b.rows && a.cols == b.cols &&
         eq_index(a.row_start, b.row_start, ca, cb) &&
         eq_index(a.col_start, b.col_start, ca, cb);
}

bool eq_ops(const std::vector<Op>& a, const std::vector<Op>& b, EqCtx& ca,
            EqCtx& cb) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].node.index() != b[i].node.index()) return false;
    if (const auto* la = std::get_if<SendLiteralOp>(&a[i].node)) {
      if (la->word.value != std::get<SendLiteralOp>(b[i].node).word.value)
        return false;
    } else if (const auto* sa = std::get_if<SendOp>(&a[i].node)) {
      const auto& sb = std::get<SendOp>(b[i].node);
      if (sa->payload.size() != sb.payload.size()) return false;
      for (size_t j = 0; j < sa->payload.size(); ++j) {
        if (sa->payload[j].index() != sb.payload[j].index()) return false;
        if (const auto* w = std::get_if<InstructionWord>(&sa->payload[j])) {
          if (w->value != std::get<InstructionWord>(sb.payload[j]).value)
            return false;
        } else if (!eq_tile(std::get<TileRef>(sa->payload[j]),
                            std::get<TileRef>(sb.payload[j]), ca, cb)) {
          return false;
        }
      }
    } else if (const auto* ra = std::get_if<RecvOp>(&a[i].node)) {
      const auto& rb = std::get<RecvOp>(b[i].node);
      if (ra->mode != rb.mode || !eq_tile(ra->target, rb.target, ca, cb))
        return false;
    } else {
      const auto& fa = std::get<ForOp>(a[i].node);
      const auto& fb = std::get<ForOp>(b[i].node);
      if (fa.lower != fb.lower || fa.upper != fb.upper || fa.step != fb.step)
        return false;
      size_t mark = ca.next_loop++;
      cb.next_loop = ca.next_loop;
      auto olda = ca.ivs.find(fa.iv) != ca.ivs.end()
                      ? std::optional<size_t>(ca.ivs[fa.iv])
                      : std::nullopt;
      auto oldb = cb.ivs.find(fb.iv) != cb.ivs.end()
                      ? std::optional<size_t>(cb.ivs[fb.iv])
                      : std::nullopt;
      ca.ivs[fa.iv] = mark;
      cb.ivs[fb.iv] = mark;
      bool ok = eq_ops(fa.body, fb.body, ca, cb);
      if (olda) ca.ivs[fa.iv] = *olda; else ca.ivs.erase(fa.iv);
      if (oldb) cb.ivs[fb.iv] = *oldb; else cb.ivs.erase(fb.iv);
      if (!ok) return false;
    }
  }
  return true;
}

}  // namespace

bool structurally_equal(const Program& a, const Program& b) {
  if (a.name != b.name) return false;
  if (a.dims.m != b.dims.m || a.dims.n != b.dims.n || a.dims.k != b.dims.k)
    return false;
  if (a.tiling.tm != b.tiling.tm || a.tiling.tn != b.tiling.tn ||
      a.tiling.tk != b.tiling.tk)
    return false;
  if (a.accel_requirements.needs_double_buffer !=
      b.accel_requirements.needs_double_buffer)
    return false;
  if (a.buffers.size() != b.buffers.size()) return false;
  EqCtx ca, cb;
  for (size_t i = 0; i < a.buffers.size(); ++i) {
    if (a.buffers[i].space != b.buffers[i].space ||
        a.buffers[i].rows != b.buffers[i].rows ||
        a.buffers[i].cols != b.buffers[i].cols)
      return false;
    ca.buffers[a.buffers[i].id] = i;
    cb.buffers[b.buffers[i].id] = i;
  }
  return eq_ops(a.body, b.body, ca, cb);
}

}  // namespace td
