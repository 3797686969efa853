#include "tiledrive/sim.hpp"

#include <algorithm>
#include <limits>
#include <map>

#include <json.hpp>

namespace td {

namespace {

constexpr uint64_t kNever = std::numeric_limits<uint64_t>::max();

struct TileSnapshot {
  int64_t rows = 0;
  int64_t cols = 0;
  std::vector<int64_t> data;
};

// One accelerator compute: the n-th A tile paired with the n-th B tile.
struct Unit {
  TileSnapshot a, b;
  bool has_a = false, has_b = false;
  uint64_t a_arrive = 0, b_arrive = 0;

  bool bank_claimed = false;
  bool resolved = false;  // compute start/end known
  uint64_t compute_end = 0;
  bool store_done = false;
  uint64_t store_end = 0;
};

struct Engine {
  Engine(const Program& program, const MachineModel& model, uint64_t cycles)
      : p(program), m(model), cc(cycles) {}

  const Program& p;
  const MachineModel& m;
  uint64_t cc;  // cycles per tile product

  uint64_t h = 0;  // host clock; everything the host does advances it
  bool chan_first = true;   // next input transaction pays first_beat
  bool stage_first = true;  // next tile is charged at first_beat in the ledger

  SimReport rep;
  uint64_t blocked = 0;  // host time inside transfers

  std::vector<Matrix> live;  // buffer contents, indexed like p.buffers
  std::map<std::string, size_t> buffer_index;
  std::map<std::string, int64_t> env;

  std::vector<Unit> units;
  size_t next_a = 0, next_b = 0;      // tiles streamed so far, per role
  size_t next_recv = 0;               // units drained so far
  size_t resolve_front = 0;           // units with known compute times
  std::vector<size_t> bank_holders;   // units holding an input bank

  int64_t eval(const IndexExpr& e) const {
    return e.is_const() ? e.value : env.at(e.iv);
  }

  TileSnapshot snapshot(const TileRef& t) {
    const Matrix& src = live[buffer_index.at(t.base)];
    TileSnapshot s{t.rows, t.cols, {}};
    s.data.reserve(static_cast<size_t>(t.elems()));
    int64_t r0 = eval(t.row_start), c0 = eval(t.col_start);
    for (int64_t r = 0; r < t.rows; ++r) {
      for (int64_t c = 0; c < t.cols; ++c) {
        s.data.push_back(src.at(r0 + r, c0 + c));
      }
    }
    return s;
  }

  Unit& unit_at(size_t idx) {
    if (units.size() <= idx) units.resize(idx + 1);
    return units[idx];
  }

  // Compute times resolve strictly in unit order: a product needs both its
  // tiles, the previous product finished, and the previous result drained.
  void resolve() {
    while (resolve_front < units.size()) {
      Unit& u = units[resolve_front];
      if (!u.has_a || !u.has_b) break;
      uint64_t gate = 0;
      if (resolve_front > 0) {
        const Unit& prev = units[resolve_front - 1];
        if (!prev.resolved || !prev.store_done) break;
        gate = std::max(prev.compute_end, prev.store_end);
      }
      if (u.a.cols != u.b.rows) {
        fail(Err::Validation, "paired input tiles are not conformable");
      }
      uint64_t start = std::max(std::max(u.a_arrive, u.b_arrive), gate);
      u.compute_end = start + cc;
      u.resolved = true;
      rep.accel_compute += cc;
      ++resolve_front;
    }
  }

  // Admission control for the input banks. A transaction that first touches
  // new units may only start once enough banks are free; a bank frees when
  // its unit's product completes.
  void admit_claims(const std::vector<size_t>& new_units) {
    if (new_units.empty()) return;
    std::vector<uint64_t> free_times;
    for (size_t i = 0; i < bank_holders.size();) {
      const Unit& u = units[bank_holders[i]];
      if (u.resolved && u.compute_end <= h) {
        bank_holders[i] = bank_holders.back();
        bank_holders.pop_back();
        continue;
      }
      free_times.push_back(u.resolved ? u.compute_end : kNever);
      ++i;
    }
    int64_t need = static_cast<int64_t>(free_times.size() + new_units.size()) -
                   m.accel.banks();
    if (need > 0) {
      std::sort(free_times.begin(), free_times.end());
      uint64_t at = free_times[static_cast<size_t>(need) - 1];
      if (at == kNever) {
        fail(Err::Deadlock,
             "input banks exhausted with no pending receive to free them");
      }
      rep.host_idle += at - h;
      h = at;
      admit_claims({});  // prune holders that just freed
    }
    for (size_t idx : new_units) {
      units[idx].bank_claimed = true;
      bank_holders.push_back(idx);
    }
    if (bank_holders.size() > static_cast<size_t>(m.accel.banks())) {
      fail(Err::Deadlock, "input bank accounting overflow");
    }
  }

  void input_txn(const std::vector<PayloadItem>& payload) {
    rep.host_sync += m.dma.sync_cycles;
    h += m.dma.sync_cycles;

    int64_t words = 0;
    int64_t heap_elems = 0;
    struct Incoming {
      int role;  // 0 = A, 1 = B, 2 = other
      size_t unit;
      const TileRef* tile;
    };
    std::vector<Incoming> incoming;
    std::vector<size_t> new_units;
    for (const PayloadItem& item : payload) {
      if (std::holds_alternative<InstructionWord>(item)) {
        words += 1;
        continue;
      }
      const TileRef& t = std::get<TileRef>(item);
      words += t.elems();
      size_t bi = buffer_index.at(t.base);
      if (p.buffers[bi].space == MemSpace::Heap) heap_elems += t.elems();
      Incoming in{2, 0, &t};
      if (bi == 0) {
        in.role = 0;
        in.unit = next_a++;
      } else if (bi == 1) {
        in.role = 1;
        in.unit = next_b++;
      }
      if (in.role != 2) {
        Unit& u = unit_at(in.unit);
        if (!u.bank_claimed &&
            std::find(new_units.begin(), new_units.end(), in.unit) ==
                new_units.end()) {
          new_units.push_back(in.unit);
        }
      }
      incoming.push_back(in);
    }

    uint64_t copy = m.host.copy_per_elem * static_cast<uint64_t>(heap_elems);
    rep.host_copy += copy;
    h += copy;

    resolve();
    admit_claims(new_units);

    Position pos = chan_first ? Position::First : Position::Queued;
    chan_first = false;
    uint64_t dur = transfer_cycles(words, pos, m.dma);
    blocked += dur;
    h += dur;
    rep.send_txns += 1;

    for (const Incoming& in : incoming) {
      Position stage_pos = stage_first ? Position::First : Position::Queued;
      stage_first = false;
      uint64_t charge = transfer_cycles(in.tile->elems(), stage_pos, m.dma);
      if (in.role == 0) {
        rep.accel_load_a += charge;
        Unit& u = units[in.unit];
        u.a = snapshot(*in.tile);
        u.a_arrive = h;
        u.has_a = true;
      } else if (in.role == 1) {
        rep.accel_load_b += charge;
        Unit& u = units[in.unit];
        u.b = snapshot(*in.tile);
        u.b_arrive = h;
        u.has_b = true;
      }
    }
    resolve();
  }

  void recv(const RecvOp& op) {
    resolve();
    if (next_recv >= units.size() || !units[next_recv].resolved) {
      fail(Err::Deadlock,
           "receive cannot make progress: no computed tile product pending");
    }
    Unit& u = units[next_recv];
    if (u.compute_end > h) {
      rep.host_idle += u.compute_end - h;
      h = u.compute_end;
    }
    rep.host_sync += m.dma.sync_cycles;
    h += m.dma.sync_cycles;

    uint64_t dur =
        transfer_cycles(op.target.elems(), Position::First, m.dma);
    blocked += dur;
    h += dur;
    rep.accel_store += dur;
    u.store_end = h;
    u.store_done = true;
    ++next_recv;
    rep.recv_txns += 1;

    if (u.a.rows != op.target.rows || u.b.cols != op.target.cols) {
      fail(Err::Validation, "tile product does not match receive target");
    }
    size_t bi = buffer_index.at(op.target.base);
    Matrix& dst = live[bi];
    int64_t r0 = eval(op.target.row_start), c0 = eval(op.target.col_start);
    int64_t inner = u.a.cols;
    for (int64_t r = 0; r < op.target.rows; ++r) {
      for (int64_t c = 0; c < op.target.cols; ++c) {
        int64_t acc = 0;
        for (int64_t x = 0; x < inner; ++x) {
          acc += u.a.data[static_cast<size_t>(r * inner + x)] *
                 u.b.data[static_cast<size_t>(x * op.target.cols + c)];
        }
        int32_t& out = dst.at(r0 + r, c0 + c);
        if (op.mode == RecvMode::Accumulate) {
          out = static_cast<int32_t>(static_cast<int64_t>(out) + acc);
        } else {
          out = static_cast<int32_t>(acc);
        }
      }
    }
    uint64_t elems = static_cast<uint64_t>(op.target.elems());
    if (op.mode == RecvMode::Accumulate) {
      uint64_t cost = m.host.acc_per_elem * elems;
      rep.host_accumulate += cost;
      h += cost;
    } else if (p.buffers[bi].space == MemSpace::Heap) {
      uint64_t cost = m.host.copy_per_elem * elems;
      rep.host_copy += cost;
      h += cost;
    }
    resolve();
  }

  void walk(const std::vector<Op>& ops) {
    for (const Op& op : ops) {
      if (const auto* lit = std::get_if<SendLiteralOp>(&op.node)) {
        input_txn({PayloadItem{lit->word}});
      } else if (const auto* send = std::get_if<SendOp>(&op.node)) {
        input_txn(send->payload);
      } else if (const auto* r = std::get_if<RecvOp>(&op.node)) {
        recv(*r);
      } else {
        const auto& loop = std::get<ForOp>(op.node);
        for (int64_t v = loop.lower; v < loop.upper; v += loop.step) {
          chan_first = true;
          stage_first = true;
          env[loop.iv] = v;
          walk(loop.body);
        }
        env.erase(loop.iv);
      }
    }
  }
};

}  // namespace

SimResult simulate(const Program& program, const MachineModel& model,
                   const SimInputs& inputs) {
  validate_model(model);
  auto diags = validate(program);
  if (!diags.empty()) {
    fail(Err::Validation, to_string(diags.front()));
  }
  if (program.buffers.size() < 3 ||
      program.buffers[0].rows != program.dims.m ||
      program.buffers[0].cols != program.dims.k ||
      program.buffers[1].rows != program.dims.k ||
      program.buffers[1].cols != program.dims.n ||
      program.buffers[2].rows != program.dims.m ||
      program.buffers[2].cols != program.dims.n) {
    fail(Err::Validation,
         "first three buffers must be the A (m x k), B (k x n) and C (m x n) "
         "matrices");
  }
  if (inputs.a.rows != program.dims.m || inputs.a.cols != program.dims.k ||
      inputs.b.rows != program.dims.k || inputs.b.cols != program.dims.n ||
      inputs.c.rows != program.dims.m || inputs.c.cols != program.dims.n) {
    fail(Err::ShapeMismatch, "input matrices do not match program dims");
  }
  if (program.accel_requirements.needs_double_buffer &&
      !model.accel.double_buffered) {
    fail(Err::DoubleBufferRequired,
         "pipelined program needs a double-buffered accelerator");
  }

  Engine eng{program, model, compute_cycles(program.tiling, model.accel)};
  eng.live.reserve(program.buffers.size());
  for (size_t i = 0; i < program.buffers.size(); ++i) {
    const Buffer& b = program.buffers[i];
    eng.buffer_index[b.id] = i;
    if (i == 0) eng.live.push_back(inputs.a);
    else if (i == 1) eng.live.push_back(inputs.b);
    else if (i == 2) eng.live.push_back(inputs.c);
    else eng.live.push_back(Matrix(b.rows, b.cols));
  }

  eng.walk(program.body);

  SimReport rep = eng.rep;
  rep.makespan = eng.h;
  uint64_t host_accounted = rep.host_sync + rep.host_copy +
                            rep.host_accumulate + rep.host_idle + eng.blocked;
  if (host_accounted != rep.makespan) {
    fail(Err::Validation, "internal accounting drift in the host ledger");
  }
  uint64_t stages =
      rep.accel_load_a + rep.accel_load_b + rep.accel_compute + rep.accel_store;
  rep.accel_idle = stages < rep.makespan ? rep.makespan - stages : 0;
  rep.utilization =
      rep.makespan ? static_cast<double>(rep.accel_compute) /
                         static_cast<double>(rep.makespan)
                   : 0.0;
  return SimResult{std::move(eng.live[2]), rep};
}

std::string report_to_json(const SimReport& r) {
  nlohmann::json j;
  j["makespan"] = r.makespan;
  j["host_copy"] = r.host_copy;
  j["host_sync"] = r.host_sync;
  j["host_accumulate"] = r.host_accumulate;
  j["host_idle"] = r.host_idle;
  j["accel_load_a"] = r.accel_load_a;
  j["accel_load_b"] = r.accel_load_b;
  j["accel_compute"] = r.accel_compute;
  j["accel_store"] = r.accel_store;
  j["accel_idle"] = r.accel_idle;
  j["send_txns"] = r.send_txns;
  j["recv_txns"] = r.recv_txns;
  j["utilization"] = r.utilization;
  return j.dump();
}

Breakdown breakdown(const SimReport& r) {
  if (r.makespan == 0) fail(Err::EmptyRun, "makespan is zero");
  double total = static_cast<double>(r.makespan);
  Breakdown b;
  b.load_a = 100.0 * static_cast<double>(r.accel_load_a) / total;
  b.load_b = 100.0 * static_cast<double>(r.accel_load_b) / total;
  b.compute = 100.0 * static_cast<double>(r.accel_compute) / total;
  b.store = 100.0 * static_cast<double>(r.accel_store) / total;
  b.other = 100.0 * static_cast<double>(r.accel_idle) / total;
  return b;
}

}  // namespace td
