#include "tiledrive/tiledrive.h"

#include <cstring>
#include <string>
#include <vector>

#include "tiledrive/error.hpp"
#include "tiledrive/ir.hpp"
#include "tiledrive/machine.hpp"
#include "tiledrive/matrix.hpp"
#include "tiledrive/oracle.hpp"
#include "tiledrive/passes.hpp"
#include "tiledrive/sim.hpp"

struct td_program {
  td::Program p;
};
struct td_model {
  td::MachineModel m;
};
struct td_matrix {
  td::Matrix m;
};
struct td_result {
  td::SimResult r;
};

namespace {

thread_local std::string g_last_error = "ok";

td_status status_of(td::Err e) {
  switch (e) {
    case td::Err::InvalidArg: return TD_ERR_INVALID_ARG;
    case td::Err::NonDividingTiling: return TD_ERR_NON_DIVIDING_TILING;
    case td::Err::FieldOverflow: return TD_ERR_FIELD_OVERFLOW;
    case td::Err::Parse: return TD_ERR_PARSE;
    case td::Err::Validation: return TD_ERR_VALIDATION;
    case td::Err::NoDoubleBuffer: return TD_ERR_NO_DOUBLE_BUFFER;
    case td::Err::UnsupportedShape: return TD_ERR_UNSUPPORTED_SHAPE;
    case td::Err::PeMismatch: return TD_ERR_PE_MISMATCH;
    case td::Err::DoubleBufferRequired: return TD_ERR_DOUBLE_BUFFER_REQUIRED;
    case td::Err::ShapeMismatch: return TD_ERR_SHAPE_MISMATCH;
    case td::Err::EmptyRun: return TD_ERR_EMPTY_RUN;
    case td::Err::Deadlock: return TD_ERR_DEADLOCK;
    case td::Err::VerifyFailed: return TD_ERR_VERIFY_FAILED;
    case td::Err::Json: return TD_ERR_JSON;
    case td::Err::Io: return TD_ERR_IO;
  }
  return TD_ERR_INVALID_ARG;
}

td_status set_error(td_status s, const std::string& message) {
  g_last_error = message;
  return s;
}

// Runs the body, translating exceptions into statuses.
template <typename Fn>
td_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const td::Error& e) {
    return set_error(status_of(e.code()), e.what());
  } catch (const std::exception& e) {
    return set_error(TD_ERR_IO, std::string("internal failure: ") + e.what());
  }
}

td_status require(bool ok, const char* what) {
  return ok ? TD_OK : set_error(TD_ERR_INVALID_ARG, what);
}

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::vector<td::PassName> parse_pass_set(const char* const* passes,
                                         size_t n_passes) {
  std::vector<td::PassName> out;
  for (size_t i = 0; i < n_passes; ++i) {
    if (!passes[i]) td::fail(td::Err::InvalidArg, "null pass name");
    auto p = td::parse_pass_name(passes[i]);
    if (!p) {
      td::fail(td::Err::InvalidArg,
               std::string("unknown rewrite: ") + passes[i]);
    }
    out.push_back(*p);
  }
  return out;
}

}  // namespace

extern "C" {

const char* td_status_name(td_status status) {
  switch (status) {
    case TD_OK: return "Ok";
    case TD_ERR_INVALID_ARG: return "InvalidArg";
    case TD_ERR_NON_DIVIDING_TILING: return "NonDividingTiling";
    case TD_ERR_FIELD_OVERFLOW: return "FieldOverflow";
    case TD_ERR_PARSE: return "Parse";
    case TD_ERR_VALIDATION: return "Validation";
    case TD_ERR_NO_DOUBLE_BUFFER: return "NoDoubleBuffer";
    case TD_ERR_UNSUPPORTED_SHAPE: return "UnsupportedShape";
    case TD_ERR_PE_MISMATCH: return "PeMismatch";
    case TD_ERR_DOUBLE_BUFFER_REQUIRED: return "DoubleBufferRequired";
    case TD_ERR_SHAPE_MISMATCH: return "ShapeMismatch";
    case TD_ERR_EMPTY_RUN: return "EmptyRun";
    case TD_ERR_DEADLOCK: return "Deadlock";
    case TD_ERR_VERIFY_FAILED: return "VerifyFailed";
    case TD_ERR_JSON: return "Json";
    case TD_ERR_IO: return "Io";
  }
  return "Unknown";
}

const char* td_last_error(void) { return g_last_error.c_str(); }

void td_string_free(char* text) { delete[] text; }

td_status td_program_build(int64_t m, int64_t n, int64_t k, int64_t tm,
                           int64_t tn, int64_t tk, td_program** out) {
  if (td_status s = require(out != nullptr, "null output handle")) return s;
  return guarded([&] {
    auto p = td::build_tiled_matmul_driver({m, n, k}, {tm, tn, tk});
    *out = new td_program{std::move(p)};
    return TD_OK;
  });
}

td_status td_program_parse(const char* text, td_program** out) {
  if (td_status s = require(text && out, "null argument")) return s;
  return guarded([&] {
    td::ParseResult res = td::parse_ir(text);
    if (!res.program) {
      std::string msg;
      bool syntax = false;
      for (const auto& d : res.diagnostics) {
        if (!msg.empty()) msg += "; ";
        msg += td::to_string(d);
        if (d.code == "SyntaxError") syntax = true;
      }
      return set_error(syntax ? TD_ERR_PARSE : TD_ERR_VALIDATION, msg);
    }
    *out = new td_program{std::move(*res.program)};
    return TD_OK;
  });
}

td_status td_program_print(const td_program* program, char** out_text) {
  if (td_status s = require(program && out_text, "null argument")) return s;
  return guarded([&] {
    *out_text = copy_string(td::print_ir(program->p));
    return TD_OK;
  });
}

td_status td_program_validate(const td_program* program) {
  if (td_status s = require(program != nullptr, "null program")) return s;
  return guarded([&] {
    auto diags = td::validate(program->p);
    if (diags.empty()) return TD_OK;
    std::string msg;
    for (const auto& d : diags) {
      if (!msg.empty()) msg += "; ";
      msg += td::to_string(d);
    }
    return set_error(TD_ERR_VALIDATION, msg);
  });
}

int td_program_needs_double_buffer(const td_program* program) {
  return program && program->p.accel_requirements.needs_double_buffer ? 1 : 0;
}

int td_program_equal(const td_program* a, const td_program* b) {
  if (!a || !b) return 0;
  return td::structurally_equal(a->p, b->p) ? 1 : 0;
}

td_status td_program_apply_passes(const td_program* program,
                                  const char* const* passes, size_t n_passes,
                                  int accel_double_buffered,
                                  td_program** out) {
  if (td_status s = require(program && out && (passes || n_passes == 0),
                            "null argument")) {
    return s;
  }
  return guarded([&] {
    td::AccelCaps caps;
    caps.double_buffered = accel_double_buffered != 0;
    auto p = td::run_passes(program->p, parse_pass_set(passes, n_passes), caps);
    *out = new td_program{std::move(p)};
    return TD_OK;
  });
}

void td_program_free(td_program* program) { delete program; }

td_status td_model_create_default(td_model** out) {
  if (td_status s = require(out != nullptr, "null output handle")) return s;
  *out = new td_model{td::default_model()};
  return TD_OK;
}

td_status td_model_set_i64(td_model* model, const char* key, int64_t value) {
  if (td_status s = require(model && key, "null argument")) return s;
  return guarded([&] {
    if (!td::set_model_field(model->m, key, value)) {
      return set_error(TD_ERR_INVALID_ARG,
                       std::string("unknown model field: ") + key);
    }
    return TD_OK;
  });
}

td_status td_model_get_i64(const td_model* model, const char* key,
                           int64_t* out) {
  if (td_status s = require(model && key && out, "null argument")) return s;
  int64_t v = 0;
  if (!td::get_model_field(model->m, key, v)) {
    return set_error(TD_ERR_INVALID_ARG,
                     std::string("unknown model field: ") + key);
  }
  *out = v;
  return TD_OK;
}

void td_model_free(td_model* model) { delete model; }

td_status td_encode_config_word(int64_t tm, int64_t tn, int64_t tk,
                                uint32_t* out) {
  if (td_status s = require(out != nullptr, "null output handle")) return s;
  return guarded([&] {
    *out = td::encode_config_literal({tm, tn, tk});
    return TD_OK;
  });
}

td_status td_matrix_create(int64_t rows, int64_t cols, td_matrix** out) {
  if (td_status s = require(out != nullptr, "null output handle")) return s;
  return guarded([&] {
    *out = new td_matrix{td::Matrix(rows, cols)};
    return TD_OK;
  });
}

td_status td_matrix_seeded(int64_t rows, int64_t cols, uint32_t seed,
                           td_matrix** out) {
  if (td_status s = require(out != nullptr, "null output handle")) return s;
  return guarded([&] {
    *out = new td_matrix{td::seeded_matrix(rows, cols, seed)};
    return TD_OK;
  });
}

int64_t td_matrix_rows(const td_matrix* m) { return m ? m->m.rows : 0; }
int64_t td_matrix_cols(const td_matrix* m) { return m ? m->m.cols : 0; }

td_status td_matrix_get(const td_matrix* m, int64_t row, int64_t col,
                        int32_t* out) {
  if (td_status s = require(m && out, "null argument")) return s;
  if (row < 0 || row >= m->m.rows || col < 0 || col >= m->m.cols) {
    return set_error(TD_ERR_INVALID_ARG, "matrix index out of range");
  }
  *out = m->m.at(row, col);
  return TD_OK;
}

td_status td_matrix_set(td_matrix* m, int64_t row, int64_t col,
                        int32_t value) {
  if (td_status s = require(m != nullptr, "null matrix")) return s;
  if (row < 0 || row >= m->m.rows || col < 0 || col >= m->m.cols) {
    return set_error(TD_ERR_INVALID_ARG, "matrix index out of range");
  }
  m->m.at(row, col) = value;
  return TD_OK;
}

void td_matrix_free(td_matrix* m) { delete m; }

td_status td_simulate(const td_program* program, const td_model* model,
                      const td_matrix* a, const td_matrix* b,
                      const td_matrix* c0, td_result** out) {
  if (td_status s = require(program && model && a && b && out,
                            "null argument")) {
    return s;
  }
  return guarded([&] {
    td::Matrix c = c0 ? c0->m
                      : td::Matrix(program->p.dims.m, program->p.dims.n);
    td::SimInputs in{a->m, b->m, std::move(c)};
    *out = new td_result{td::simulate(program->p, model->m, in)};
    return TD_OK;
  });
}

td_status td_result_report_json(const td_result* result, char** out_text) {
  if (td_status s = require(result && out_text, "null argument")) return s;
  return guarded([&] {
    *out_text = copy_string(td::report_to_json(result->r.report));
    return TD_OK;
  });
}

td_status td_result_stat(const td_result* result, const char* field,
                         uint64_t* out) {
  if (td_status s = require(result && field && out, "null argument")) return s;
  const td::SimReport& r = result->r.report;
  std::string f = field;
  if (f == "makespan") *out = r.makespan;
  else if (f == "host_copy") *out = r.host_copy;
  else if (f == "host_sync") *out = r.host_sync;
  else if (f == "host_accumulate") *out = r.host_accumulate;
  else if (f == "host_idle") *out = r.host_idle;
  else if (f == "accel_load_a") *out = r.accel_load_a;
  else if (f == "accel_load_b") *out = r.accel_load_b;
  else if (f == "accel_compute") *out = r.accel_compute;
  else if (f == "accel_store") *out = r.accel_store;
  else if (f == "accel_idle") *out = r.accel_idle;
  else if (f == "send_txns") *out = r.send_txns;
  else if (f == "recv_txns") *out = r.recv_txns;
  else {
    return set_error(TD_ERR_INVALID_ARG,
                     std::string("unknown report field: ") + f);
  }
  return TD_OK;
}

double td_result_utilization(const td_result* result) {
  return result ? result->r.report.utilization : 0.0;
}

td_status td_result_matrix(const td_result* result, td_matrix** out) {
  if (td_status s = require(result && out, "null argument")) return s;
  return guarded([&] {
    *out = new td_matrix{result->r.c};
    return TD_OK;
  });
}

td_status td_result_breakdown(const td_result* result, double out[5]) {
  if (td_status s = require(result && out, "null argument")) return s;
  return guarded([&] {
    td::Breakdown b = td::breakdown(result->r.report);
    out[0] = b.load_a;
    out[1] = b.load_b;
    out[2] = b.compute;
    out[3] = b.store;
    out[4] = b.other;
    return TD_OK;
  });
}

void td_result_free(td_result* result) { delete result; }

td_status td_reference_matmul(const td_matrix* a, const td_matrix* b,
                              const td_matrix* c0, td_matrix** out) {
  if (td_status s = require(a && b && out, "null argument")) return s;
  return guarded([&] {
    td::Matrix c = c0 ? c0->m : td::Matrix(a->m.rows, b->m.cols);
    *out = new td_matrix{td::reference_matmul(a->m, b->m, c)};
    return TD_OK;
  });
}

td_status td_analytic_makespan(int64_t m, int64_t n, int64_t k, int64_t tm,
                               int64_t tn, int64_t tk,
                               const char* const* passes, size_t n_passes,
                               const td_model* model, uint64_t* out) {
  if (td_status s = require(out && (passes || n_passes == 0),
                            "null argument")) {
    return s;
  }
  return guarded([&] {
    td::VariantSpec spec = td::make_variant(
        {m, n, k}, {tm, tn, tk}, parse_pass_set(passes, n_passes),
        model ? model->m : td::default_model());
    *out = td::analytic_makespan(spec);
    return TD_OK;
  });
}

td_status td_verify(const td_program* program, const td_model* model,
                    const uint32_t* seeds, size_t n_seeds) {
  if (td_status s = require(program && model && (seeds || n_seeds == 0),
                            "null argument")) {
    return s;
  }
  return guarded([&] {
    std::vector<uint32_t> s(seeds, seeds + n_seeds);
    auto outcomes = td::verify_equivalence(program->p, model->m, s);
    for (const auto& o : outcomes) {
      if (!o.ok) {
        char buf[96];
        std::snprintf(buf, sizeof buf,
                      "seed %u: output differs from the exact product at "
                      "(%lld, %lld)",
                      o.seed, static_cast<long long>(o.row),
                      static_cast<long long>(o.col));
        return set_error(TD_ERR_VERIFY_FAILED, buf);
      }
    }
    return TD_OK;
  });
}

}  // extern "C"
