#include "cli_app.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "tiledrive/tiledrive.h"

namespace tdcli {
namespace {

using nlohmann::json;

// Raised for anything wrong with the invocation itself (exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const char* const kPassNames[] = {"dma-alloc", "coalesce", "pipeline"};
const char* const kModelKeys[] = {
    "copy_per_elem", "acc_per_elem",    "sync_cycles",
    "first_beat",    "queued_overhead", "per_beat",
    "pe_rows",       "pe_cols",         "double_buffered"};

struct ProgramPtr {
  td_program* p = nullptr;
  ~ProgramPtr() { td_program_free(p); }
};
struct ModelPtr {
  td_model* p = nullptr;
  ~ModelPtr() { td_model_free(p); }
};
struct MatrixPtr {
  td_matrix* p = nullptr;
  ~MatrixPtr() { td_matrix_free(p); }
};
struct ResultPtr {
  td_result* p = nullptr;
  ~ResultPtr() { td_result_free(p); }
};
struct StringPtr {
  char* p = nullptr;
  ~StringPtr() { td_string_free(p); }
};

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) ok = ok || it.key() == k;
    if (!ok) throw ConfigError("unknown key \"" + it.key() + "\" in " + where);
  }
}

int64_t as_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ConfigError(where + " must be an integer");
  return j.get<int64_t>();
}

bool as_bool(const json& j, const std::string& where) {
  if (!j.is_boolean()) throw ConfigError(where + " must be a boolean");
  return j.get<bool>();
}

bool known_pass(const std::string& name) {
  for (const char* p : kPassNames) {
    if (name == p) return true;
  }
  return false;
}

void apply_model_json(const json& j, RunSettings& s,
                      const std::string& where) {
  check_keys(j,
             {"copy_per_elem", "acc_per_elem", "sync_cycles", "first_beat",
              "queued_overhead", "per_beat", "pe_rows", "pe_cols",
              "double_buffered"},
             where);
  for (const char* key : kModelKeys) {
    if (!j.contains(key)) continue;
    const json& v = j.at(key);
    int64_t value;
    if (std::string(key) == "double_buffered" && v.is_boolean()) {
      value = v.get<bool>() ? 1 : 0;
    } else {
      value = as_int(v, where + "." + key);
    }
    s.model_overrides.emplace_back(key, value);
  }
}

// Merges one (possibly partial) configuration object into the settings.
void apply_config_json(const json& j, RunSettings& s,
                       const std::string& where) {
  check_keys(j,
             {"problem", "tiles", "opts", "model", "seed", "report", "verify",
              "emit_ir", "chart"},
             where);
  if (j.contains("problem")) {
    const json& p = j.at("problem");
    check_keys(p, {"m", "n", "k"}, where + ".problem");
    if (p.contains("m")) s.m = as_int(p.at("m"), where + ".problem.m");
    if (p.contains("n")) s.n = as_int(p.at("n"), where + ".problem.n");
    if (p.contains("k")) s.k = as_int(p.at("k"), where + ".problem.k");
  }
  if (j.contains("tiles")) {
    const json& t = j.at("tiles");
    check_keys(t, {"tm", "tn", "tk"}, where + ".tiles");
    if (t.contains("tm")) s.tm = as_int(t.at("tm"), where + ".tiles.tm");
    if (t.contains("tn")) s.tn = as_int(t.at("tn"), where + ".tiles.tn");
    if (t.contains("tk")) s.tk = as_int(t.at("tk"), where + ".tiles.tk");
  }
  if (j.contains("opts")) {
    const json& o = j.at("opts");
    if (!o.is_array()) throw ConfigError(where + ".opts must be an array");
    s.opts.clear();
    for (const json& e : o) {
      if (!e.is_string()) {
        throw ConfigError(where + ".opts entries must be strings");
      }
      std::string name = e.get<std::string>();
      if (!known_pass(name)) {
        throw ConfigError("unknown rewrite \"" + name + "\" in " + where +
                          ".opts");
      }
      s.opts.push_back(name);
    }
  }
  if (j.contains("model")) apply_model_json(j.at("model"), s, where + ".model");
  if (j.contains("seed")) {
    int64_t v = as_int(j.at("seed"), where + ".seed");
    if (v < 0 || v > 0xFFFFFFFFll) {
      throw ConfigError(where + ".seed must fit in 32 bits");
    }
    s.seed = static_cast<uint32_t>(v);
  }
  if (j.contains("report")) {
    const json& r = j.at("report");
    if (!r.is_string()) throw ConfigError(where + ".report must be a string");
    std::string v = r.get<std::string>();
    if (v != "text" && v != "json" && v != "csv") {
      throw ConfigError(where + ".report must be text, json or csv");
    }
    s.report = v;
  }
  if (j.contains("verify")) s.verify = as_bool(j.at("verify"), where + ".verify");
  if (j.contains("emit_ir")) {
    s.emit_ir = as_bool(j.at("emit_ir"), where + ".emit_ir");
  }
  if (j.contains("chart")) s.chart = as_bool(j.at("chart"), where + ".chart");
}

json parse_json_file(const std::string& path) {
  std::string text = slurp(path);
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError(path + " is not valid JSON");
  return j;
}

// Opts in canonical application order, duplicates dropped.
std::vector<std::string> canonical_opts(const std::vector<std::string>& opts) {
  std::vector<std::string> out;
  for (const char* p : kPassNames) {
    if (std::find(opts.begin(), opts.end(), p) != opts.end()) {
      out.push_back(p);
    }
  }
  return out;
}

std::string join_opts(const std::vector<std::string>& opts) {
  std::string out;
  for (const auto& o : opts) {
    if (!out.empty()) out += "+";
    out += o;
  }
  return out;
}

bool load_csv_matrix(const std::string& path, MatrixPtr& out,
                     std::string& err) {
  std::ifstream f(path);
  if (!f) {
    err = "cannot open " + path;
    return false;
  }
  std::vector<std::vector<int32_t>> rows;
  std::string line;
  size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<int32_t> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        size_t used = 0;
        long long v = std::stoll(cell, &used);
        while (used < cell.size() && std::isspace((unsigned char)cell[used])) {
          ++used;
        }
        if (used != cell.size() || v < INT32_MIN || v > INT32_MAX) {
          throw std::invalid_argument(cell);
        }
        row.push_back(static_cast<int32_t>(v));
      } catch (const std::exception&) {
        err = path + ":" + std::to_string(lineno) + ": bad value \"" + cell +
              "\"";
        return false;
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      err = path + ":" + std::to_string(lineno) + ": expected " +
            std::to_string(rows.front().size()) + " columns, got " +
            std::to_string(row.size());
      return false;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows.front().empty()) {
    err = path + ": empty matrix";
    return false;
  }
  if (td_matrix_create(static_cast<int64_t>(rows.size()),
                       static_cast<int64_t>(rows.front().size()), &out.p)) {
    err = td_last_error();
    return false;
  }
  for (size_t r = 0; r < rows.size(); ++r) {
    for (size_t c = 0; c < rows[r].size(); ++c) {
      td_matrix_set(out.p, static_cast<int64_t>(r), static_cast<int64_t>(c),
                    rows[r][c]);
    }
  }
  return true;
}

bool dump_csv_matrix(const std::string& path, const td_matrix* m,
                     std::string& err) {
  std::ofstream f(path);
  if (!f) {
    err = "cannot open " + path + " for writing";
    return false;
  }
  for (int64_t r = 0; r < td_matrix_rows(m); ++r) {
    for (int64_t c = 0; c < td_matrix_cols(m); ++c) {
      int32_t v = 0;
      td_matrix_get(m, r, c, &v);
      if (c) f << ',';
      f << v;
    }
    f << '\n';
  }
  return true;
}

struct Stats {
  uint64_t makespan = 0, host_copy = 0, host_sync = 0, host_accumulate = 0,
           host_idle = 0, load_a = 0, load_b = 0, compute = 0, store = 0,
           idle = 0, send_txns = 0, recv_txns = 0;
  double utilization = 0.0;
};

struct PointResult {
  int rc = 0;            // exit-code class for this point
  std::string error;     // status name when rc != 0
  std::string error_msg;
  Stats st;
  uint64_t analytic = 0;
  bool has_verified = false;
  bool verified = false;
  std::string ir_initial, ir_optimized;
  double brk[5] = {0, 0, 0, 0, 0};
};

std::string fmt_pct(double pct) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", pct);
  return buf;
}

// Stacked occupancy bar, 50 characters wide. Segment boundaries come from
// cumulative rounding so the bar never drifts from the true proportions by
// more than half a character.
std::string render_chart(const double pct[5], double compute_pct) {
  static const char kChars[5] = {'A', 'B', 'C', 'S', '.'};
  std::string bar;
  double cum = 0.0;
  size_t prev = 0;
  for (int i = 0; i < 5; ++i) {
    cum += pct[i];
    size_t edge = static_cast<size_t>(std::llround(cum * 50.0 / 100.0));
    if (edge > 50) edge = 50;
    for (size_t j = prev; j < edge; ++j) bar += kChars[i];
    prev = edge;
  }
  while (bar.size() < 50) bar += '.';
  char tail[64];
  std::snprintf(tail, sizeof tail, "compute %.2f%%", compute_pct);
  return "[" + bar + "]\n A load_a  B load_b  C compute  S store  . other\n " +
         tail + "\n";
}

PointResult run_point(const RunSettings& s) {
  PointResult r;
  auto failed = [&](int rc, td_status st) {
    r.rc = rc;
    r.error = td_status_name(st);
    r.error_msg = td_last_error();
    return r;
  };

  ModelPtr model;
  td_model_create_default(&model.p);
  for (const auto& kv : s.model_overrides) {
    if (td_status st = td_model_set_i64(model.p, kv.first.c_str(), kv.second)) {
      return failed(2, st);
    }
  }

  ProgramPtr prog;
  if (td_status st =
          td_program_build(s.m, s.n, s.k, s.tm, s.tn, s.tk, &prog.p)) {
    return failed(1, st);
  }

  std::vector<std::string> opts = canonical_opts(s.opts);
  std::vector<const char*> names;
  for (const auto& o : opts) names.push_back(o.c_str());
  int64_t dbuf = 1;
  td_model_get_i64(model.p, "double_buffered", &dbuf);

  ProgramPtr tuned;
  if (td_status st = td_program_apply_passes(
          prog.p, names.data(), names.size(), dbuf != 0, &tuned.p)) {
    return failed(1, st);
  }

  if (s.emit_ir) {
    StringPtr before, after;
    td_program_print(prog.p, &before.p);
    td_program_print(tuned.p, &after.p);
    r.ir_initial = before.p;
    r.ir_optimized = after.p;
  }

  MatrixPtr a, b, c0;
  std::string io_err;
  if (!s.in_a.empty()) {
    if (!load_csv_matrix(s.in_a, a, io_err)) {
      r.rc = 1;
      r.error = "Io";
      r.error_msg = io_err;
      return r;
    }
  } else {
    td_matrix_seeded(s.m, s.k, s.seed, &a.p);
  }
  if (!s.in_b.empty()) {
    if (!load_csv_matrix(s.in_b, b, io_err)) {
      r.rc = 1;
      r.error = "Io";
      r.error_msg = io_err;
      return r;
    }
  } else {
    td_matrix_seeded(s.k, s.n, s.seed + 1, &b.p);
  }
  if (!s.in_c.empty() && !load_csv_matrix(s.in_c, c0, io_err)) {
    r.rc = 1;
    r.error = "Io";
    r.error_msg = io_err;
    return r;
  }

  ResultPtr res;
  if (td_status st = td_simulate(tuned.p, model.p, a.p, b.p, c0.p, &res.p)) {
    return failed(1, st);
  }

  if (td_status st = td_analytic_makespan(s.m, s.n, s.k, s.tm, s.tn, s.tk,
                                          names.data(), names.size(), model.p,
                                          &r.analytic)) {
    return failed(1, st);
  }

  static const char* kStatFields[] = {
      "makespan",     "host_copy",  "host_sync", "host_accumulate",
      "host_idle",    "accel_load_a", "accel_load_b", "accel_compute",
      "accel_store",  "accel_idle", "send_txns", "recv_txns"};
  uint64_t* slots[] = {&r.st.makespan,  &r.st.host_copy, &r.st.host_sync,
                       &r.st.host_accumulate, &r.st.host_idle, &r.st.load_a,
                       &r.st.load_b,    &r.st.compute,   &r.st.store,
                       &r.st.idle,      &r.st.send_txns, &r.st.recv_txns};
  for (size_t i = 0; i < 12; ++i) {
    td_result_stat(res.p, kStatFields[i], slots[i]);
  }
  r.st.utilization = td_result_utilization(res.p);
  td_result_breakdown(res.p, r.brk);

  if (s.verify) {
    r.has_verified = true;
    r.verified = true;
    MatrixPtr ref, got;
    td_reference_matmul(a.p, b.p, c0.p, &ref.p);
    td_result_matrix(res.p, &got.p);
    for (int64_t row = 0; row < s.m && r.verified; ++row) {
      for (int64_t col = 0; col < s.n; ++col) {
        int32_t x = 0, y = 0;
        td_matrix_get(ref.p, row, col, &x);
        td_matrix_get(got.p, row, col, &y);
        if (x != y) {
          r.verified = false;
          r.error_msg = "output differs from the exact product at (" +
                        std::to_string(row) + ", " + std::to_string(col) + ")";
          break;
        }
      }
    }
    if (r.verified && r.analytic != r.st.makespan) {
      r.verified = false;
      r.error_msg = "analytic model disagrees with the simulation: " +
                    std::to_string(r.analytic) + " vs " +
                    std::to_string(r.st.makespan);
    }
    if (!r.verified) {
      r.rc = 3;
      r.error = "VerifyFailed";
    }
  }

  if (!s.dump_c.empty()) {
    MatrixPtr got;
    td_result_matrix(res.p, &got.p);
    if (!dump_csv_matrix(s.dump_c, got.p, io_err)) {
      r.rc = 1;
      r.error = "Io";
      r.error_msg = io_err;
    }
  }
  return r;
}

json config_echo(const RunSettings& s) {
  ModelPtr model;
  td_model_create_default(&model.p);
  for (const auto& kv : s.model_overrides) {
    td_model_set_i64(model.p, kv.first.c_str(), kv.second);
  }
  json cfg;
  cfg["problem"] = {{"m", s.m}, {"n", s.n}, {"k", s.k}};
  cfg["tiles"] = {{"tm", s.tm}, {"tn", s.tn}, {"tk", s.tk}};
  cfg["opts"] = canonical_opts(s.opts);
  json m;
  for (const char* key : kModelKeys) {
    int64_t v = 0;
    td_model_get_i64(model.p, key, &v);
    if (std::string(key) == "double_buffered") {
      m[key] = v != 0;
    } else {
      m[key] = v;
    }
  }
  cfg["model"] = m;
  cfg["seed"] = s.seed;
  cfg["report"] = s.report;
  cfg["verify"] = s.verify;
  cfg["emit_ir"] = s.emit_ir;
  cfg["chart"] = s.chart;
  return cfg;
}

json point_json(const RunSettings& s, const PointResult& r) {
  json j;
  j["config"] = config_echo(s);
  if (r.rc != 0 && !r.has_verified) {
    j["error"] = r.error;
    j["error_message"] = r.error_msg;
    return j;
  }
  j["report"] = json::parse([&] {
    // Rebuild the report object from the fetched stats so sweep points and
    // single runs share one shape.
    json rep;
    rep["makespan"] = r.st.makespan;
    rep["host_copy"] = r.st.host_copy;
    rep["host_sync"] = r.st.host_sync;
    rep["host_accumulate"] = r.st.host_accumulate;
    rep["host_idle"] = r.st.host_idle;
    rep["accel_load_a"] = r.st.load_a;
    rep["accel_load_b"] = r.st.load_b;
    rep["accel_compute"] = r.st.compute;
    rep["accel_store"] = r.st.store;
    rep["accel_idle"] = r.st.idle;
    rep["send_txns"] = r.st.send_txns;
    rep["recv_txns"] = r.st.recv_txns;
    rep["utilization"] = r.st.utilization;
    return rep.dump();
  }());
  j["analytic_makespan"] = r.analytic;
  if (r.has_verified) j["verified"] = r.verified;
  if (s.emit_ir) {
    j["ir"] = {{"initial", r.ir_initial}, {"optimized", r.ir_optimized}};
  }
  return j;
}

const char* kCsvHeader =
    "m,n,k,tm,tn,tk,opts,makespan,utilization,load_a,load_b,compute,store,"
    "send_txns,recv_txns,error";

std::string csv_row(const RunSettings& s, const PointResult& r) {
  std::ostringstream ss;
  ss << s.m << ',' << s.n << ',' << s.k << ',' << s.tm << ',' << s.tn << ','
     << s.tk << ',' << join_opts(canonical_opts(s.opts)) << ',';
  bool have_stats = r.rc == 0 || r.has_verified;
  if (have_stats) {
    ss << r.st.makespan << ',' << fmt_pct(r.st.utilization * 100.0) << ','
       << r.st.load_a << ',' << r.st.load_b << ',' << r.st.compute << ','
       << r.st.store << ',' << r.st.send_txns << ',' << r.st.recv_txns;
  } else {
    ss << ",,,,,,,";
  }
  ss << ',' << r.error;
  return ss.str();
}

std::string text_block(const RunSettings& s, const PointResult& r) {
  std::ostringstream ss;
  ss << "problem " << s.m << 'x' << s.n << 'x' << s.k << ", tiles " << s.tm
     << 'x' << s.tn << 'x' << s.tk << ", opts ";
  std::string opts = join_opts(canonical_opts(s.opts));
  ss << (opts.empty() ? "none" : opts) << ", seed " << s.seed << '\n';
  if (r.rc != 0 && !r.has_verified) {
    ss << "error            " << r.error << ": " << r.error_msg << '\n';
    return ss.str();
  }
  if (s.emit_ir) {
    ss << "-- driver (initial) --\n"
       << r.ir_initial << "-- driver (optimized) --\n"
       << r.ir_optimized;
  }
  auto line = [&](const char* name, uint64_t v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-16s %llu\n", name,
                  static_cast<unsigned long long>(v));
    ss << buf;
  };
  line("makespan", r.st.makespan);
  ss << "utilization      " << fmt_pct(r.st.utilization * 100.0) << "%\n";
  line("host_sync", r.st.host_sync);
  line("host_copy", r.st.host_copy);
  line("host_accumulate", r.st.host_accumulate);
  line("host_idle", r.st.host_idle);
  line("accel_load_a", r.st.load_a);
  line("accel_load_b", r.st.load_b);
  line("accel_compute", r.st.compute);
  line("accel_store", r.st.store);
  line("accel_idle", r.st.idle);
  line("send_txns", r.st.send_txns);
  line("recv_txns", r.st.recv_txns);
  line("analytic", r.analytic);
  if (r.has_verified) {
    ss << "verified         " << (r.verified ? "yes" : "no") << '\n';
    if (!r.verified) ss << "error            " << r.error_msg << '\n';
  }
  if (s.chart) ss << render_chart(r.brk, r.brk[2]);
  return ss.str();
}

std::string format_single(const RunSettings& s, const PointResult& r) {
  if (s.report == "json") return point_json(s, r).dump(2) + "\n";
  if (s.report == "csv") {
    return std::string(kCsvHeader) + "\n" + csv_row(s, r) + "\n";
  }
  return text_block(s, r);
}

struct SweepPoint {
  RunSettings settings;
  PointResult result;
};

bool point_less(const SweepPoint& a, const SweepPoint& b) {
  auto key = [](const RunSettings& s) {
    return std::make_tuple(s.m, s.n, s.k, s.tm, s.tn, s.tk,
                           join_opts(canonical_opts(s.opts)));
  };
  return key(a.settings) < key(b.settings);
}

int run_sweep(const RunSettings& base_cli, const std::string& path,
              std::string& doc, std::string& err_msg) {
  std::vector<SweepPoint> points;
  try {
    json j = parse_json_file(path);
    check_keys(j, {"base", "points"}, path);
    RunSettings base = base_cli;
    if (j.contains("base")) apply_config_json(j.at("base"), base, "base");
    if (!j.contains("points") || !j.at("points").is_array() ||
        j.at("points").empty()) {
      throw ConfigError(path + " needs a non-empty \"points\" array");
    }
    for (const json& p : j.at("points")) {
      SweepPoint sp;
      sp.settings = base;
      apply_config_json(p, sp.settings, "points");
      points.push_back(std::move(sp));
    }
  } catch (const ConfigError& e) {
    err_msg = e.what();
    return 2;
  }

  std::sort(points.begin(), points.end(), point_less);
  for (SweepPoint& p : points) p.result = run_point(p.settings);

  const std::string& report = base_cli.report;
  std::ostringstream ss;
  if (report == "csv") {
    ss << kCsvHeader << '\n';
    for (const SweepPoint& p : points) {
      ss << csv_row(p.settings, p.result) << '\n';
    }
  } else if (report == "json") {
    json out;
    out["points"] = json::array();
    for (const SweepPoint& p : points) {
      out["points"].push_back(point_json(p.settings, p.result));
    }
    ss << out.dump(2) << '\n';
  } else {
    bool first = true;
    for (const SweepPoint& p : points) {
      if (!first) ss << '\n';
      first = false;
      ss << text_block(p.settings, p.result);
    }
  }
  doc = ss.str();
  return 0;
}

}  // namespace

int run_once(const RunSettings& settings, std::string& doc,
             std::string& err_msg) {
  PointResult r = run_point(settings);
  doc = format_single(settings, r);
  if (r.rc != 0) err_msg = r.error + ": " + r.error_msg;
  return r.rc;
}

int run_main(int argc, const char* const* argv, std::ostream& out,
             std::ostream& err) {
  CLI::App app{
      "tiledrive: generates tiled-matmul offload drivers, rewrites their "
      "data movement and prices them on a cycle model"};
  std::string config_path, model_path, sweep_path;
  RunSettings s;
  int64_t m = 0, n = 0, k = 0, tm = 0, tn = 0, tk = 0;
  uint32_t seed = 0;
  std::vector<std::string> opts;
  std::string report;

  auto* o_config = app.add_option("--config", config_path,
                                  "JSON run configuration");
  auto* o_m = app.add_option("--m", m, "problem rows");
  auto* o_n = app.add_option("--n", n, "problem columns");
  auto* o_k = app.add_option("--k", k, "problem depth");
  auto* o_tm = app.add_option("--tm", tm, "tile rows");
  auto* o_tn = app.add_option("--tn", tn, "tile columns");
  auto* o_tk = app.add_option("--tk", tk, "tile depth");
  auto* o_opt =
      app.add_option("--opt", opts, "data-movement rewrite (repeatable)")
          ->check(CLI::IsMember({"dma-alloc", "coalesce", "pipeline"}));
  auto* o_model = app.add_option("--model", model_path,
                                 "JSON machine-model overrides");
  auto* o_seed = app.add_option("--seed", seed, "input generator seed");
  auto* o_report = app.add_option("--report", report, "text, json or csv")
                       ->check(CLI::IsMember({"text", "json", "csv"}));
  app.add_flag("--verify", s.verify,
               "check the output against the exact product and the report "
               "against the analytic model");
  app.add_flag("--emit-ir", s.emit_ir, "include the driver before and after "
                                       "the rewrites");
  app.add_flag("--chart", s.chart, "append an occupancy bar (text reports)");
  app.add_option("--sweep", sweep_path, "JSON sweep description; runs every "
                                        "point and tabulates them");
  app.add_option("--out", s.out, "write the report here instead of stdout");
  app.add_option("--in-a", s.in_a, "CSV matrix for A (default: seeded)");
  app.add_option("--in-b", s.in_b, "CSV matrix for B (default: seeded)");
  app.add_option("--in-c", s.in_c, "CSV initial accumulator (default: zeros)");
  app.add_option("--dump-c", s.dump_c, "write the computed C as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return 2;
  }

  try {
    if (o_config->count()) {
      apply_config_json(parse_json_file(config_path), s, config_path);
    }
    if (o_model->count()) {
      apply_model_json(parse_json_file(model_path), s, model_path);
    }
    if (o_m->count()) s.m = m;
    if (o_n->count()) s.n = n;
    if (o_k->count()) s.k = k;
    if (o_tm->count()) s.tm = tm;
    if (o_tn->count()) s.tn = tn;
    if (o_tk->count()) s.tk = tk;
    if (o_opt->count()) s.opts = opts;
    if (o_seed->count()) s.seed = seed;
    if (o_report->count()) s.report = report;
    if (!sweep_path.empty() &&
        (!s.in_a.empty() || !s.in_b.empty() || !s.in_c.empty() ||
         !s.dump_c.empty())) {
      throw ConfigError("matrix files cannot be combined with --sweep");
    }
  } catch (const ConfigError& e) {
    err << e.what() << '\n';
    return 2;
  }

  std::string doc, msg;
  int rc = sweep_path.empty() ? run_once(s, doc, msg)
                              : run_sweep(s, sweep_path, doc, msg);
  if (!doc.empty()) {
    if (s.out.empty()) {
      out << doc;
    } else {
      std::ofstream f(s.out);
      if (!f) {
        err << "cannot open " << s.out << " for writing\n";
        return 1;
      }
      f << doc;
    }
  }
  if (rc != 0 && !msg.empty()) err << msg << '\n';
  return rc;
}

}  // namespace tdcli
