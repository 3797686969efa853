#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace tdcli {

// One fully resolved invocation: defaults, then config file, then model
// file, then explicit flags.
struct RunSettings {
  int64_t m = 16, n = 16, k = 16;
  int64_t tm = 4, tn = 4, tk = 4;
  std::vector<std::string> opts;  // rewrite names; canonical order is applied
  std::vector<std::pair<std::string, int64_t>> model_overrides;
  uint32_t seed = 1;
  std::string report = "text";  // text | json | csv
  bool verify = false;
  bool emit_ir = false;
  bool chart = false;
  std::string in_a, in_b, in_c;  // CSV matrices; empty means seeded / zeros
  std::string dump_c;            // write the output matrix here when set
  std::string out;               // report destination; empty means stdout
};

// Exit codes: 0 success, 1 program or simulation error, 2 configuration
// error, 3 verification failure.
int run_main(int argc, const char* const* argv, std::ostream& out,
             std::ostream& err);

// The single-run code path behind run_main, exposed for embedding and for
// tests that need the exact report document without spawning a process.
// Fills doc with the formatted report (possibly empty on early errors) and
// err_msg with a diagnostic when the return code is nonzero.
int run_once(const RunSettings& settings, std::string& doc,
             std::string& err_msg);

}  // namespace tdcli
