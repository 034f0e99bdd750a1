#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace epds::cli {

/// Exit codes: 0 success, 1 validation / verification failure, 2 state exploded.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitExploded = 2;

struct RunArgs {
  std::string scenario;
  std::string out_dir;
  std::optional<double> h;
  std::optional<double> horizon;
};

/// Writes <out_dir>/trace.csv and <out_dir>/summary.json; prints the summary to `out`.
int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err);

int cmd_verify_projection(int count, std::uint64_t seed, int max_dim, std::ostream& out, std::ostream& err);

int cmd_verify_krasovskii(int count, std::uint64_t seed, std::ostream& out, std::ostream& err);

int cmd_sweep(const std::string& scenario, const std::vector<double>& h_list, std::ostream& out,
              std::ostream& err);

/// {"error": ..., "field": ..., "message": ...} on one line.
void write_error(std::ostream& err, const std::string& error, const std::string& field, const std::string& message,
                 int line = 0);

}  // namespace epds::cli
