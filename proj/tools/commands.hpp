#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace quorum::cli {

// Stable exit-code contract for scripting.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;    // usage / config failure
inline constexpr int kExitData = 2;     // data validation failure
inline constexpr int kExitBackend = 3;  // backend unreachable

struct RunArgs {
  std::string dataset_path;
  std::string backend_config_path;
  std::string out_path;
  int parallelism = 4;
  std::optional<std::uint64_t> seed;  // overrides the config seed
  std::string timestamp;              // "" = unstamped, "now" = wall clock
};

struct CalibrateArgs {
  std::string run_path;
  std::string out_path;
  bool per_class = false;
  std::string timestamp;
};

struct AssessArgs {
  std::string calibration_path;
  std::optional<double> u_new;
  std::string run_path;  // batch mode when nonempty
  std::optional<std::string> class_hint;
};

struct ReportArgs {
  std::string run_path;
  std::string out_dir;
};

struct SimulateArgs {
  std::string config_path;
  std::vector<double> thetas;  // sweep mode when nonempty
  std::string corpus_prefix;   // corpus mode when nonempty
  std::string out_path;        // sweep CSV destination; "" = stdout only
  std::optional<std::uint64_t> seed;
};

int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err);
int cmd_calibrate(const CalibrateArgs& args, std::ostream& out,
                  std::ostream& err);
int cmd_assess(const AssessArgs& args, std::ostream& out, std::ostream& err);
int cmd_report(const ReportArgs& args, std::ostream& out, std::ostream& err);
int cmd_simulate(const SimulateArgs& args, std::ostream& out,
                 std::ostream& err);

// "53.333" for 0.53333...; fixed three decimals.
std::string format_percent(double fraction);

}  // namespace quorum::cli
