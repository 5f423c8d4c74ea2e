#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "ccfg/config.hpp"
#include "ccfg/guidance.hpp"
#include "ccfg/metrics.hpp"
#include "ccfg/model.hpp"
#include "ccfg/sampler.hpp"

namespace ccfg {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2, kExitStrict = 3 };

/// Fixed output names inside the output directory.
namespace outputs {
inline constexpr const char* kCheckpoint = "model.ccfg";
inline constexpr const char* kLoss = "loss.csv";
inline constexpr const char* kDataset = "dataset.csv";
inline constexpr const char* kConfig = "config.ini";
inline constexpr const char* kSamples = "samples.csv";
inline constexpr const char* kSamplesSvg = "samples.svg";
inline constexpr const char* kSweep = "sweep.csv";
inline constexpr const char* kCurves = "curves.csv";
inline constexpr const char* kCurvesSvg = "curves.svg";
inline constexpr const char* kEquiv = "equiv.csv";
}  // namespace outputs

/// Sampling entry point used by the sweep; tests swap it to inject failures.
using CellRunner = std::function<SampleResult(const EpsModel&, const Schedule&, const SampleRun&, Eigen::Index)>;

/// Every (method, scale) cell of the [sweep] section, methods outermost.
/// A cell that throws or loses a chain becomes a row with failed = true and
/// NaN metrics; the remaining cells still run.
std::vector<RunReport> run_sweep(const RunConfig& config, const EpsModel& model, const Schedule& schedule,
                                 const CellRunner& runner = sample);

/// dist_sq grid of the [curves] section: grid_min, grid_min + step, ... up to grid_max.
std::vector<double> curve_grid(const CurvesSection& curves);

struct EquivRow {
    std::string mode;  // "pos" or "neg"
    std::uint64_t seed;
    double max_deviation;
};

/// Trajectory deviation between noise-space sampling at omega and
/// posterior-mean sampling at rho_schedule(omega), per mode and seed.
std::vector<EquivRow> run_equiv(const RunConfig& config, const EpsModel& model, const Schedule& schedule);

// The cli_* functions validate the config, create the output directory and
// write their files there. An empty checkpoint path means <out>/model.ccfg.
// They return an ExitCode; invalid input and IO problems throw.

int cli_train(const RunConfig& config, const std::string& checkpoint, std::ostream& log);
int cli_sample(const RunConfig& config, const std::string& checkpoint, std::ostream& log);
int cli_sweep(const RunConfig& config, const std::string& checkpoint, std::ostream& log,
              const CellRunner& runner = sample);
int cli_curves(const RunConfig& config, std::ostream& log);
/// With strict set, returns kExitStrict when the deviation exceeds equiv.tolerance.
int cli_equiv(const RunConfig& config, const std::string& checkpoint, bool strict, std::ostream& log);

}  // namespace ccfg
