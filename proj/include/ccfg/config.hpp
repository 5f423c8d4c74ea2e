#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ccfg/data.hpp"
#include "ccfg/guidance.hpp"
#include "ccfg/model.hpp"
#include "ccfg/sampler.hpp"
#include "ccfg/schedule.hpp"

namespace ccfg {

struct DataSection {
    std::uint64_t seed = 1;
    long long n = 30000;
    bool operator==(const DataSection&) const = default;
};

struct ScheduleSection {
    int steps = 500;
    double beta_min = 1e-4;
    double beta_max = 0.02;
    bool operator==(const ScheduleSection&) const = default;
};

struct TrainSection {
    int epochs = 100;
    int batch_size = 256;
    double learning_rate = 2e-3;
    double learning_rate_final = 1e-4;
    double drop_prob = 0.1;
    std::vector<int> hidden = {64, 64, 64};
    std::string activation = "silu";
    int embed_dim = 4;
    int time_features = 8;
    std::uint64_t seed = 0;
    bool operator==(const TrainSection&) const = default;
};

struct SampleSection {
    std::string method = "none";
    double scale = 0.0;
    double tau = 0.2;
    int cond = kRed;
    int cond2 = kBlue;  // c- for posneg
    double dng_prior = 0.25;
    double dng_tau_prime = 0.25;
    double dng_delta = 0.0;
    double dng_clamp = 1e-4;
    int nfe = 100;
    std::uint64_t seed = 0;
    long long n = 4096;
    std::string variant = "noise";
    bool svg = false;
    bool operator==(const SampleSection&) const = default;
};

struct SweepSection {
    std::vector<std::string> methods = {"ncfg", "dng", "ccfg-neg"};
    std::vector<double> scales = {1.0, 2.0, 4.0, 7.5};
    int forbidden = kRed;
    double mahal_threshold = 4.0;
    int n_proj = 64;
    bool operator==(const SweepSection&) const = default;
};

struct CurvesSection {
    double tau = 0.2;
    double omega = 1.0;
    double grid_min = 0.0;
    double grid_max = 50.0;
    double grid_step = 0.5;
    bool svg = false;
    bool operator==(const CurvesSection&) const = default;
};

struct EquivSection {
    double omega = 7.5;
    double tau = 0.2;
    std::string mode = "both";  // pos, neg or both
    int seeds = 10;
    long long n = 64;
    double tolerance = 1e-9;
    bool wrong_rho = false;     // constant omega instead of rho_t
    bool operator==(const EquivSection&) const = default;
};

/// Everything a command needs, read from an INI-style file:
///
///     [section]
///     key = value   # comment
///
/// Lists are comma separated. Unknown sections and keys are errors.
struct RunConfig {
    DataSection data;
    ScheduleSection schedule;
    TrainSection train;
    SampleSection sample;
    SweepSection sweep;
    CurvesSection curves;
    EquivSection equiv;
    std::string output = "out";

    bool operator==(const RunConfig&) const = default;

    /// Throws std::invalid_argument naming the offending key.
    void validate() const;
};

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);
std::string serialize_config(const RunConfig& config);

/// Applies one "section.key=value" override.
void apply_override(RunConfig& config, const std::string& assignment);

Schedule build_schedule(const RunConfig& config);
TrainConfig build_train_config(const RunConfig& config);
GuidanceSpec build_guidance(const RunConfig& config);
/// Sampling run for the [sample] section; guidance is built from the method name.
SampleRun build_sample_run(const RunConfig& config);

}  // namespace ccfg
