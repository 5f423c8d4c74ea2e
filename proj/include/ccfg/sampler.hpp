#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ccfg/guidance.hpp"
#include "ccfg/model.hpp"
#include "ccfg/schedule.hpp"

namespace ccfg {

/// NoiseSpace renoises with the guided noise (constant scale); PosteriorMean
/// renoises with the null noise and uses a per-step scale.
enum class Variant { NoiseSpace, PosteriorMean };

std::string to_string(Variant v);
Variant parse_variant(const std::string& name);

struct StepPair {
    int t;
    int t_prev;
    bool operator==(const StepPair&) const = default;
};

/// Uniformly subsampled reverse steps t_i = floor(i T / nfe), i = nfe..1, ending at 0.
std::vector<StepPair> step_pairs(const Schedule& schedule, int nfe);

/// One deterministic DDIM update:
/// sqrt(abar_prev) * posterior_mean(x_t, guided) + sqrt(1 - abar_prev) * renoise.
template <typename DX, typename DG, typename DR>
auto ddim_step(const Schedule& schedule, int t, int t_prev, const Eigen::MatrixBase<DX>& x_t,
               const Eigen::MatrixBase<DG>& guided_eps, const Eigen::MatrixBase<DR>& renoise_eps)
{
    schedule.check_step(t);
    schedule.check_step_or_zero(t_prev);
    if (t_prev >= t) throw std::out_of_range("ddim_step: need t > t_prev");
    const double ab_prev = schedule.alpha_bar(t_prev);
    using Plain = typename DX::PlainObject;
    return Plain(std::sqrt(ab_prev) * posterior_mean(schedule, x_t, t, guided_eps) +
                 std::sqrt(1.0 - ab_prev) * renoise_eps);
}

/// omega * (1 - sqrt(a) sqrt(1 - abar_prev) / sqrt(1 - abar_t)) with a = abar_t / abar_prev.
double rho_coefficient(double omega, double alpha_bar_t, double alpha_bar_prev);

/// Per-step scales that make PosteriorMean sampling reproduce NoiseSpace sampling at scale omega.
std::vector<double> rho_schedule(double omega, const Schedule& schedule, const std::vector<StepPair>& steps);

struct SampleRun {
    std::uint64_t seed = 0;
    int nfe = 100;
    bool record_trajectory = false;
    GuidanceSpec spec = NoGuidance{};
    Condition cond = Condition::null();   // c (or c+ for posneg)
    std::optional<Condition> cond2;        // c- for posneg
    Variant variant = Variant::NoiseSpace;
    /// Per-step scale override; PosteriorMean defaults to rho_schedule.
    std::optional<std::vector<double>> step_scales;
};

struct ChainFailure {
    Eigen::Index chain;
    int t;
    std::string message;
};

class NonFiniteState : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SampleResult {
    Eigen::MatrixXd points;                  // dim x n; failed chains are NaN
    std::vector<Eigen::MatrixXd> trajectory; // x_T first, one entry per step after
    std::vector<ChainFailure> failures;

    bool ok() const { return failures.empty(); }
};

/// Initial x_T for chain i drawn from a stream keyed by (seed, i).
Eigen::MatrixXd initial_noise(std::uint64_t seed, int dim, Eigen::Index n);

/// Runs n independent deterministic chains. A chain whose state becomes
/// non-finite is stopped and reported in `failures`.
SampleResult sample(const EpsModel& model, const Schedule& schedule, const SampleRun& run, Eigen::Index n);

/// Largest absolute coordinate difference across two recorded trajectories.
double max_trajectory_deviation(const SampleResult& a, const SampleResult& b);

}  // namespace ccfg
