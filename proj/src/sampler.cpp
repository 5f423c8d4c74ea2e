#include "ccfg/sampler.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "ccfg/hash.hpp"

namespace ccfg {

std::string to_string(Variant v) { return v == Variant::NoiseSpace ? "noise" : "posterior"; }

Variant parse_variant(const std::string& name)
{
    if (name == "noise") return Variant::NoiseSpace;
    if (name == "posterior") return Variant::PosteriorMean;
    throw std::invalid_argument("unknown sampler variant '" + name + "' (expected noise|posterior)");
}

std::vector<StepPair> step_pairs(const Schedule& schedule, int nfe)
{
    const int steps = schedule.steps();
    if (nfe < 1 || nfe > steps) {
        throw std::invalid_argument("nfe must be in [1, " + std::to_string(steps) + "], got " + std::to_string(nfe));
    }
    std::vector<StepPair> pairs;
    pairs.reserve(nfe);
    for (int i = nfe; i >= 1; --i) {
        const int t = static_cast<int>((static_cast<long long>(i) * steps) / nfe);
        const int t_prev = static_cast<int>((static_cast<long long>(i - 1) * steps) / nfe);
        pairs.push_back({t, t_prev});
    }
    return pairs;
}

double rho_coefficient(double omega, double alpha_bar_t, double alpha_bar_prev)
{
    if (!(alpha_bar_t < 1.0)) throw std::domain_error("rho: degenerate step with alpha_bar_t = 1");
    const double a = alpha_bar_t / alpha_bar_prev;
    return omega * (1.0 - std::sqrt(a) * std::sqrt(1.0 - alpha_bar_prev) / std::sqrt(1.0 - alpha_bar_t));
}

std::vector<double> rho_schedule(double omega, const Schedule& schedule, const std::vector<StepPair>& steps)
{
    std::vector<double> rho;
    rho.reserve(steps.size());
    for (const auto& s : steps) {
        schedule.check_step(s.t);
        schedule.check_step_or_zero(s.t_prev);
        if (s.t_prev >= s.t) throw std::out_of_range("rho_schedule: need t > t_prev");
        rho.push_back(rho_coefficient(omega, schedule.alpha_bar(s.t), schedule.alpha_bar(s.t_prev)));
    }
    return rho;
}

Eigen::MatrixXd initial_noise(std::uint64_t seed, int dim, Eigen::Index n)
{
    Eigen::MatrixXd x(dim, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        std::mt19937_64 rng(stream_seed(seed, static_cast<std::uint64_t>(j)));
        std::normal_distribution<double> normal(0.0, 1.0);
        for (int k = 0; k < dim; ++k) x(k, j) = normal(rng);
    }
    return x;
}

namespace {

void check_run(const EpsModel& model, const Schedule& schedule, const SampleRun& run, Eigen::Index n)
{
    check_fingerprint(model, schedule);
    if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
    validate(run.spec);
    const bool guided = !std::holds_alternative<NoGuidance>(run.spec);
    if (guided && run.cond.is_null()) throw std::invalid_argument("sample: guided sampling needs a class condition");
    if (!run.cond.is_null() && run.cond.class_id() >= model.num_classes) {
        throw std::out_of_range("sample: class id out of range");
    }
    if (needs_second_condition(run.spec)) {
        if (!run.cond2 || run.cond2->is_null()) throw std::invalid_argument("sample: posneg needs a second condition");
        if (run.cond2->class_id() >= model.num_classes) throw std::out_of_range("sample: class id out of range");
    }
    if (run.variant == Variant::PosteriorMean &&
        !(std::holds_alternative<Cfg>(run.spec) || std::holds_alternative<NCfg>(run.spec) ||
          std::holds_alternative<CcfgPos>(run.spec) || std::holds_alternative<CcfgNeg>(run.spec))) {
        throw std::invalid_argument("sample: posterior-mean variant supports cfg, ncfg, ccfg-pos, ccfg-neg");
    }
}

}  // namespace

SampleResult sample(const EpsModel& model, const Schedule& schedule, const SampleRun& run, Eigen::Index n)
{
    check_run(model, schedule, run, n);
    const auto steps = step_pairs(schedule, run.nfe);
    const int dim = model.data_dim;

    std::vector<GuidanceSpec> per_step(steps.size(), run.spec);
    if (run.step_scales || run.variant == Variant::PosteriorMean) {
        const std::vector<double> scales =
            run.step_scales ? *run.step_scales : rho_schedule(guidance_scale(run.spec), schedule, steps);
        if (scales.size() != steps.size()) throw std::invalid_argument("sample: step_scales length must equal nfe");
        for (std::size_t i = 0; i < steps.size(); ++i) per_step[i] = with_scale(run.spec, scales[i]);
    }

    const bool guided = !std::holds_alternative<NoGuidance>(run.spec);
    const bool posneg = needs_second_condition(run.spec);
    const Dng* dng = std::get_if<Dng>(&run.spec);
    const bool renoise_null = run.variant == Variant::PosteriorMean || std::holds_alternative<CfgPP>(run.spec);

    SampleResult result;
    Eigen::MatrixXd x = initial_noise(run.seed, dim, n);
    std::vector<char> alive(n, 1);
    std::vector<DngState> dng_states;
    if (dng) dng_states.assign(n, make_dng_state(*dng));
    if (run.record_trajectory) result.trajectory.push_back(x);

    Eigen::MatrixXd eps_cond, eps_cond2;
    for (std::size_t s = 0; s < steps.size(); ++s) {
        const auto [t, t_prev] = steps[s];
        const Eigen::MatrixXd eps_null = predict_eps_batch(model, x, t, Condition::null());
        if (guided) eps_cond = predict_eps_batch(model, x, t, run.cond);
        if (posneg) eps_cond2 = predict_eps_batch(model, x, t, *run.cond2);

        const double ab_t = schedule.alpha_bar(t);
        const double ab_prev = schedule.alpha_bar(t_prev);
        const double inv_sqrt_ab = 1.0 / std::sqrt(ab_t);
        const double sqrt_1mab = std::sqrt(1.0 - ab_t);
        const double sqrt_ab_prev = std::sqrt(ab_prev);
        const double sqrt_1mab_prev = std::sqrt(1.0 - ab_prev);
        const double sigma_sq = schedule.transition_variance(t, t_prev);

        Eigen::MatrixXd next(dim, n);
        Eigen::VectorXd guided_eps(dim), renoise(dim);
        for (Eigen::Index j = 0; j < n; ++j) {
            if (!alive[j]) {
                next.col(j).setConstant(std::numeric_limits<double>::quiet_NaN());
                continue;
            }
            if (!guided) {
                guided_eps = eps_null.col(j);
                renoise = guided_eps;
            } else if (posneg) {
                const double gamma = std::get<PosNeg>(per_step[s]).gamma;
                guided_eps = eps_cond.col(j) + gamma * (eps_cond.col(j) - eps_cond2.col(j));
                renoise = guided_eps;
            } else {
                const auto diff = eps_cond.col(j) - eps_null.col(j);
                const double k = guidance_coefficient(per_step[s], diff.squaredNorm(), dng ? &dng_states[j] : nullptr);
                guided_eps = eps_null.col(j) + k * diff;
                if (renoise_null) {
                    renoise = eps_null.col(j);
                } else {
                    renoise = guided_eps;
                }
            }
            // Inlined ddim_step on the column.
            next.col(j) = sqrt_ab_prev * ((x.col(j) - sqrt_1mab * guided_eps) * inv_sqrt_ab) + sqrt_1mab_prev * renoise;

            if (!next.col(j).allFinite()) {
                alive[j] = 0;
                result.failures.push_back({j, t, "non-finite state at step t=" + std::to_string(t)});
                next.col(j).setConstant(std::numeric_limits<double>::quiet_NaN());
                continue;
            }
            if (dng && t_prev > 0) {
                const Eigen::VectorXd mu_null =
                    sqrt_ab_prev * ((x.col(j) - sqrt_1mab * eps_null.col(j)) * inv_sqrt_ab) + sqrt_1mab_prev * eps_null.col(j);
                const Eigen::VectorXd mu_cond =
                    sqrt_ab_prev * ((x.col(j) - sqrt_1mab * eps_cond.col(j)) * inv_sqrt_ab) + sqrt_1mab_prev * eps_cond.col(j);
                try {
                    dng_states[j] = dng_update(dng_states[j], *dng, next.col(j), mu_null, mu_cond, sigma_sq);
                } catch (const std::domain_error& e) {
                    alive[j] = 0;
                    result.failures.push_back({j, t, e.what()});
                    next.col(j).setConstant(std::numeric_limits<double>::quiet_NaN());
                }
            }
        }
        x = std::move(next);
        if (run.record_trajectory) result.trajectory.push_back(x);
    }
    result.points = std::move(x);
    return result;
}

double max_trajectory_deviation(const SampleResult& a, const SampleResult& b)
{
    if (a.trajectory.size() != b.trajectory.size() || a.trajectory.empty()) {
        throw std::invalid_argument("trajectory deviation: trajectories missing or of different length");
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < a.trajectory.size(); ++i) {
        if (a.trajectory[i].rows() != b.trajectory[i].rows() || a.trajectory[i].cols() != b.trajectory[i].cols()) {
            throw std::invalid_argument("trajectory deviation: shape mismatch");
        }
        const double d = (a.trajectory[i] - b.trajectory[i]).cwiseAbs().maxCoeff();
        if (std::isnan(d)) return std::numeric_limits<double>::infinity();
        worst = std::max(worst, d);
    }
    return worst;
}

}  // namespace ccfg
