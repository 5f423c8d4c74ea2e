#include "ccfg/schedule.hpp"

#include <cstring>
#include <string>

#include "ccfg/hash.hpp"

namespace ccfg {

Schedule make_schedule(int steps, double beta_min, double beta_max)
{
    if (steps < 2) {
        throw std::invalid_argument("make_schedule: T must be >= 2, got " + std::to_string(steps));
    }
    if (!(beta_min > 0.0) || !(beta_min <= beta_max) || !(beta_max < 1.0)) {
        throw std::invalid_argument("make_schedule: need 0 < beta_min <= beta_max < 1");
    }
    Schedule s;
    s.beta_min_ = beta_min;
    s.beta_max_ = beta_max;
    s.beta_.resize(steps);
    s.alpha_bar_.resize(steps);
    double prod = 1.0;
    for (int i = 0; i < steps; ++i) {
        const double b = beta_min + (beta_max - beta_min) * static_cast<double>(i) / (steps - 1);
        s.beta_[i] = b;
        prod *= 1.0 - b;
        s.alpha_bar_[i] = prod;
    }
    return s;
}

void Schedule::check_step(int t) const
{
    if (t < 1 || t > steps()) {
        throw std::out_of_range("step index " + std::to_string(t) + " outside [1, " +
                                std::to_string(steps()) + "]");
    }
}

void Schedule::check_step_or_zero(int t) const
{
    if (t < 0 || t > steps()) {
        throw std::out_of_range("step index " + std::to_string(t) + " outside [0, " +
                                std::to_string(steps()) + "]");
    }
}

double Schedule::beta(int t) const
{
    check_step(t);
    return beta_[t - 1];
}

double Schedule::alpha_bar(int t) const
{
    check_step_or_zero(t);
    return t == 0 ? 1.0 : alpha_bar_[t - 1];
}

double Schedule::transition_variance(int t, int t_prev) const
{
    check_step(t);
    check_step_or_zero(t_prev);
    if (t_prev >= t) {
        throw std::out_of_range("transition_variance: need t > t_prev");
    }
    const double ab_t = alpha_bar(t);
    const double ab_prev = alpha_bar(t_prev);
    return (1.0 - ab_prev) / (1.0 - ab_t) * (1.0 - ab_t / ab_prev);
}

std::uint64_t Schedule::fingerprint() const
{
    Fnv1a h;
    h.add(static_cast<std::uint64_t>(steps()));
    h.add(beta_min_);
    h.add(beta_max_);
    return h.value();
}

double step_ratio(const Schedule& schedule, int t)
{
    schedule.check_step(t);
    return schedule.alpha_bar(t) / schedule.alpha_bar(t - 1);
}

}  // namespace ccfg
