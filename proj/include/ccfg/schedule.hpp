#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include <Eigen/Dense>

namespace ccfg {

/// Discrete variance-preserving noise schedule over steps t = 1..T.
///
/// Step 0 is the clean-data endpoint with alpha_bar(0) = 1, so a DDIM
/// step that lands on t_prev = 0 returns the posterior mean itself.
class Schedule {
public:
    Schedule() = default;

    int steps() const { return static_cast<int>(beta_.size()); }
    double beta_min() const { return beta_min_; }
    double beta_max() const { return beta_max_; }

    /// beta_t for t in [1, T].
    double beta(int t) const;
    /// Cumulative product for t in [0, T]; alpha_bar(0) == 1.
    double alpha_bar(int t) const;

    const Eigen::VectorXd& betas() const { return beta_; }
    const Eigen::VectorXd& alpha_bars() const { return alpha_bar_; }

    /// DDPM posterior variance (1 - abar_{t_prev}) / (1 - abar_t) * (1 - abar_t / abar_{t_prev}).
    /// With t_prev = t - 1 this is the usual sigma_t^2.
    double transition_variance(int t, int t_prev) const;

    /// Stable identifier of (T, beta_min, beta_max).
    std::uint64_t fingerprint() const;

    void check_step(int t) const;
    void check_step_or_zero(int t) const;

    friend Schedule make_schedule(int steps, double beta_min, double beta_max);

private:
    double beta_min_ = 0.0;
    double beta_max_ = 0.0;
    Eigen::VectorXd beta_;       // beta_[t-1]
    Eigen::VectorXd alpha_bar_;  // alpha_bar_[t-1]
};

/// Linear beta schedule from beta_min to beta_max inclusive.
Schedule make_schedule(int steps, double beta_min, double beta_max);

/// alpha_bar(t) / alpha_bar(t - 1).
double step_ratio(const Schedule& schedule, int t);

/// sqrt(abar_t) x0 + sqrt(1 - abar_t) noise. Works column-wise on batches.
template <typename DerivedX, typename DerivedN>
auto forward_sample(const Schedule& schedule, const Eigen::MatrixBase<DerivedX>& x0, int t,
                    const Eigen::MatrixBase<DerivedN>& noise)
{
    schedule.check_step(t);
    const double ab = schedule.alpha_bar(t);
    using Plain = typename DerivedX::PlainObject;
    return Plain(std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * noise);
}

/// Tweedie estimate (x_t - sqrt(1 - abar_t) eps) / sqrt(abar_t).
template <typename DerivedX, typename DerivedE>
auto posterior_mean(const Schedule& schedule, const Eigen::MatrixBase<DerivedX>& x_t, int t,
                    const Eigen::MatrixBase<DerivedE>& eps)
{
    schedule.check_step(t);
    const double ab = schedule.alpha_bar(t);
    using Plain = typename DerivedX::PlainObject;
    return Plain((x_t - std::sqrt(1.0 - ab) * eps) / std::sqrt(ab));
}

}  // namespace ccfg
