#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "ccfg/schedule.hpp"

namespace ccfg {

// ---------------------------------------------------------------------------
// Scalar building blocks

/// log(1 + e^x) without overflow.
template <typename Scalar>
Scalar softplus(Scalar x)
{
    using std::abs, std::exp, std::log1p, std::max;
    return max(x, Scalar(0)) + log1p(exp(-abs(x)));
}

inline void check_dist_sq(double dist_sq)
{
    if (!(dist_sq >= 0.0)) throw std::invalid_argument("squared distance must be non-negative");
}

/// Positive contrastive weight 2 / (1 + exp(-tau d2)); lies in [1, 2).
template <typename Scalar>
Scalar coef_ccfg_pos(Scalar tau, Scalar dist_sq)
{
    check_dist_sq(static_cast<double>(dist_sq));
    using std::exp, std::min, std::nextafter;
    // Past tau d2 ~ 37 the quotient rounds to 2; keep the open upper end.
    return min(Scalar(2) / (Scalar(1) + exp(-tau * dist_sq)), nextafter(Scalar(2), Scalar(0)));
}

/// Negative contrastive weight -2 exp(-tau d2) / (1 + exp(-tau d2)); lies in [-1, 0].
template <typename Scalar>
Scalar coef_ccfg_neg(Scalar tau, Scalar dist_sq)
{
    check_dist_sq(static_cast<double>(dist_sq));
    using std::exp;
    // Same value as the two-exponential form, written to stay finite for large tau d2.
    return Scalar(-2) / (Scalar(1) + exp(tau * dist_sq));
}

namespace detail {

template <typename A, typename B, typename C>
void check_same_dim(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b, const Eigen::MatrixBase<C>& c)
{
    if (a.size() != b.size() || a.size() != c.size()) {
        throw std::invalid_argument("guidance: point dimension mismatch");
    }
}

}  // namespace detail

/// -log softmax weight of the conditional kernel when eps is treated as data.
template <typename DE, typename DN, typename DC>
typename DE::Scalar nce_loss_pos(const Eigen::MatrixBase<DE>& eps, const Eigen::MatrixBase<DN>& eps_null,
                                 const Eigen::MatrixBase<DC>& eps_cond, typename DE::Scalar tau)
{
    detail::check_same_dim(eps, eps_null, eps_cond);
    const auto logit_cond = -tau * (eps - eps_cond).squaredNorm();
    const auto logit_null = -tau * (eps - eps_null).squaredNorm();
    return softplus(logit_null - logit_cond);
}

/// -log softmax weight of the null kernel when eps is treated as a noise sample.
template <typename DE, typename DN, typename DC>
typename DE::Scalar nce_loss_neg(const Eigen::MatrixBase<DE>& eps, const Eigen::MatrixBase<DN>& eps_null,
                                 const Eigen::MatrixBase<DC>& eps_cond, typename DE::Scalar tau)
{
    detail::check_same_dim(eps, eps_null, eps_cond);
    const auto logit_cond = -tau * (eps - eps_cond).squaredNorm();
    const auto logit_null = -tau * (eps - eps_null).squaredNorm();
    return softplus(logit_cond - logit_null);
}

/// abar_t / (1 - abar_t) * ||x_hat_c - x||^2.
template <typename DX, typename DH>
double sds_loss(const Schedule& schedule, int t, const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DH>& x_hat_c)
{
    schedule.check_step(t);
    if (x.size() != x_hat_c.size()) throw std::invalid_argument("sds_loss: point dimension mismatch");
    const double ab = schedule.alpha_bar(t);
    return ab / (1.0 - ab) * (x_hat_c - x).squaredNorm();
}

// ---------------------------------------------------------------------------
// Strategies

struct NoGuidance {};
struct Cfg { double gamma = 1.0; };
struct CfgPP { double lambda = 0.5; };
struct NCfg { double gamma = 1.0; };
struct PosNeg { double gamma = 1.0; };
struct Dng {
    double omega = 1.0;
    double prior = 0.25;
    double tau_prime = 0.25;
    double delta = 0.0;
    double clamp = 1e-4;
};
struct CcfgPos { double omega = 1.0; double tau = 0.2; };
struct CcfgNeg { double omega = 1.0; double tau = 0.2; };

using GuidanceSpec = std::variant<NoGuidance, Cfg, CfgPP, NCfg, PosNeg, Dng, CcfgPos, CcfgNeg>;

/// Throws std::invalid_argument when a hyperparameter is out of range.
/// Scales may be zero, which reduces every scaled strategy to unguided sampling.
void validate(const GuidanceSpec& spec);

/// CLI name: none, cfg, cfgpp, ncfg, posneg, dng, ccfg-pos, ccfg-neg.
std::string method_name(const GuidanceSpec& spec);

/// Builds a spec from a method name and a shared scale. tau and the DNG
/// fields are taken from `defaults` when relevant.
GuidanceSpec make_spec(const std::string& method, double scale, double tau, const Dng& dng_defaults = {});

/// The strategy's guidance scale (gamma, lambda, or omega); 0 for NoGuidance.
double guidance_scale(const GuidanceSpec& spec);

/// Copy of `spec` with its guidance scale replaced.
GuidanceSpec with_scale(const GuidanceSpec& spec, double scale);

bool needs_second_condition(const GuidanceSpec& spec);
bool is_dng(const GuidanceSpec& spec);

/// Posterior tracker for dynamic negative guidance, kept as log-odds of p(c-|x_t).
struct DngState {
    double log_odds = 0.0;
    double clamp = 1e-4;

    double posterior() const { return 1.0 / (1.0 + std::exp(-log_odds)); }
    /// p / (1 - p)
    double scale() const { return std::exp(log_odds); }
};

DngState make_dng_state(const Dng& spec);

struct GuidedEps {
    Eigen::VectorXd guided;
    Eigen::VectorXd renoise;
    std::optional<DngState> state;
};

/// Scalar k in guided = eps_null + k (eps_cond - eps_null) for single-condition strategies.
double guidance_coefficient(const GuidanceSpec& spec, double dist_sq, const DngState* state = nullptr);

/// Guided noise estimate and the noise used for renoising.
GuidedEps guide(const GuidanceSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& eps_null,
                const Eigen::Ref<const Eigen::VectorXd>& eps_cond,
                const std::optional<Eigen::VectorXd>& eps_cond2 = std::nullopt,
                const std::optional<DngState>& state = std::nullopt);

/// Log-odds update from the Gaussian likelihood ratio of the conditional
/// and null transition means, followed by clamping. Throws std::domain_error
/// on a non-finite update; the caller's state is untouched.
DngState dng_update(const DngState& state, const Dng& spec, const Eigen::Ref<const Eigen::VectorXd>& x_prev,
                    const Eigen::Ref<const Eigen::VectorXd>& mu_null, const Eigen::Ref<const Eigen::VectorXd>& mu_cond,
                    double sigma_sq);

struct CurveRow {
    double dist_sq;
    double coef_pos;
    double coef_neg;
    double loss_pos;
    double loss_neg;
    double cfg;
    double ncfg;
};

/// Effective-scale curves over a sorted, non-negative grid of squared distances.
std::vector<CurveRow> emit_curves(double tau, double omega, const std::vector<double>& dist_sq_grid);

}  // namespace ccfg
