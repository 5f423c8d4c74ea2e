#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ccfg/data.hpp"

namespace ccfg {

inline constexpr double kDefaultMahalanobisThreshold = 4.0;

/// Expected fraction of in-support samples that belong to `forbidden`: the
/// mean oracle posterior p(forbidden | x) over samples within the Mahalanobis
/// threshold of some node. Off-support samples are excluded entirely; with no
/// in-support samples the rate is 0.
double error_rate(const MixtureSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& samples, int forbidden,
                  double mahal_threshold = kDefaultMahalanobisThreshold);

/// Thresholded variant: fraction of in-support samples with p(forbidden | x) > 0.5.
double hard_error_rate(const MixtureSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& samples, int forbidden,
                       double mahal_threshold = kDefaultMahalanobisThreshold);

/// Same statistic as error_rate, read as the purity of a targeted class.
inline double class_purity(const MixtureSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& samples, int target,
                           double mahal_threshold = kDefaultMahalanobisThreshold)
{
    return error_rate(spec, samples, target, mahal_threshold);
}

/// 2-Wasserstein distance between two 1-D empirical distributions.
double wasserstein_1d(std::vector<double> a, std::vector<double> b);

/// Mean over seeded random unit directions of the projected 1-D W2 distance.
double sliced_wasserstein(const Eigen::Ref<const Eigen::MatrixXd>& a, const Eigen::Ref<const Eigen::MatrixXd>& b,
                          int n_proj, std::uint64_t seed);

struct Occupancy {
    std::vector<double> nodes;  // fraction of all samples assigned to each node
    double off_support = 0.0;
};

Occupancy node_occupancy(const MixtureSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& samples,
                         double mahal_threshold = kDefaultMahalanobisThreshold);

/// Mean log density (nats) under the mixture with `forbidden` mass removed.
double mean_loglik(const MixtureSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& samples,
                   std::optional<int> forbidden);

struct RunReport {
    std::string method;
    double scale = 0.0;
    double error_rate = 0.0;
    double off_support = 0.0;
    double sliced_w = 0.0;
    std::vector<double> node_occupancy;
    double mean_loglik = 0.0;
    long long n = 0;
    std::uint64_t seed = 0;
    int nfe = 0;
    bool failed = false;
    std::string failure;

    /// Occupancies plus off-support sum to one and every fraction is in [0, 1].
    bool fractions_consistent(double tol = 1e-9) const;
};

struct EvalOptions {
    int forbidden = kRed;
    double mahal_threshold = kDefaultMahalanobisThreshold;
    int n_proj = 64;
    std::uint64_t projection_seed = 0;
};

RunReport evaluate(const MixtureSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& samples,
                   const Eigen::Ref<const Eigen::MatrixXd>& reference, const EvalOptions& options);

}  // namespace ccfg
