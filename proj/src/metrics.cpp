#include "ccfg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace ccfg {

namespace {

void require_samples(const Eigen::Ref<const Eigen::MatrixXd>& s, const char* who)
{
    if (s.cols() == 0) throw std::invalid_argument(std::string(who) + ": empty sample set");
}

}  // namespace

double error_rate(const MixtureSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& samples, int forbidden,
                  double mahal_threshold)
{
    require_samples(samples, "error_rate");
    double sum = 0.0;
    Eigen::Index kept = 0;
    for (Eigen::Index j = 0; j < samples.cols(); ++j) {
        if (!(min_mahalanobis(spec, samples.col(j)) <= mahal_threshold)) continue;
        sum += oracle_class_posterior(spec, samples.col(j), forbidden);
        ++kept;
    }
    return kept == 0 ? 0.0 : sum / static_cast<double>(kept);
}

double hard_error_rate(const MixtureSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& samples, int forbidden,
                       double mahal_threshold)
{
    require_samples(samples, "hard_error_rate");
    Eigen::Index hits = 0;
    Eigen::Index kept = 0;
    for (Eigen::Index j = 0; j < samples.cols(); ++j) {
        if (!(min_mahalanobis(spec, samples.col(j)) <= mahal_threshold)) continue;
        if (oracle_class_posterior(spec, samples.col(j), forbidden) > 0.5) ++hits;
        ++kept;
    }
    return kept == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(kept);
}

double wasserstein_1d(std::vector<double> a, std::vector<double> b)
{
    if (a.empty() || b.empty()) throw std::invalid_argument("wasserstein_1d: empty sample set");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    // Integrate (Qa(u) - Qb(u))^2 over the merged quantile breakpoints.
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double u = 0.0, total = 0.0;
    while (i < a.size() && j < b.size()) {
        const double next_a = static_cast<double>(i + 1) / na;
        const double next_b = static_cast<double>(j + 1) / nb;
        const double next = std::min(next_a, next_b);
        const double diff = a[i] - b[j];
        total += (next - u) * diff * diff;
        u = next;
        if (next_a <= next) ++i;
        if (next_b <= next) ++j;
    }
    return std::sqrt(total);
}

double sliced_wasserstein(const Eigen::Ref<const Eigen::MatrixXd>& a, const Eigen::Ref<const Eigen::MatrixXd>& b,
                          int n_proj, std::uint64_t seed)
{
    require_samples(a, "sliced_wasserstein");
    require_samples(b, "sliced_wasserstein");
    if (a.rows() != b.rows()) throw std::invalid_argument("sliced_wasserstein: dimension mismatch");
    if (n_proj < 1) throw std::invalid_argument("sliced_wasserstein: n_proj must be >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    double sum = 0.0;
    Eigen::VectorXd dir(a.rows());
    for (int p = 0; p < n_proj; ++p) {
        do {
            for (Eigen::Index k = 0; k < dir.size(); ++k) dir[k] = normal(rng);
        } while (dir.norm() == 0.0);
        dir.normalize();
        const Eigen::VectorXd pa = a.transpose() * dir;
        const Eigen::VectorXd pb = b.transpose() * dir;
        sum += wasserstein_1d(std::vector<double>(pa.data(), pa.data() + pa.size()),
                              std::vector<double>(pb.data(), pb.data() + pb.size()));
    }
    return sum / n_proj;
}

Occupancy node_occupancy(const MixtureSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& samples,
                         double mahal_threshold)
{
    require_samples(samples, "node_occupancy");
    Occupancy occ;
    std::vector<Eigen::Index> counts(spec.num_nodes(), 0);
    Eigen::Index off = 0;
    for (Eigen::Index j = 0; j < samples.cols(); ++j) {
        if (!(min_mahalanobis(spec, samples.col(j)) <= mahal_threshold)) {
            ++off;
            continue;
        }
        ++counts[nearest_node(spec, samples.col(j))];
    }
    const double n = static_cast<double>(samples.cols());
    for (auto c : counts) occ.nodes.push_back(static_cast<double>(c) / n);
    occ.off_support = static_cast<double>(off) / n;
    return occ;
}

double mean_loglik(const MixtureSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& samples,
                   std::optional<int> forbidden)
{
    require_samples(samples, "mean_loglik");
    double sum = 0.0;
    for (Eigen::Index j = 0; j < samples.cols(); ++j) sum += mixture_log_density(spec, samples.col(j), forbidden);
    return sum / static_cast<double>(samples.cols());
}

bool RunReport::fractions_consistent(double tol) const
{
    double total = off_support;
    if (off_support < 0.0 || off_support > 1.0) return false;
    for (double f : node_occupancy) {
        if (f < 0.0 || f > 1.0) return false;
        total += f;
    }
    return std::abs(total - 1.0) <= tol;
}

RunReport evaluate(const MixtureSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& samples,
                   const Eigen::Ref<const Eigen::MatrixXd>& reference, const EvalOptions& options)
{
    RunReport r;
    r.error_rate = error_rate(spec, samples, options.forbidden, options.mahal_threshold);
    const Occupancy occ = node_occupancy(spec, samples, options.mahal_threshold);
    r.node_occupancy = occ.nodes;
    r.off_support = occ.off_support;
    r.sliced_w = sliced_wasserstein(samples, reference, options.n_proj, options.projection_seed);
    r.mean_loglik = mean_loglik(spec, samples, options.forbidden);
    r.n = samples.cols();
    return r;
}

}  // namespace ccfg
