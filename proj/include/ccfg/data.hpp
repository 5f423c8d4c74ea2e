#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ccfg/dataset.hpp"

namespace ccfg {

inline constexpr int kBlue = 0;
inline constexpr int kRed = 1;

/// Labeled isotropic Gaussian mixture with a known class posterior.
struct MixtureSpec {
    Eigen::MatrixXd centers;        // dim x nodes
    Eigen::VectorXd scales;         // per-node standard deviation
    Eigen::VectorXd node_weights;   // sums to 1
    Eigen::MatrixXd class_weights;  // nodes x classes, rows sum to 1

    int num_nodes() const { return static_cast<int>(centers.cols()); }
    int num_classes() const { return static_cast<int>(class_weights.cols()); }
    int dim() const { return static_cast<int>(centers.rows()); }

    void validate() const;
};

/// Three nodes at (-4, 0), (4, 0), (0, 5), shifted by (0, -5/3) so the
/// mixture has zero mean. The first two are all blue; the third is half blue,
/// half red. Scale 0.5 everywhere, equal node weights.
MixtureSpec threenode_spec();

/// Seeded draws from a mixture.
LabeledPoints sample_mixture(const MixtureSpec& spec, std::uint64_t seed, Eigen::Index n);

std::pair<MixtureSpec, LabeledPoints> make_threenode(std::uint64_t seed, Eigen::Index n);

/// log p(x, node k) for every node.
Eigen::VectorXd node_log_joint(const MixtureSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Exact Bayes posterior p(class | x).
double oracle_class_posterior(const MixtureSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x, int class_id);

/// min over nodes of ||x - center|| / scale.
double min_mahalanobis(const MixtureSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Index of the node with the smallest Mahalanobis distance.
int nearest_node(const MixtureSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x);

double off_support_fraction(const MixtureSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& samples,
                            double mahal_threshold = 4.0);

/// log density of the mixture, optionally with the mass of `forbidden` removed
/// and the remainder renormalized.
double mixture_log_density(const MixtureSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                           std::optional<int> forbidden = std::nullopt);

/// CSV with header x,y,class,node (2-D datasets only).
void write_dataset_csv(std::ostream& out, const LabeledPoints& data);
LabeledPoints read_dataset_csv(std::istream& in);

}  // namespace ccfg
