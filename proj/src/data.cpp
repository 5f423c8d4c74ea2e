#include "ccfg/data.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include <fmt/format.h>

namespace ccfg {

namespace {

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v)
{
    const double m = v.maxCoeff();
    if (!std::isfinite(m)) return m;
    return m + std::log((v.array() - m).exp().sum());
}

}  // namespace

void MixtureSpec::validate() const
{
    const auto k = centers.cols();
    if (k < 1) throw std::invalid_argument("mixture: need at least one node");
    if (scales.size() != k || node_weights.size() != k || class_weights.rows() != k || class_weights.cols() < 1) {
        throw std::invalid_argument("mixture: inconsistent node counts");
    }
    if ((scales.array() <= 0.0).any()) throw std::invalid_argument("mixture: scales must be positive");
    if ((node_weights.array() < 0.0).any() || std::abs(node_weights.sum() - 1.0) > 1e-12) {
        throw std::invalid_argument("mixture: node weights must be a distribution");
    }
    for (Eigen::Index i = 0; i < k; ++i) {
        if ((class_weights.row(i).array() < 0.0).any() || std::abs(class_weights.row(i).sum() - 1.0) > 1e-12) {
            throw std::invalid_argument("mixture: class weights of each node must sum to 1");
        }
    }
}

MixtureSpec threenode_spec()
{
    MixtureSpec s;
    s.centers.resize(2, 3);
    // (-4, 0), (4, 0), (0, 5) translated so the mixture mean sits at the origin.
    constexpr double shift = 5.0 / 3.0;
    s.centers << -4.0, 4.0, 0.0,
                 -shift, -shift, 5.0 - shift;
    s.scales = Eigen::VectorXd::Constant(3, 0.5);
    s.node_weights = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
    s.class_weights.resize(3, 2);
    s.class_weights << 1.0, 0.0,
                       1.0, 0.0,
                       0.5, 0.5;
    return s;
}

LabeledPoints sample_mixture(const MixtureSpec& spec, std::uint64_t seed, Eigen::Index n)
{
    spec.validate();
    if (n < 1) throw std::invalid_argument("sample_mixture: n must be >= 1");
    std::mt19937_64 rng(seed);
    std::discrete_distribution<int> pick_node(spec.node_weights.data(), spec.node_weights.data() + spec.num_nodes());
    std::vector<std::discrete_distribution<int>> pick_class;
    for (int k = 0; k < spec.num_nodes(); ++k) {
        const Eigen::VectorXd w = spec.class_weights.row(k).transpose();
        pick_class.emplace_back(w.data(), w.data() + w.size());
    }
    std::normal_distribution<double> normal(0.0, 1.0);

    LabeledPoints out;
    out.num_classes = spec.num_classes();
    out.points.resize(spec.dim(), n);
    out.labels.resize(n);
    out.nodes.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const int k = pick_node(rng);
        out.nodes[j] = k;
        out.labels[j] = pick_class[k](rng);
        for (int d = 0; d < spec.dim(); ++d) out.points(d, j) = spec.centers(d, k) + spec.scales[k] * normal(rng);
    }
    return out;
}

std::pair<MixtureSpec, LabeledPoints> make_threenode(std::uint64_t seed, Eigen::Index n)
{
    MixtureSpec spec = threenode_spec();
    LabeledPoints pts = sample_mixture(spec, seed, n);
    return {std::move(spec), std::move(pts)};
}

Eigen::VectorXd node_log_joint(const MixtureSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x)
{
    if (x.size() != spec.dim()) throw std::invalid_argument("mixture: point dimension mismatch");
    const int k = spec.num_nodes();
    Eigen::VectorXd lj(k);
    for (int i = 0; i < k; ++i) {
        const double s2 = spec.scales[i] * spec.scales[i];
        const double r2 = (x - spec.centers.col(i)).squaredNorm();
        lj[i] = std::log(spec.node_weights[i]) - 0.5 * r2 / s2 - 0.5 * spec.dim() * std::log(2.0 * std::numbers::pi * s2);
    }
    return lj;
}

double oracle_class_posterior(const MixtureSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x, int class_id)
{
    if (class_id < 0 || class_id >= spec.num_classes()) throw std::out_of_range("oracle: class id out of range");
    const Eigen::VectorXd lj = node_log_joint(spec, x);
    const double m = lj.maxCoeff();
    const Eigen::VectorXd w = (lj.array() - m).exp();
    return w.dot(spec.class_weights.col(class_id)) / w.sum();
}

double min_mahalanobis(const MixtureSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x)
{
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < spec.num_nodes(); ++i) {
        best = std::min(best, (x - spec.centers.col(i)).norm() / spec.scales[i]);
    }
    return best;
}

int nearest_node(const MixtureSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x)
{
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < spec.num_nodes(); ++i) {
        const double d = (x - spec.centers.col(i)).norm() / spec.scales[i];
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

double off_support_fraction(const MixtureSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& samples,
                            double mahal_threshold)
{
    if (samples.cols() == 0) throw std::invalid_argument("off_support_fraction: empty sample set");
    if (!(mahal_threshold > 0.0)) throw std::invalid_argument("off_support_fraction: threshold must be positive");
    Eigen::Index off = 0;
    for (Eigen::Index j = 0; j < samples.cols(); ++j) {
        if (!(min_mahalanobis(spec, samples.col(j)) <= mahal_threshold)) ++off;
    }
    return static_cast<double>(off) / static_cast<double>(samples.cols());
}

double mixture_log_density(const MixtureSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                           std::optional<int> forbidden)
{
    Eigen::VectorXd lj = node_log_joint(spec, x);
    if (!forbidden) return log_sum_exp(lj);
    if (*forbidden < 0 || *forbidden >= spec.num_classes()) throw std::out_of_range("mixture: class id out of range");
    const Eigen::VectorXd keep = Eigen::VectorXd::Ones(spec.num_nodes()) - spec.class_weights.col(*forbidden);
    const double kept_mass = spec.node_weights.dot(keep);
    if (!(kept_mass > 0.0)) throw std::domain_error("mixture: forbidden class carries all the mass");
    for (int i = 0; i < spec.num_nodes(); ++i) {
        lj[i] = keep[i] > 0.0 ? lj[i] + std::log(keep[i]) : -std::numeric_limits<double>::infinity();
    }
    return log_sum_exp(lj) - std::log(kept_mass);
}

void write_dataset_csv(std::ostream& out, const LabeledPoints& data)
{
    if (data.dim() != 2) throw std::invalid_argument("dataset csv: only 2-D data is supported");
    out << "x,y,class,node\n";
    for (Eigen::Index j = 0; j < data.size(); ++j) {
        const int node = data.nodes.empty() ? -1 : data.nodes[j];
        out << fmt::format("{},{},{},{}\n", data.points(0, j), data.points(1, j), data.labels[j], node);
    }
}

LabeledPoints read_dataset_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || line != "x,y,class,node") {
        throw std::runtime_error("dataset csv: missing header 'x,y,class,node'");
    }
    std::vector<double> xs, ys;
    LabeledPoints out;
    int max_label = -1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string f[4];
        for (auto& s : f) {
            if (!std::getline(row, s, ',')) throw std::runtime_error("dataset csv: short row '" + line + "'");
        }
        xs.push_back(std::stod(f[0]));
        ys.push_back(std::stod(f[1]));
        out.labels.push_back(std::stoi(f[2]));
        out.nodes.push_back(std::stoi(f[3]));
        max_label = std::max(max_label, out.labels.back());
    }
    out.points.resize(2, static_cast<Eigen::Index>(xs.size()));
    for (std::size_t j = 0; j < xs.size(); ++j) {
        out.points(0, j) = xs[j];
        out.points(1, j) = ys[j];
    }
    out.num_classes = max_label + 1;
    return out;
}

}  // namespace ccfg
