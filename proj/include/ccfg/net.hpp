#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ccfg {

enum class Activation { Tanh, Silu };

inline std::string to_string(Activation a)
{
    return a == Activation::Tanh ? "tanh" : "silu";
}

inline Activation parse_activation(const std::string& name)
{
    if (name == "tanh") return Activation::Tanh;
    if (name == "silu") return Activation::Silu;
    throw std::invalid_argument("unknown activation '" + name + "'");
}

/// Fully connected network; hidden layers use a smooth activation and the
/// last layer is affine. Weights are stored out x in.
template <typename Scalar>
struct BasicMlp {
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    std::vector<int> dims;
    std::vector<Matrix> weights;
    std::vector<Vector> biases;
    Activation activation = Activation::Tanh;

    int input_dim() const { return dims.front(); }
    int output_dim() const { return dims.back(); }
    int num_layers() const { return static_cast<int>(weights.size()); }

    void check_shapes() const
    {
        if (dims.size() < 2 || weights.size() != dims.size() - 1 || biases.size() != weights.size()) {
            throw std::invalid_argument("mlp: layer count mismatch");
        }
        for (std::size_t l = 0; l < weights.size(); ++l) {
            if (weights[l].rows() != dims[l + 1] || weights[l].cols() != dims[l] ||
                biases[l].size() != dims[l + 1]) {
                throw std::invalid_argument("mlp: layer " + std::to_string(l) + " shape mismatch");
            }
        }
    }

    std::size_t parameter_count() const
    {
        std::size_t n = 0;
        for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
        return n;
    }
};

using Mlp = BasicMlp<double>;

template <typename Scalar>
struct MlpGradients {
    using Matrix = typename BasicMlp<Scalar>::Matrix;
    using Vector = typename BasicMlp<Scalar>::Vector;
    std::vector<Matrix> weights;
    std::vector<Vector> biases;
    Matrix input;  // one column per batch column
};

/// Per-layer activations kept for the backward pass. post[0] is the input.
template <typename Scalar>
struct ForwardCache {
    std::vector<typename BasicMlp<Scalar>::Matrix> pre;
    std::vector<typename BasicMlp<Scalar>::Matrix> post;
};

namespace detail {

template <typename Derived>
auto activate(Activation a, const Eigen::ArrayBase<Derived>& z)
{
    using Plain = typename Derived::PlainObject;
    if (a == Activation::Tanh) return Plain(z.tanh());
    return Plain(z / (1 + (-z).exp()));
}

template <typename Derived>
auto activate_derivative(Activation a, const Eigen::ArrayBase<Derived>& z)
{
    using Plain = typename Derived::PlainObject;
    if (a == Activation::Tanh) return Plain(1 - z.tanh().square());
    const Plain s = 1 / (1 + (-z).exp());
    return Plain(s * (1 + z * (1 - s)));
}

}  // namespace detail

/// Uniform(-s, s) init with s = 1/sqrt(fan_in) for weights and biases.
template <typename Scalar = double>
BasicMlp<Scalar> make_mlp(const std::vector<int>& dims, Activation activation, std::uint64_t seed)
{
    if (dims.size() < 2) throw std::invalid_argument("make_mlp: need at least two layer dims");
    for (int d : dims) {
        if (d < 1) throw std::invalid_argument("make_mlp: layer dims must be positive");
    }
    BasicMlp<Scalar> net;
    net.dims = dims;
    net.activation = activation;
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const Scalar s = Scalar(1) / std::sqrt(static_cast<Scalar>(dims[l]));
        std::uniform_real_distribution<Scalar> u(-s, s);
        typename BasicMlp<Scalar>::Matrix w(dims[l + 1], dims[l]);
        for (Eigen::Index j = 0; j < w.cols(); ++j)
            for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = u(rng);
        typename BasicMlp<Scalar>::Vector b(dims[l + 1]);
        for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = u(rng);
        net.weights.push_back(std::move(w));
        net.biases.push_back(std::move(b));
    }
    return net;
}

/// Batched forward pass; columns of `input` are independent samples.
template <typename Scalar, typename Derived>
typename BasicMlp<Scalar>::Matrix forward(const BasicMlp<Scalar>& net, const Eigen::MatrixBase<Derived>& input,
                                          ForwardCache<Scalar>* cache = nullptr)
{
    using Matrix = typename BasicMlp<Scalar>::Matrix;
    if (input.rows() != net.input_dim()) {
        throw std::invalid_argument("mlp forward: input has " + std::to_string(input.rows()) +
                                    " rows, expected " + std::to_string(net.input_dim()));
    }
    Matrix h = input;
    if (cache) {
        cache->pre.clear();
        cache->post.clear();
        cache->post.push_back(h);
    }
    const int last = net.num_layers() - 1;
    for (int l = 0; l <= last; ++l) {
        Matrix z = net.weights[l] * h;
        z.colwise() += net.biases[l];
        if (l == last) {
            h = std::move(z);
        } else {
            h = detail::activate(net.activation, z.array()).matrix();
            if (cache) cache->pre.push_back(std::move(z));
        }
        if (cache && l != last) cache->post.push_back(h);
    }
    return h;
}

/// Gradients of sum_columns <output, output_grad> using a cache from forward().
template <typename Scalar, typename Derived>
MlpGradients<Scalar> backward(const BasicMlp<Scalar>& net, const ForwardCache<Scalar>& cache,
                              const Eigen::MatrixBase<Derived>& output_grad)
{
    using Matrix = typename BasicMlp<Scalar>::Matrix;
    const int layers = net.num_layers();
    if (output_grad.rows() != net.output_dim() || output_grad.cols() != cache.post.front().cols()) {
        throw std::invalid_argument("mlp backward: output_grad shape mismatch");
    }
    MlpGradients<Scalar> g;
    g.weights.resize(layers);
    g.biases.resize(layers);
    Matrix delta = output_grad;
    for (int l = layers - 1; l >= 0; --l) {
        g.weights[l] = delta * cache.post[l].transpose();
        g.biases[l] = delta.rowwise().sum();
        Matrix upstream = net.weights[l].transpose() * delta;
        if (l > 0) {
            delta = (upstream.array() * detail::activate_derivative(net.activation, cache.pre[l - 1].array()))
                        .matrix();
        } else {
            g.input = std::move(upstream);
        }
    }
    return g;
}

template <typename Scalar, typename DerivedX, typename DerivedG>
MlpGradients<Scalar> backward(const BasicMlp<Scalar>& net, const Eigen::MatrixBase<DerivedX>& input,
                              const Eigen::MatrixBase<DerivedG>& output_grad)
{
    ForwardCache<Scalar> cache;
    forward(net, input, &cache);
    return backward(net, cache, output_grad);
}

/// Flat writable views of every parameter block, weights then bias per layer.
template <typename Scalar>
std::vector<Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>> parameter_views(BasicMlp<Scalar>& net)
{
    std::vector<Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>> views;
    for (int l = 0; l < net.num_layers(); ++l) {
        views.emplace_back(net.weights[l].data(), net.weights[l].size());
        views.emplace_back(net.biases[l].data(), net.biases[l].size());
    }
    return views;
}

template <typename Scalar>
std::vector<Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>> gradient_views(const MlpGradients<Scalar>& g)
{
    std::vector<Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>> views;
    for (std::size_t l = 0; l < g.weights.size(); ++l) {
        views.emplace_back(g.weights[l].data(), g.weights[l].size());
        views.emplace_back(g.biases[l].data(), g.biases[l].size());
    }
    return views;
}

template <typename Scalar>
struct AdamConfig {
    Scalar learning_rate = Scalar(1e-3);
    Scalar beta1 = Scalar(0.9);
    Scalar beta2 = Scalar(0.999);
    Scalar epsilon = Scalar(1e-8);
};

template <typename Scalar>
struct OptimState {
    AdamConfig<Scalar> config;
    std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> first_moment;
    std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> second_moment;
    long long step = 0;
};

/// One Adam update. Moment buffers are sized lazily on the first call and
/// must keep matching the parameter layout afterwards.
template <typename Scalar>
void opt_step(OptimState<Scalar>& state, std::span<Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>> params,
              std::span<const Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>> grads)
{
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    if (params.size() != grads.size()) throw std::invalid_argument("opt_step: parameter/gradient count mismatch");
    if (state.first_moment.empty()) {
        for (const auto& p : params) {
            state.first_moment.push_back(Vector::Zero(p.size()));
            state.second_moment.push_back(Vector::Zero(p.size()));
        }
    }
    if (state.first_moment.size() != params.size()) throw std::invalid_argument("opt_step: optimizer state layout mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].size() != grads[i].size() || params[i].size() != state.first_moment[i].size()) {
            throw std::invalid_argument("opt_step: shape mismatch in block " + std::to_string(i));
        }
    }
    const auto& c = state.config;
    ++state.step;
    const Scalar bias1 = 1 - std::pow(c.beta1, static_cast<Scalar>(state.step));
    const Scalar bias2 = 1 - std::pow(c.beta2, static_cast<Scalar>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& m = state.first_moment[i];
        auto& v = state.second_moment[i];
        m = c.beta1 * m + (1 - c.beta1) * grads[i];
        v = c.beta2 * v + (1 - c.beta2) * grads[i].cwiseAbs2();
        params[i].array() -= c.learning_rate * (m.array() / bias1) / ((v.array() / bias2).sqrt() + c.epsilon);
    }
}

}  // namespace ccfg
