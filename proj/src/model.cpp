#include "ccfg/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "ccfg/hash.hpp"

namespace ccfg {

void TrainConfig::validate() const
{
    if (epochs <= 0) throw std::invalid_argument("train: epochs must be positive");
    if (batch_size <= 0) throw std::invalid_argument("train: batch size must be positive");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("train: learning rate must be positive");
    if (!(learning_rate_final > 0.0) || learning_rate_final > learning_rate) {
        throw std::invalid_argument("train: final learning rate must be in (0, learning_rate]");
    }
    if (!(drop_prob >= 0.0 && drop_prob <= 1.0)) throw std::invalid_argument("train: drop probability outside [0, 1]");
    if (hidden.empty()) throw std::invalid_argument("train: need at least one hidden layer");
    for (int h : hidden) {
        if (h < 1) throw std::invalid_argument("train: hidden widths must be positive");
    }
    if (embed_dim < 1) throw std::invalid_argument("train: embed_dim must be positive");
    if (time_features < 2 || time_features % 2 != 0) {
        throw std::invalid_argument("train: time_features must be a positive even number");
    }
}

Eigen::VectorXd time_embedding(int t, int steps, int count)
{
    Eigen::VectorXd f(count);
    const double s = static_cast<double>(t) / steps;
    for (int k = 0; k < count / 2; ++k) {
        const double w = std::numbers::pi * std::ldexp(1.0, k);
        f[2 * k] = std::sin(w * s);
        f[2 * k + 1] = std::cos(w * s);
    }
    return f;
}

EpsModel make_eps_model(const Schedule& schedule, int data_dim, int num_classes, const TrainConfig& config)
{
    config.validate();
    if (data_dim < 1) throw std::invalid_argument("model: data dimension must be positive");
    if (num_classes < 1) throw std::invalid_argument("model: need at least one class");
    EpsModel m;
    m.data_dim = data_dim;
    m.num_classes = num_classes;
    m.time_features = config.time_features;
    m.steps = schedule.steps();
    m.schedule_fingerprint = schedule.fingerprint();
    m.null_embedding = Eigen::VectorXd::Zero(config.embed_dim);
    m.class_offsets = Eigen::MatrixXd::Zero(config.embed_dim, num_classes);
    std::vector<int> dims;
    dims.push_back(m.input_dim());
    dims.insert(dims.end(), config.hidden.begin(), config.hidden.end());
    dims.push_back(data_dim);
    m.net = make_mlp(dims, config.activation, stream_seed(config.seed, 0));
    return m;
}

Eigen::VectorXd condition_embedding(const EpsModel& model, Condition cond)
{
    if (cond.is_null()) return model.null_embedding;
    if (cond.class_id() >= model.num_classes) {
        throw std::out_of_range("class id " + std::to_string(cond.class_id()) + " outside [0, " +
                                std::to_string(model.num_classes) + ")");
    }
    return model.null_embedding + model.class_offsets.col(cond.class_id());
}

Eigen::MatrixXd featurize(const EpsModel& model, const Eigen::Ref<const Eigen::MatrixXd>& x_t, int t, Condition cond)
{
    if (t < 1 || t > model.steps) {
        throw std::out_of_range("step index " + std::to_string(t) + " outside [1, " + std::to_string(model.steps) + "]");
    }
    if (x_t.rows() != model.data_dim) throw std::invalid_argument("predict: point dimension mismatch");
    const Eigen::VectorXd emb = condition_embedding(model, cond);
    const Eigen::VectorXd tf = time_embedding(t, model.steps, model.time_features);
    Eigen::MatrixXd in(model.input_dim(), x_t.cols());
    in.topRows(model.data_dim) = x_t;
    in.middleRows(model.data_dim, model.time_features).colwise() = tf;
    in.bottomRows(model.embed_dim()).colwise() = emb;
    return in;
}

Eigen::MatrixXd predict_eps_batch(const EpsModel& model, const Eigen::Ref<const Eigen::MatrixXd>& x_t, int t,
                                  Condition cond)
{
    return forward(model.net, featurize(model, x_t, t, cond));
}

Eigen::VectorXd predict_eps(const EpsModel& model, const Eigen::Ref<const Eigen::VectorXd>& x_t, int t, Condition cond)
{
    return predict_eps_batch(model, x_t, t, cond).col(0);
}

void check_fingerprint(const EpsModel& model, const Schedule& schedule)
{
    if (model.schedule_fingerprint != schedule.fingerprint() || model.steps != schedule.steps()) {
        throw FingerprintMismatch("model was trained on a different schedule (fingerprint mismatch)");
    }
}

TrainResult train_epsilon(const LabeledPoints& dataset, const Schedule& schedule, const TrainConfig& config)
{
    config.validate();
    const Eigen::Index n = dataset.size();
    if (n == 0) throw std::invalid_argument("train: empty dataset");
    if (static_cast<Eigen::Index>(dataset.labels.size()) != n) {
        throw std::invalid_argument("train: label count does not match point count");
    }
    const int num_classes =
        std::max(dataset.num_classes, *std::max_element(dataset.labels.begin(), dataset.labels.end()) + 1);

    TrainResult result;
    EpsModel& model = result.model;
    model = make_eps_model(schedule, static_cast<int>(dataset.dim()), num_classes, config);

    const int d = model.data_dim;
    const int steps = schedule.steps();
    const int tf = model.time_features;
    const int ed = model.embed_dim();

    // Time features for every step, looked up per column.
    Eigen::MatrixXd time_table(tf, steps);
    for (int t = 1; t <= steps; ++t) time_table.col(t - 1) = time_embedding(t, steps, tf);
    Eigen::VectorXd sqrt_ab(steps), sqrt_1mab(steps);
    for (int t = 1; t <= steps; ++t) {
        sqrt_ab[t - 1] = std::sqrt(schedule.alpha_bar(t));
        sqrt_1mab[t - 1] = std::sqrt(1.0 - schedule.alpha_bar(t));
    }

    std::mt19937_64 rng(stream_seed(config.seed, 1));
    std::uniform_int_distribution<int> pick_t(1, steps);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::bernoulli_distribution drop(config.drop_prob);

    OptimState<double> opt;
    opt.config.learning_rate = config.learning_rate;

    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), 0);

    const long long batches_per_epoch = (n + config.batch_size - 1) / config.batch_size;
    const long long total_steps = batches_per_epoch * config.epochs;
    ForwardCache<double> cache;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_sum = 0.0;
        for (Eigen::Index start = 0; start < n; start += config.batch_size) {
            const Eigen::Index b = std::min<Eigen::Index>(config.batch_size, n - start);
            Eigen::MatrixXd input(model.input_dim(), b);
            Eigen::MatrixXd noise(d, b);
            std::vector<int> cls(b);
            for (Eigen::Index j = 0; j < b; ++j) {
                const Eigen::Index idx = order[start + j];
                const int t = pick_t(rng);
                for (int k = 0; k < d; ++k) noise(k, j) = normal(rng);
                cls[j] = drop(rng) ? -1 : dataset.labels[idx];
                input.col(j).head(d) = sqrt_ab[t - 1] * dataset.points.col(idx) + sqrt_1mab[t - 1] * noise.col(j);
                input.col(j).segment(d, tf) = time_table.col(t - 1);
                input.col(j).tail(ed) = model.null_embedding;
                if (cls[j] >= 0) input.col(j).tail(ed) += model.class_offsets.col(cls[j]);
            }

            const Eigen::MatrixXd pred = forward(model.net, input, &cache);
            const Eigen::MatrixXd resid = pred - noise;
            const double loss = resid.squaredNorm() / static_cast<double>(b);
            if (!std::isfinite(loss)) {
                throw TrainingDiverged(epoch, "training diverged: non-finite loss at epoch " + std::to_string(epoch));
            }
            epoch_sum += loss * static_cast<double>(b);

            MlpGradients<double> g = backward(model.net, cache, (2.0 / static_cast<double>(b)) * resid);
            const auto emb_grad = g.input.bottomRows(ed);
            Eigen::VectorXd null_grad = emb_grad.rowwise().sum();
            Eigen::MatrixXd offset_grad = Eigen::MatrixXd::Zero(ed, num_classes);
            for (Eigen::Index j = 0; j < b; ++j) {
                if (cls[j] >= 0) offset_grad.col(cls[j]) += emb_grad.col(j);
            }

            const double progress = static_cast<double>(opt.step) / static_cast<double>(std::max(1LL, total_steps - 1));
            opt.config.learning_rate =
                config.learning_rate_final +
                0.5 * (config.learning_rate - config.learning_rate_final) * (1.0 + std::cos(std::numbers::pi * progress));

            auto params = parameter_views(model.net);
            params.emplace_back(model.null_embedding.data(), model.null_embedding.size());
            params.emplace_back(model.class_offsets.data(), model.class_offsets.size());
            auto grads = gradient_views(g);
            grads.emplace_back(null_grad.data(), null_grad.size());
            grads.emplace_back(offset_grad.data(), offset_grad.size());
            opt_step<double>(opt, params, grads);
        }
        result.epoch_loss.push_back(epoch_sum / static_cast<double>(n));
    }
    return result;
}

}  // namespace ccfg
