#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ccfg/dataset.hpp"
#include "ccfg/net.hpp"
#include "ccfg/schedule.hpp"

namespace ccfg {

/// Either the null condition or a class id.
class Condition {
public:
    static Condition null() { return Condition(-1); }
    static Condition of_class(int id)
    {
        if (id < 0) throw std::invalid_argument("class id must be non-negative");
        return Condition(id);
    }

    bool is_null() const { return id_ < 0; }
    int class_id() const { return id_; }
    std::string str() const { return is_null() ? std::string("null") : std::to_string(id_); }

    bool operator==(const Condition&) const = default;

private:
    explicit Condition(int id) : id_(id) {}
    int id_;
};

/// Conditional noise predictor eps(x_t, t, c).
///
/// The network input is [x_t ; time features of t/T ; condition embedding].
/// The embedding of class c is null_embedding + class_offsets.col(c), so a
/// class that is never trained predicts exactly like the null condition.
struct EpsModel {
    Mlp net;
    int data_dim = 0;
    int num_classes = 0;
    int time_features = 0;
    int steps = 0;
    Eigen::VectorXd null_embedding;
    Eigen::MatrixXd class_offsets;  // embed_dim x num_classes
    std::uint64_t schedule_fingerprint = 0;

    int embed_dim() const { return static_cast<int>(null_embedding.size()); }
    int input_dim() const { return data_dim + time_features + embed_dim(); }
};

class FingerprintMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class TrainingDiverged : public std::runtime_error {
public:
    TrainingDiverged(int epoch, const std::string& what) : std::runtime_error(what), epoch_(epoch) {}
    int epoch() const { return epoch_; }

private:
    int epoch_;
};

struct TrainConfig {
    int epochs = 200;
    int batch_size = 256;
    double learning_rate = 2e-3;
    double learning_rate_final = 1e-4;  // cosine decay endpoint
    double drop_prob = 0.1;
    std::vector<int> hidden = {64, 64, 64};
    Activation activation = Activation::Silu;
    int embed_dim = 4;
    int time_features = 8;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrainResult {
    EpsModel model;
    std::vector<double> epoch_loss;
};

/// sin/cos features of t/T at octave frequencies; `count` must be even.
Eigen::VectorXd time_embedding(int t, int steps, int count);

/// Fresh model with the given architecture; weights seeded, embeddings zero.
EpsModel make_eps_model(const Schedule& schedule, int data_dim, int num_classes, const TrainConfig& config);

/// Epsilon matching with random condition dropping, Adam, seeded shuffles.
TrainResult train_epsilon(const LabeledPoints& dataset, const Schedule& schedule, const TrainConfig& config);

Eigen::VectorXd condition_embedding(const EpsModel& model, Condition cond);

/// Network input matrix for a batch at a common step t.
Eigen::MatrixXd featurize(const EpsModel& model, const Eigen::Ref<const Eigen::MatrixXd>& x_t, int t, Condition cond);

Eigen::VectorXd predict_eps(const EpsModel& model, const Eigen::Ref<const Eigen::VectorXd>& x_t, int t, Condition cond);

/// Column-wise prediction for a batch sharing t and cond.
Eigen::MatrixXd predict_eps_batch(const EpsModel& model, const Eigen::Ref<const Eigen::MatrixXd>& x_t, int t,
                                  Condition cond);

/// Throws FingerprintMismatch unless the model was trained on `schedule`.
void check_fingerprint(const EpsModel& model, const Schedule& schedule);

}  // namespace ccfg
