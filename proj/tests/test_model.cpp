#include <doctest.h>

#include <cmath>

#include "ccfg/data.hpp"
#include "ccfg/model.hpp"

using namespace ccfg;

namespace {

LabeledPoints point_mass(const Eigen::Vector2d& x0, int n)
{
    LabeledPoints d;
    d.points = x0.replicate(1, n);
    d.labels.assign(n, 0);
    d.num_classes = 1;
    return d;
}

// Small trained model for the point-mass oracle, shared by the cases below.
const TrainResult& point_mass_model()
{
    static const TrainResult result = [] {
        const Schedule s = make_schedule(500, 1e-4, 0.02);
        TrainConfig tc;
        tc.epochs = 300;
        tc.batch_size = 256;
        tc.hidden = {64, 64};
        tc.learning_rate = 5e-3;
        tc.seed = 4;
        return train_epsilon(point_mass(Eigen::Vector2d(1.0, -0.5), 8192), s, tc);
    }();
    return result;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("condition")
{
    CHECK(Condition::null().is_null());
    CHECK(Condition::of_class(2).class_id() == 2);
    CHECK(Condition::of_class(0) != Condition::null());
    CHECK_THROWS_AS(Condition::of_class(-1), std::invalid_argument);
}

TEST_CASE("time embedding")
{
    const Eigen::VectorXd f = time_embedding(250, 500, 8);
    CHECK(f.size() == 8);
    CHECK(f[0] == doctest::Approx(1.0));   // sin(pi/2)
    CHECK(std::abs(f[1]) < 1e-15);          // cos(pi/2)
    CHECK((time_embedding(17, 500, 6) - time_embedding(17, 500, 6)).norm() == 0.0);
}

TEST_CASE("training config validation")
{
    TrainConfig tc;
    tc.epochs = 0;
    CHECK_THROWS_AS(tc.validate(), std::invalid_argument);
    tc = {};
    tc.drop_prob = 1.2;
    CHECK_THROWS_AS(tc.validate(), std::invalid_argument);
    tc = {};
    tc.time_features = 3;
    CHECK_THROWS_AS(tc.validate(), std::invalid_argument);
    tc = {};
    tc.drop_prob = 1.0;
    CHECK_NOTHROW(tc.validate());
}

TEST_CASE("zero-weight model predicts zero; predictions are pure")
{
    const Schedule s = make_schedule(500, 1e-4, 0.02);
    TrainConfig tc;
    EpsModel m = make_eps_model(s, 2, 2, tc);
    const Eigen::Vector2d x(0.3, -1.0);
    const Eigen::VectorXd a = predict_eps(m, x, 123, Condition::of_class(1));
    CHECK(a == predict_eps(m, x, 123, Condition::of_class(1)));
    for (auto& w : m.net.weights) w.setZero();
    for (auto& b : m.net.biases) b.setZero();
    CHECK(predict_eps(m, x, 123, Condition::null()).isZero(0.0));
}

TEST_CASE("batch prediction matches single prediction")
{
    const Schedule s = make_schedule(500, 1e-4, 0.02);
    EpsModel m = make_eps_model(s, 2, 2, TrainConfig{});
    m.class_offsets.setConstant(0.3);
    Eigen::MatrixXd X(2, 3);
    X << 1, 2, 3, 4, 5, 6;
    const Eigen::MatrixXd B = predict_eps_batch(m, X, 40, Condition::of_class(0));
    for (int j = 0; j < 3; ++j) {
        CHECK((B.col(j) - predict_eps(m, Eigen::VectorXd(X.col(j)), 40, Condition::of_class(0))).norm() <= 1e-14);
    }
}

TEST_CASE("prediction input checks")
{
    const Schedule s = make_schedule(500, 1e-4, 0.02);
    const EpsModel m = make_eps_model(s, 2, 2, TrainConfig{});
    CHECK_THROWS_AS(predict_eps(m, Eigen::Vector2d(0, 0), 0, Condition::null()), std::out_of_range);
    CHECK_THROWS_AS(predict_eps(m, Eigen::Vector2d(0, 0), 501, Condition::null()), std::out_of_range);
    CHECK_THROWS_AS(predict_eps(m, Eigen::Vector3d(0, 0, 0), 5, Condition::null()), std::invalid_argument);
    CHECK_THROWS_AS(predict_eps(m, Eigen::Vector2d(0, 0), 5, Condition::of_class(2)), std::out_of_range);
}

TEST_CASE("fingerprint binds the model to its schedule")
{
    const Schedule s = make_schedule(500, 1e-4, 0.02);
    const EpsModel m = make_eps_model(s, 2, 2, TrainConfig{});
    CHECK_NOTHROW(check_fingerprint(m, s));
    CHECK_THROWS_AS(check_fingerprint(m, make_schedule(500, 1e-4, 0.021)), FingerprintMismatch);
}

TEST_CASE("point mass: prediction approaches the analytic optimum")
{
    const Schedule s = make_schedule(500, 1e-4, 0.02);
    const Eigen::Vector2d x0(1.0, -0.5);
    const EpsModel& m = point_mass_model().model;
    double worst = 0.0;
    for (int t : {100, 250, 400, 500}) {
        const double ab = s.alpha_bar(t);
        for (double u : {-1.5, -0.5, 0.5, 1.5}) {
            for (double v : {-1.5, -0.5, 0.5, 1.5}) {
                const Eigen::Vector2d x_t = forward_sample(s, x0, t, Eigen::Vector2d(u, v));
                const Eigen::Vector2d expected = (x_t - std::sqrt(ab) * x0) / std::sqrt(1.0 - ab);
                worst = std::max(worst, (predict_eps(m, x_t, t, Condition::null()) - expected).cwiseAbs().maxCoeff());
                worst = std::max(worst, (predict_eps(m, x_t, t, Condition::of_class(0)) - expected).cwiseAbs().maxCoeff());
            }
        }
    }
    MESSAGE("point-mass max abs error: " << worst);
    CHECK(worst <= 0.05);
}

TEST_CASE("point mass at t = T/2")
{
    const Schedule s = make_schedule(500, 1e-4, 0.02);
    const Eigen::Vector2d x0(1.0, -0.5);
    const EpsModel& m = point_mass_model().model;
    const double ab = s.alpha_bar(250);
    const Eigen::Vector2d x_t(0.2, 0.4);
    const Eigen::Vector2d expected = (x_t - std::sqrt(ab) * x0) / std::sqrt(1.0 - ab);
    CHECK((predict_eps(m, x_t, 250, Condition::null()) - expected).cwiseAbs().maxCoeff() <= 0.05);
}

TEST_CASE("drop probability 1 makes class and null predictions coincide")
{
    const Schedule s = make_schedule(100, 1e-3, 0.05);
    const auto [spec, data] = make_threenode(3, 512);
    TrainConfig tc;
    tc.epochs = 3;
    tc.hidden = {16};
    tc.drop_prob = 1.0;
    const EpsModel m = train_epsilon(data, s, tc).model;
    for (int t : {1, 50, 100}) {
        for (double u : {-3.0, 0.0, 2.5}) {
            const Eigen::Vector2d x(u, -u);
            const Eigen::VectorXd null_eps = predict_eps(m, x, t, Condition::null());
            CHECK(predict_eps(m, x, t, Condition::of_class(0)) == null_eps);
            CHECK(predict_eps(m, x, t, Condition::of_class(1)) == null_eps);
        }
    }
}

TEST_CASE("training is seeded and reduces the loss")
{
    const Schedule s = make_schedule(500, 1e-4, 0.02);
    const auto [spec, data] = make_threenode(1, 4000);
    TrainConfig tc;
    tc.epochs = 8;
    tc.hidden = {32, 32};
    const TrainResult a = train_epsilon(data, s, tc);
    const TrainResult b = train_epsilon(data, s, tc);
    CHECK(a.epoch_loss == b.epoch_loss);
    CHECK(a.model.net.weights.back() == b.model.net.weights.back());
    CHECK(a.epoch_loss.back() < a.epoch_loss.front());
}

TEST_CASE("empty dataset is rejected")
{
    const Schedule s = make_schedule(50, 1e-3, 0.05);
    LabeledPoints empty;
    empty.points.resize(2, 0);
    empty.num_classes = 1;
    CHECK_THROWS_AS(train_epsilon(empty, s, TrainConfig{}), std::invalid_argument);
}

}
