#include <doctest.h>

#include <cmath>
#include <random>

#include "ccfg/sampler.hpp"

using namespace ccfg;

namespace {

// Untrained model with distinct class embeddings; enough to exercise every code path.
EpsModel random_model(const Schedule& s, std::uint64_t seed = 5)
{
    TrainConfig tc;
    tc.hidden = {16, 16};
    tc.seed = seed;
    EpsModel m = make_eps_model(s, 2, 2, tc);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index i = 0; i < m.class_offsets.size(); ++i) m.class_offsets.data()[i] = normal(rng);
    for (Eigen::Index i = 0; i < m.null_embedding.size(); ++i) m.null_embedding[i] = normal(rng);
    return m;
}

}  // namespace

TEST_SUITE("sampler") {

TEST_CASE("step pairs")
{
    const Schedule s = make_schedule(500, 1e-4, 0.02);
    const auto p = step_pairs(s, 100);
    REQUIRE(p.size() == 100);
    CHECK(p.front() == StepPair{500, 495});
    CHECK(p.back() == StepPair{5, 0});
    for (std::size_t i = 1; i < p.size(); ++i) CHECK(p[i].t == p[i - 1].t_prev);
    const auto full = step_pairs(s, 500);
    CHECK(full[250] == StepPair{250, 249});
    const auto odd = step_pairs(s, 7);
    CHECK(odd.front().t == 500);
    CHECK(odd.back().t_prev == 0);
    CHECK_THROWS_AS(step_pairs(s, 0), std::invalid_argument);
    CHECK_THROWS_AS(step_pairs(s, 501), std::invalid_argument);
}

TEST_CASE("ddim step: pure rescale with zero noise")
{
    const Schedule s = make_schedule(500, 1e-4, 0.02);
    const Eigen::Vector2d x(0.7, -1.3);
    const Eigen::Vector2d z = Eigen::Vector2d::Zero();
    const Eigen::Vector2d y = ddim_step(s, 300, 295, x, z, z);
    CHECK((y - std::sqrt(s.alpha_bar(295) / s.alpha_bar(300)) * x).norm() < 1e-13);
}

TEST_CASE("ddim step to t_prev = 0 returns the posterior mean")
{
    const Schedule s = make_schedule(500, 1e-4, 0.02);
    const Eigen::Vector2d x(0.7, -1.3), e(0.2, 0.4), r(-3.0, 8.0);
    CHECK(ddim_step(s, 5, 0, x, e, r) == posterior_mean(s, x, 5, e));
}

TEST_CASE("ddim step maps a forward sample to the earlier forward sample")
{
    const Schedule s = make_schedule(500, 1e-4, 0.02);
    const Eigen::Vector3d x0(1.0, -0.5, 2.0), e(0.3, -1.1, 0.8);
    for (auto [t, tp] : {std::pair{500, 495}, std::pair{250, 1}, std::pair{2, 1}, std::pair{40, 0}}) {
        const Eigen::Vector3d x_t = forward_sample(s, x0, t, e);
        const Eigen::Vector3d expected = tp == 0 ? Eigen::Vector3d(x0) : Eigen::Vector3d(forward_sample(s, x0, tp, e));
        CHECK((ddim_step(s, t, tp, x_t, e, e) - expected).norm() < 1e-12);
    }
    CHECK_THROWS_AS(ddim_step(s, 5, 5, x0, e, e), std::out_of_range);
}

TEST_CASE("rho coefficient")
{
    // sqrt(8/9) sqrt(0.1) / sqrt(0.2) = 2/3
    CHECK(rho_coefficient(3.0, 0.8, 0.9) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(rho_coefficient(7.5, 0.8, 0.9) == doctest::Approx(2.5).epsilon(1e-14));
    CHECK(rho_coefficient(4.0, 0.8, 0.8) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(std::abs(rho_coefficient(4.0, 0.8, 0.8)) < 1e-15);
    CHECK_THROWS_AS(rho_coefficient(1.0, 1.0, 1.0), std::domain_error);

    const Schedule s = make_schedule(500, 1e-4, 0.02);
    for (int nfe : {1, 10, 100, 500}) {
        const auto steps = step_pairs(s, nfe);
        const auto rho = rho_schedule(7.5, s, steps);
        for (std::size_t i = 0; i < steps.size(); ++i) {
            CHECK(rho[i] > 0.0);
            // The step that lands on abar_0 = 1 has the factor exactly 1.
            if (steps[i].t_prev > 0) {
                CHECK(rho[i] < 7.5);
            } else {
                CHECK(rho[i] == 7.5);
            }
        }
    }
}

TEST_CASE("initial noise is keyed by chain")
{
    const Eigen::MatrixXd a = initial_noise(3, 2, 8);
    const Eigen::MatrixXd b = initial_noise(3, 2, 4);
    CHECK(a.leftCols(4) == b);
    CHECK(initial_noise(4, 2, 4) != b);
}

TEST_CASE("sampling is deterministic")
{
    const Schedule s = make_schedule(500, 1e-4, 0.02);
    const EpsModel m = random_model(s);
    SampleRun run;
    run.seed = 11;
    run.spec = CcfgNeg{4.0, 0.2};
    run.cond = Condition::of_class(1);
    const auto a = sample(m, s, run, 64);
    const auto b = sample(m, s, run, 64);
    CHECK(a.points == b.points);
    CHECK(a.ok());
    // Chains do not interact.
    const auto c = sample(m, s, run, 16);
    CHECK((a.points.leftCols(16) - c.points).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("zero-scale ccfg-neg is unguided sampling, bitwise")
{
    const Schedule s = make_schedule(500, 1e-4, 0.02);
    const EpsModel m = random_model(s);
    SampleRun none;
    none.seed = 2;
    SampleRun zero = none;
    zero.spec = CcfgNeg{0.0, 1e-6};
    zero.cond = Condition::of_class(1);
    CHECK(sample(m, s, none, 32).points == sample(m, s, zero, 32).points);
}

TEST_CASE("noise-space and posterior-mean sampling coincide under rho")
{
    const Schedule s = make_schedule(500, 1e-4, 0.02);
    const EpsModel m = random_model(s, 9);
    for (double omega : {1.0, 7.5}) {
        for (int mode = 0; mode < 3; ++mode) {
            SampleRun run;
            run.seed = 100 + static_cast<std::uint64_t>(mode);
            run.record_trajectory = true;
            run.cond = Condition::of_class(1);
            run.spec = mode == 0 ? GuidanceSpec(CcfgPos{omega, 0.2})
                       : mode == 1 ? GuidanceSpec(CcfgNeg{omega, 0.2})
                                   : GuidanceSpec(Cfg{omega});
            const auto a = sample(m, s, run, 32);
            run.variant = Variant::PosteriorMean;
            const auto b = sample(m, s, run, 32);
            REQUIRE(a.trajectory.size() == 101);
            CHECK(max_trajectory_deviation(a, b) <= 1e-9);

            // Constant omega in the posterior-mean variant is a different sampler.
            run.step_scales = std::vector<double>(100, omega);
            CHECK(max_trajectory_deviation(a, sample(m, s, run, 32)) > 1e-3);
        }
    }
}

TEST_CASE("guided variants run and stay finite")
{
    const Schedule s = make_schedule(200, 1e-4, 0.04);
    const EpsModel m = random_model(s);
    for (const GuidanceSpec& spec : std::vector<GuidanceSpec>{Cfg{2.0}, CfgPP{0.6}, NCfg{1.0}, Dng{2.0},
                                                              CcfgPos{3.0, 0.2}, CcfgNeg{3.0, 0.2}, PosNeg{1.5}}) {
        SampleRun run;
        run.nfe = 20;
        run.spec = spec;
        run.cond = Condition::of_class(1);
        if (needs_second_condition(spec)) run.cond2 = Condition::of_class(0);
        const auto r = sample(m, s, run, 16);
        CHECK(r.ok());
        CHECK(r.points.allFinite());
    }
}

TEST_CASE("invalid runs are rejected")
{
    const Schedule s = make_schedule(200, 1e-4, 0.04);
    const EpsModel m = random_model(s);
    SampleRun run;
    run.spec = Cfg{1.0};
    CHECK_THROWS_AS(sample(m, s, run, 4), std::invalid_argument);  // guided without a class
    run.cond = Condition::of_class(5);
    CHECK_THROWS_AS(sample(m, s, run, 4), std::out_of_range);
    run.cond = Condition::of_class(1);
    run.spec = Dng{1.0};
    run.variant = Variant::PosteriorMean;
    CHECK_THROWS_AS(sample(m, s, run, 4), std::invalid_argument);
    run.spec = PosNeg{1.0};
    run.variant = Variant::NoiseSpace;
    CHECK_THROWS_AS(sample(m, s, run, 4), std::invalid_argument);
    run.spec = Cfg{1.0};
    run.nfe = 201;
    CHECK_THROWS_AS(sample(m, s, run, 4), std::invalid_argument);
    run.nfe = 10;
    CHECK_THROWS_AS(sample(m, make_schedule(200, 1e-4, 0.05), run, 4), FingerprintMismatch);
    run.step_scales = std::vector<double>(3, 1.0);
    CHECK_THROWS_AS(sample(m, s, run, 4), std::invalid_argument);
    CHECK_THROWS_AS(parse_variant("sideways"), std::invalid_argument);
    CHECK(parse_variant(to_string(Variant::PosteriorMean)) == Variant::PosteriorMean);
}

TEST_CASE("non-finite chains are stopped and reported")
{
    const Schedule s = make_schedule(200, 1e-4, 0.04);
    EpsModel m = random_model(s);
    m.net.biases.back()[0] = std::numeric_limits<double>::infinity();
    SampleRun run;
    run.nfe = 10;
    const auto r = sample(m, s, run, 5);
    CHECK_FALSE(r.ok());
    CHECK(r.failures.size() == 5);
    CHECK(r.failures.front().t == 200);
    CHECK(r.points.array().isNaN().all());
}

}
