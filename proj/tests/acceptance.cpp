// Acceptance run: trains the default toy model once and prints one PASS/FAIL
// line per criterion. Exit status is nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <fmt/format.h>

#include "ccfg/checkpoint.hpp"
#include "ccfg/commands.hpp"
#include "ccfg/config.hpp"
#include "ccfg/data.hpp"
#include "ccfg/guidance.hpp"
#include "ccfg/metrics.hpp"
#include "ccfg/model.hpp"
#include "ccfg/sampler.hpp"

using namespace ccfg;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

struct Verdict {
    int id;
    std::string name;
    bool pass;
    std::string detail;
};

std::vector<Verdict> verdicts;

void record(int id, const std::string& name, bool pass, const std::string& detail)
{
    verdicts.push_back({id, name, pass, detail});
    fmt::print("{} criterion {}: {} ({})\n", pass ? "PASS" : "FAIL", id, name, detail);
    std::cout.flush();
}

void note(const std::string& line) { fmt::print("  {}\n", line); }

// ---------------------------------------------------------------------------

void criterion1()
{
    const auto start = Clock::now();
    std::mt19937_64 rng(20240611);
    std::normal_distribution<double> normal;
    const double h = 1e-5;
    const std::vector<double> taus = {0.05, 0.2, 1.0};
    double worst = 0.0;
    int checks = 0;
    for (int draw = 0; draw < 1000; ++draw) {
        const int dim = 2 + draw % 7;
        const double tau = taus[static_cast<std::size_t>(draw) % taus.size()];
        const double omega = 0.5 + 7.0 * std::uniform_real_distribution<double>()(rng);
        Eigen::VectorXd en(dim), ec(dim);
        for (int k = 0; k < dim; ++k) en[k] = normal(rng);
        for (int k = 0; k < dim; ++k) ec[k] = en[k] + normal(rng);
        for (bool pos : {true, false}) {
            const auto loss = [&](const Eigen::VectorXd& e) {
                return pos ? nce_loss_pos(e, en, ec, tau) : nce_loss_neg(e, en, ec, tau);
            };
            Eigen::VectorXd grad(dim);
            for (int k = 0; k < dim; ++k) {
                Eigen::VectorXd up = en, down = en;
                up[k] += h;
                down[k] -= h;
                grad[k] = (loss(up) - loss(down)) / (2 * h);
            }
            const GuidanceSpec spec = pos ? GuidanceSpec(CcfgPos{omega, tau}) : GuidanceSpec(CcfgNeg{omega, tau});
            const Eigen::VectorXd update = guide(spec, en, ec).guided - en;
            const Eigen::VectorXd expected = -(omega / tau) * grad;
            worst = std::max(worst, (update - expected).norm() / expected.norm());
            ++checks;
        }
    }
    const double elapsed = seconds_since(start);
    record(1, "gradient oracle", worst <= 1e-5 && elapsed < 5.0,
           fmt::format("max rel err {:.2e} over {} updates, limit 1e-5; {:.2f} s, limit 5 s", worst, checks, elapsed));
}

void criterion2()
{
    const auto start = Clock::now();
    bool ranges = true, monotone = true;
    double prev_pos = 0.0, prev_neg = 0.0;
    for (int i = 0; i <= 20000; ++i) {
        const double d2 = 0.01 * i;
        for (double tau : {0.05, 0.2, 1.0}) {
            const double p = coef_ccfg_pos(tau, d2), n = coef_ccfg_neg(tau, d2);
            ranges = ranges && p >= 1.0 && p < 2.0 && n >= -1.0 && n <= 0.0;
        }
        const double p = coef_ccfg_pos(0.2, d2), n = coef_ccfg_neg(0.2, d2);
        if (i > 0) monotone = monotone && p >= prev_pos && n >= prev_neg;
        prev_pos = p;
        prev_neg = n;
    }
    // Independently evaluated: 2/(1+e^-2) and -2/(1+e^2).
    const double pos_err = std::abs(coef_ccfg_pos(0.2, 10.0) - 1.7615942);
    const double neg_err = std::abs(coef_ccfg_neg(0.2, 10.0) - (-0.2384058));
    const double elapsed = seconds_since(start);
    record(2, "coefficient calculus", ranges && monotone && pos_err <= 1e-6 && neg_err <= 1e-6 && elapsed < 1.0,
           fmt::format("ranges {}, monotone {}, |pos - 1.7615942| {:.1e}, |neg + 0.2384058| {:.1e}; {:.3f} s", ranges,
                       monotone, pos_err, neg_err, elapsed));
}

void criterion3(const EpsModel& model, const Schedule& schedule)
{
    const auto start = Clock::now();
    RunConfig config;
    config.sample.nfe = 100;
    config.equiv.seeds = 10;
    config.equiv.mode = "both";
    double worst = 0.0;
    std::size_t runs = 0;
    for (double omega : {1.0, 7.5}) {
        config.equiv.omega = omega;
        for (const auto& row : run_equiv(config, model, schedule)) {
            worst = std::max(worst, row.max_deviation);
            ++runs;
        }
    }
    const double elapsed = seconds_since(start);
    record(3, "noise-space and posterior-mean samplers agree", worst <= 1e-9 && runs == 40 && elapsed < 30.0,
           fmt::format("max deviation {:.2e} over {} trajectory pairs, limit 1e-9; {:.1f} s, limit 30 s", worst, runs,
                       elapsed));
}

const RunReport& find(const std::vector<RunReport>& rows, const std::string& method, double scale)
{
    for (const auto& r : rows) {
        if (r.method == method && r.scale == scale) return r;
    }
    throw std::logic_error("sweep row missing: " + method);
}

void criterion4(const EpsModel& model, const Schedule& schedule, double train_seconds)
{
    RunConfig config;  // tau 0.2, n 4096, NFE 100, scales {1, 2, 4, 7.5}
    const auto start = Clock::now();
    const auto rows = run_sweep(config, model, schedule);
    const double sweep_seconds = seconds_since(start);
    const MixtureSpec spec = threenode_spec();

    note(fmt::format("{:>9} {:>5} {:>8} {:>8} {:>8} {:>8}", "method", "scale", "error", "off", "sw", "occ1/12"));
    for (const auto& r : rows) {
        const double split = r.node_occupancy[0] / (r.node_occupancy[0] + r.node_occupancy[1]);
        note(fmt::format("{:>9} {:>5} {:8.4f} {:8.4f} {:8.4f} {:8.4f}", r.method, r.scale, r.error_rate, r.off_support,
                         r.sliced_w, split));
    }

    bool a = true;
    for (double scale : config.sweep.scales) {
        if (scale < 2.0) continue;
        a = a && find(rows, "ccfg-neg", scale).error_rate < find(rows, "dng", scale).error_rate;
    }
    const auto& neg75 = find(rows, "ccfg-neg", 7.5);
    const bool b = neg75.off_support < find(rows, "ncfg", 7.5).off_support && neg75.off_support <= 0.05;
    bool c = true;
    double worst_split = 0.0;
    for (double scale : config.sweep.scales) {
        const auto& r = find(rows, "ccfg-neg", scale);
        const double split = r.node_occupancy[0] / (r.node_occupancy[0] + r.node_occupancy[1]);
        const double dev = std::isfinite(split) ? std::abs(split - 0.5) : std::numeric_limits<double>::infinity();
        worst_split = std::max(worst_split, dev);
        c = c && dev <= 0.10;
    }

    SampleRun base;
    base.seed = config.sample.seed;
    base.nfe = config.sample.nfe;
    const SampleResult uncond = sample(model, schedule, base, config.sample.n);
    const double base_error = error_rate(spec, uncond.points, kRed);
    const bool d = uncond.ok() && std::abs(base_error - 1.0 / 6.0) <= 0.02;
    const bool timing = train_seconds <= 120.0 && sweep_seconds <= 300.0;

    note(fmt::format("(a) ccfg-neg error < dng error at every scale >= 2: {}", a));
    note(fmt::format("(b) ccfg-neg off-support at 7.5 = {:.4f}, below ncfg and <= 0.05: {}", neg75.off_support, b));
    note(fmt::format("(c) blue-node split within 0.5 +- 0.10 at every scale (worst |dev| {:.3f}): {}", worst_split, c));
    note(fmt::format("(d) unconditional error {:.4f}, target 1/6 +- 0.02: {}", base_error, d));
    note(fmt::format("training {:.1f} s (limit 120), sweep {:.1f} s (limit 300)", train_seconds, sweep_seconds));
    std::string failed;
    for (auto [flag, label] : {std::pair{a, "a"}, {b, "b"}, {c, "c"}, {d, "d"}, {timing, "time"}}) {
        if (!flag) failed += failed.empty() ? label : std::string(",") + label;
    }
    record(4, "three-node ordering at tau 0.2", a && b && c && d && timing,
           failed.empty() ? "all parts hold" : "failed parts: " + failed);

    // Not gating: the same sampler with a sharper contrast kernel.
    for (double scale : {2.0, 7.5}) {
        SampleRun run = base;
        run.spec = CcfgNeg{scale, 5.0};
        run.cond = Condition::of_class(kRed);
        const SampleResult s = sample(model, schedule, run, config.sample.n);
        note(fmt::format("info: ccfg-neg tau 5 scale {}: error {:.4f}, off-support {:.4f}", scale,
                         error_rate(spec, s.points, kRed), off_support_fraction(spec, s.points)));
    }
}

void criterion5(const EpsModel& model, const Schedule& schedule)
{
    double worst = 0.0;
    for (double scale : {1.0, 4.0, 7.5}) {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            SampleRun run;
            run.seed = seed;
            run.nfe = 100;
            run.record_trajectory = true;
            run.cond = Condition::of_class(kRed);
            run.spec = CcfgPos{scale, 1e-8};
            const SampleResult pos = sample(model, schedule, run, 64);
            run.spec = Cfg{scale};
            const SampleResult cfg = sample(model, schedule, run, 64);
            worst = std::max(worst, max_trajectory_deviation(pos, cfg));
        }
    }

    const MixtureSpec spec = threenode_spec();
    SampleRun run;
    run.nfe = 100;
    const double base = class_purity(spec, sample(model, schedule, run, 4096).points, kRed);
    run.spec = CcfgPos{4.0, 0.2};
    run.cond = Condition::of_class(kRed);
    const double guided = class_purity(spec, sample(model, schedule, run, 4096).points, kRed);
    record(5, "positive guidance sanity", worst <= 1e-6 && guided - base >= 0.2,
           fmt::format("tau 1e-8 vs cfg max deviation {:.2e} (limit 1e-6); red purity {:.4f} -> {:.4f} at scale 4, "
                       "gain {:.4f} (limit 0.2)",
                       worst, base, guided, guided - base));
}

std::map<std::string, std::string> snapshot(const fs::path& dir)
{
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::ifstream in(entry.path(), std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        files[entry.path().filename().string()] = ss.str();
    }
    return files;
}

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(CCFG_LAB_PATH) + " " + args + " > /dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void criterion6(const EpsModel& model, const Schedule& schedule)
{
    const fs::path dir = fs::temp_directory_path() / "ccfg_acceptance_cli";
    fs::remove_all(dir);
    const std::string common = "--out " + dir.string() +
                               " --set data.n=3000 --set train.epochs=3 --set sample.n=512 --set sweep.n_proj=16"
                               " --set equiv.seeds=2 --set equiv.n=16";
    const std::vector<std::string> commands = {
        "train " + common,
        "sample " + common + " --seed 11 --set sample.method=ccfg-neg --set sample.scale=4 --set sample.svg=true",
        "sweep " + common + " --seed 5",
        "curves " + common + " --set curves.svg=true",
        "equiv " + common + " --strict",
    };
    bool exits_ok = true;
    std::map<std::string, std::string> first;
    for (int pass = 0; pass < 2; ++pass) {
        for (const auto& c : commands) exits_ok = exits_ok && run_cli(c) == 0;
        if (pass == 0) first = snapshot(dir);
    }
    const auto second = snapshot(dir);
    std::size_t differing = 0;
    for (const auto& [name, bytes] : first) {
        const auto it = second.find(name);
        if (it == second.end() || it->second != bytes) {
            note("differs between runs: " + name);
            ++differing;
        }
    }
    fs::remove_all(dir);

    // Round trip of the trained default model.
    const Checkpoint back = decode_checkpoint(encode_checkpoint(model, schedule));
    const bool reencoded = encode_checkpoint(back.model, back.schedule()) == encode_checkpoint(model, schedule);
    std::size_t mismatches = 0, probes = 0;
    for (int t : {1, 50, 250, 499, 500}) {
        for (Condition c : {Condition::null(), Condition::of_class(kBlue), Condition::of_class(kRed)}) {
            for (double x : {-6.0, -1.5, 0.0, 2.5, 7.0}) {
                const Eigen::Vector2d p(x, 0.5 * x - 1.0);
                mismatches += (predict_eps(back.model, p, t, c).array() != predict_eps(model, p, t, c).array()).count();
                ++probes;
            }
        }
    }
    record(6, "determinism and persistence",
           exits_ok && first.size() >= 9 && differing == 0 && reencoded && mismatches == 0,
           fmt::format("cli exits ok {}, {} files compared, {} differ; re-encode identical {}, {} of {} predictions "
                       "differ in some bit",
                       exits_ok, first.size(), differing, reencoded, mismatches, probes));
}

void criterion7()
{
    double worst = 0.0;
    for (int i = 0; i <= 100000; ++i) worst = std::max(worst, std::abs(coef_ccfg_neg(0.2, 90.0 + 0.01 * i)));
    for (double d2 : {1e4, 1e6, 1e300, std::numeric_limits<double>::infinity()}) worst = std::max(worst, std::abs(coef_ccfg_neg(0.2, d2)));
    record(7, "vanishing negative guidance", worst <= 1e-6,
           fmt::format("max |coef_neg(0.2, d2)| for d2 >= 90 is {:.3e}, limit 1e-6", worst));
}

}  // namespace

int main()
{
    try {
        criterion1();
        criterion2();
        criterion7();

        const RunConfig config;
        fmt::print("training the default model ({} points, {} epochs)\n", config.data.n, config.train.epochs);
        std::cout.flush();
        const auto start = Clock::now();
        const Schedule schedule = build_schedule(config);
        const auto [spec, data] = make_threenode(config.data.seed, config.data.n);
        const TrainResult trained = train_epsilon(data, schedule, build_train_config(config));
        const double train_seconds = seconds_since(start);
        note(fmt::format("loss {:.4f} -> {:.4f} in {:.1f} s", trained.epoch_loss.front(), trained.epoch_loss.back(),
                         train_seconds));

        criterion3(trained.model, schedule);
        criterion4(trained.model, schedule, train_seconds);
        criterion5(trained.model, schedule);
        criterion6(trained.model, schedule);
    } catch (const std::exception& e) {
        fmt::print("FAIL acceptance run aborted: {}\n", e.what());
        return 1;
    }

    std::sort(verdicts.begin(), verdicts.end(), [](const Verdict& a, const Verdict& b) { return a.id < b.id; });
    int passed = 0;
    fmt::print("\nsummary\n");
    for (const auto& v : verdicts) {
        fmt::print("  criterion {} {}: {}\n", v.id, v.pass ? "PASS" : "FAIL", v.name);
        passed += v.pass;
    }
    fmt::print("{} of {} criteria pass\n", passed, verdicts.size());
    return passed == static_cast<int>(verdicts.size()) ? 0 : 1;
}
