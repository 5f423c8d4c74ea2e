#include "ccfg/commands.hpp"

#include <cmath>
#include <filesystem>
#include <limits>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "ccfg/checkpoint.hpp"
#include "ccfg/data.hpp"
#include "ccfg/hash.hpp"
#include "ccfg/report.hpp"

namespace ccfg {

namespace {

// Stream indices derived from the sample seed.
constexpr std::uint64_t kReferenceStream = 0x5245;
constexpr std::uint64_t kProjectionStream = 0x50524a;

std::filesystem::path prepare_output(const RunConfig& config)
{
    config.validate();
    const std::filesystem::path dir(config.output);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string checkpoint_path(const RunConfig& config, const std::string& checkpoint)
{
    if (!checkpoint.empty()) return checkpoint;
    return (std::filesystem::path(config.output) / outputs::kCheckpoint).string();
}

Checkpoint load_for(const RunConfig& config, const std::string& checkpoint)
{
    Checkpoint ck = load_checkpoint(checkpoint_path(config, checkpoint));
    check_fingerprint(ck.model, build_schedule(config));
    return ck;
}

template <typename Writer>
void write_file(const std::filesystem::path& path, Writer&& write)
{
    std::ostringstream buf;
    write(buf);
    write_text_file(path.string(), buf.str());
}

RunReport failed_row(const std::string& method, double scale, const std::string& why)
{
    const double nan = std::numeric_limits<double>::quiet_NaN();
    RunReport r;
    r.method = method;
    r.scale = scale;
    r.error_rate = r.off_support = r.sliced_w = r.mean_loglik = nan;
    r.node_occupancy = {nan, nan, nan};
    r.failed = true;
    r.failure = why;
    return r;
}

Dng dng_defaults(const RunConfig& config)
{
    Dng d;
    d.prior = config.sample.dng_prior;
    d.tau_prime = config.sample.dng_tau_prime;
    d.delta = config.sample.dng_delta;
    d.clamp = config.sample.dng_clamp;
    return d;
}

}  // namespace

std::vector<RunReport> run_sweep(const RunConfig& config, const EpsModel& model, const Schedule& schedule,
                                 const CellRunner& runner)
{
    config.validate();
    const MixtureSpec spec = threenode_spec();
    const std::uint64_t seed = config.sample.seed;
    const Eigen::Index n = config.sample.n;
    const Eigen::MatrixXd reference = sample_mixture(spec, stream_seed(seed, kReferenceStream), n).points;

    EvalOptions eval;
    eval.forbidden = config.sweep.forbidden;
    eval.mahal_threshold = config.sweep.mahal_threshold;
    eval.n_proj = config.sweep.n_proj;
    eval.projection_seed = stream_seed(seed, kProjectionStream);

    std::vector<RunReport> rows;
    for (const auto& method : config.sweep.methods) {
        for (double scale : config.sweep.scales) {
            RunReport row;
            try {
                SampleRun run;
                run.seed = seed;
                run.nfe = config.sample.nfe;
                run.spec = make_spec(method, scale, config.sample.tau, dng_defaults(config));
                run.cond = Condition::of_class(config.sweep.forbidden);
                const SampleResult result = runner(model, schedule, run, n);
                if (!result.ok()) {
                    const auto& f = result.failures.front();
                    row = failed_row(method, scale,
                                     fmt::format("{} of {} chains failed; first: chain {}: {}", result.failures.size(), n,
                                                 f.chain, f.message));
                } else if (!result.points.allFinite()) {
                    row = failed_row(method, scale, "non-finite samples");
                } else {
                    row = evaluate(spec, result.points, reference, eval);
                    row.method = method;
                    row.scale = scale;
                }
            } catch (const std::exception& e) {
                row = failed_row(method, scale, e.what());
            }
            row.n = n;
            row.seed = seed;
            row.nfe = config.sample.nfe;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::vector<double> curve_grid(const CurvesSection& curves)
{
    if (!(curves.grid_step > 0.0) || !(curves.grid_max >= curves.grid_min)) {
        throw std::invalid_argument("curves: need grid_step > 0 and grid_max >= grid_min");
    }
    const auto count = static_cast<long long>(std::floor((curves.grid_max - curves.grid_min) / curves.grid_step + 1e-9)) + 1;
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(count));
    for (long long i = 0; i < count; ++i) grid.push_back(curves.grid_min + static_cast<double>(i) * curves.grid_step);
    return grid;
}

std::vector<EquivRow> run_equiv(const RunConfig& config, const EpsModel& model, const Schedule& schedule)
{
    config.validate();
    const auto& eq = config.equiv;
    std::vector<std::string> modes;
    if (eq.mode != "neg") modes.push_back("pos");
    if (eq.mode != "pos") modes.push_back("neg");
    const std::vector<StepPair> steps = step_pairs(schedule, config.sample.nfe);

    std::vector<EquivRow> rows;
    for (const auto& mode : modes) {
        const GuidanceSpec spec = mode == "pos" ? GuidanceSpec(CcfgPos{eq.omega, eq.tau}) : GuidanceSpec(CcfgNeg{eq.omega, eq.tau});
        for (int s = 0; s < eq.seeds; ++s) {
            SampleRun run;
            run.seed = config.sample.seed + static_cast<std::uint64_t>(s);
            run.nfe = config.sample.nfe;
            run.record_trajectory = true;
            run.spec = spec;
            run.cond = Condition::of_class(config.sample.cond);
            const SampleResult noise = sample(model, schedule, run, eq.n);

            run.variant = Variant::PosteriorMean;
            if (eq.wrong_rho) run.step_scales = std::vector<double>(steps.size(), eq.omega);
            const SampleResult posterior = sample(model, schedule, run, eq.n);
            rows.push_back({mode, run.seed, max_trajectory_deviation(noise, posterior)});
        }
    }
    return rows;
}

int cli_train(const RunConfig& config, const std::string& checkpoint, std::ostream& log)
{
    const auto dir = prepare_output(config);
    const Schedule schedule = build_schedule(config);
    const auto [spec, data] = make_threenode(config.data.seed, config.data.n);
    fmt::print(log, "training on {} points for {} epochs\n", data.size(), config.train.epochs);
    const TrainResult result = train_epsilon(data, schedule, build_train_config(config));
    fmt::print(log, "loss {:.6f} -> {:.6f}\n", result.epoch_loss.front(), result.epoch_loss.back());

    const std::string path = checkpoint_path(config, checkpoint);
    save_checkpoint(path, result.model, schedule);
    write_file(dir / outputs::kLoss, [&](std::ostream& o) { write_loss_csv(o, result.epoch_loss); });
    write_file(dir / outputs::kDataset, [&](std::ostream& o) { write_dataset_csv(o, data); });
    write_text_file((dir / outputs::kConfig).string(), serialize_config(config));
    fmt::print(log, "wrote {}\n", path);
    return kExitOk;
}

int cli_sample(const RunConfig& config, const std::string& checkpoint, std::ostream& log)
{
    const auto dir = prepare_output(config);
    const Checkpoint ck = load_for(config, checkpoint);
    const SampleRun run = build_sample_run(config);
    const SampleResult result = sample(ck.model, ck.schedule(), run, config.sample.n);
    for (const auto& f : result.failures) fmt::print(log, "warning: chain {} failed at t={}: {}\n", f.chain, f.t, f.message);

    write_file(dir / outputs::kSamples, [&](std::ostream& o) { write_samples_csv(o, result.points, run.seed); });
    if (config.sample.svg) {
        const std::string title = fmt::format("{} scale {}", config.sample.method, config.sample.scale);
        write_file(dir / outputs::kSamplesSvg,
                   [&](std::ostream& o) { write_scatter_svg(o, threenode_spec(), result.points, kRed, title); });
    }
    fmt::print(log, "wrote {} samples ({} {}) to {}\n", config.sample.n, config.sample.method, config.sample.scale,
               (dir / outputs::kSamples).string());
    return result.ok() ? kExitOk : kExitFailure;
}

int cli_sweep(const RunConfig& config, const std::string& checkpoint, std::ostream& log, const CellRunner& runner)
{
    const auto dir = prepare_output(config);
    const Checkpoint ck = load_for(config, checkpoint);
    const auto rows = run_sweep(config, ck.model, ck.schedule(), runner);
    for (const auto& r : rows) {
        if (r.failed) {
            fmt::print(log, "{:>9} {:>5}  FAILED: {}\n", r.method, r.scale, r.failure);
        } else {
            fmt::print(log, "{:>9} {:>5}  error {:.4f}  off {:.4f}  sw {:.4f}\n", r.method, r.scale, r.error_rate,
                       r.off_support, r.sliced_w);
        }
    }
    write_file(dir / outputs::kSweep, [&](std::ostream& o) { write_report_csv(o, rows); });
    fmt::print(log, "wrote {}\n", (dir / outputs::kSweep).string());
    return kExitOk;
}

int cli_curves(const RunConfig& config, std::ostream& log)
{
    const auto dir = prepare_output(config);
    const auto rows = emit_curves(config.curves.tau, config.curves.omega, curve_grid(config.curves));
    write_file(dir / outputs::kCurves, [&](std::ostream& o) { write_curves_csv(o, rows); });
    if (config.curves.svg) {
        const std::string title = fmt::format("effective scale, tau {}", config.curves.tau);
        write_file(dir / outputs::kCurvesSvg, [&](std::ostream& o) { write_curves_svg(o, rows, title); });
    }
    fmt::print(log, "wrote {} rows to {}\n", rows.size(), (dir / outputs::kCurves).string());
    return kExitOk;
}

int cli_equiv(const RunConfig& config, const std::string& checkpoint, bool strict, std::ostream& log)
{
    const auto dir = prepare_output(config);
    const Checkpoint ck = load_for(config, checkpoint);
    const auto rows = run_equiv(config, ck.model, ck.schedule());
    double worst = 0.0;
    for (const auto& r : rows) worst = std::max(worst, r.max_deviation);
    write_file(dir / outputs::kEquiv, [&](std::ostream& o) {
        o << "mode,seed,max_deviation\n";
        for (const auto& r : rows) o << fmt::format("{},{},{}\n", r.mode, r.seed, r.max_deviation);
    });
    fmt::print(log, "max trajectory deviation over {} runs: {:.3e}{}\n", rows.size(), worst,
               config.equiv.wrong_rho ? " (constant-omega control)" : "");
    if (strict && !(worst <= config.equiv.tolerance)) {
        fmt::print(log, "deviation exceeds tolerance {:.1e}\n", config.equiv.tolerance);
        return kExitStrict;
    }
    return kExitOk;
}

}  // namespace ccfg
