#include "ccfg/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>

#include <fmt/format.h>

namespace ccfg {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError("empty list element in '" + s + "'");
        out.push_back(item);
    }
    return out;
}

template <typename T>
T parse_number(const std::string& s)
{
    T value{};
    const char* first = s.data();
    const char* last = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) throw ConfigError("not a number: '" + s + "'");
    return value;
}

bool parse_bool(const std::string& s)
{
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw ConfigError("not a boolean: '" + s + "'");
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

template <typename T>
std::string join(const std::vector<T>& v)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt::format("{}", v[i]);
    return out;
}

struct Field {
    const char* section;
    const char* key;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

#define CCFG_NUM(sec, member, name, type)                                                             \
    Field{#sec, name, [](const RunConfig& c) { return fmt::format("{}", c.sec.member); },            \
          [](RunConfig& c, const std::string& v) { c.sec.member = parse_number<type>(v); }}
#define CCFG_STR(sec, member, name)                                                                   \
    Field{#sec, name, [](const RunConfig& c) { return c.sec.member; },                                \
          [](RunConfig& c, const std::string& v) { c.sec.member = v; }}
#define CCFG_BOOL(sec, member, name)                                                                  \
    Field{#sec, name, [](const RunConfig& c) { return fmt_bool(c.sec.member); },                      \
          [](RunConfig& c, const std::string& v) { c.sec.member = parse_bool(v); }}

const std::vector<Field>& fields()
{
    static const std::vector<Field> table = {
        CCFG_NUM(data, seed, "seed", std::uint64_t),
        CCFG_NUM(data, n, "n", long long),

        CCFG_NUM(schedule, steps, "steps", int),
        CCFG_NUM(schedule, beta_min, "beta_min", double),
        CCFG_NUM(schedule, beta_max, "beta_max", double),

        CCFG_NUM(train, epochs, "epochs", int),
        CCFG_NUM(train, batch_size, "batch_size", int),
        CCFG_NUM(train, learning_rate, "learning_rate", double),
        CCFG_NUM(train, learning_rate_final, "learning_rate_final", double),
        CCFG_NUM(train, drop_prob, "drop_prob", double),
        Field{"train", "hidden", [](const RunConfig& c) { return join(c.train.hidden); },
              [](RunConfig& c, const std::string& v) {
                  c.train.hidden.clear();
                  for (const auto& item : split_list(v)) c.train.hidden.push_back(parse_number<int>(item));
              }},
        CCFG_STR(train, activation, "activation"),
        CCFG_NUM(train, embed_dim, "embed_dim", int),
        CCFG_NUM(train, time_features, "time_features", int),
        CCFG_NUM(train, seed, "seed", std::uint64_t),

        CCFG_STR(sample, method, "method"),
        CCFG_NUM(sample, scale, "scale", double),
        CCFG_NUM(sample, tau, "tau", double),
        CCFG_NUM(sample, cond, "cond", int),
        CCFG_NUM(sample, cond2, "cond2", int),
        CCFG_NUM(sample, dng_prior, "dng_prior", double),
        CCFG_NUM(sample, dng_tau_prime, "dng_tau_prime", double),
        CCFG_NUM(sample, dng_delta, "dng_delta", double),
        CCFG_NUM(sample, dng_clamp, "dng_clamp", double),
        CCFG_NUM(sample, nfe, "nfe", int),
        CCFG_NUM(sample, seed, "seed", std::uint64_t),
        CCFG_NUM(sample, n, "n", long long),
        CCFG_STR(sample, variant, "variant"),
        CCFG_BOOL(sample, svg, "svg"),

        Field{"sweep", "methods", [](const RunConfig& c) { return join(c.sweep.methods); },
              [](RunConfig& c, const std::string& v) { c.sweep.methods = split_list(v); }},
        Field{"sweep", "scales", [](const RunConfig& c) { return join(c.sweep.scales); },
              [](RunConfig& c, const std::string& v) {
                  c.sweep.scales.clear();
                  for (const auto& item : split_list(v)) c.sweep.scales.push_back(parse_number<double>(item));
              }},
        CCFG_NUM(sweep, forbidden, "forbidden", int),
        CCFG_NUM(sweep, mahal_threshold, "mahal_threshold", double),
        CCFG_NUM(sweep, n_proj, "n_proj", int),

        CCFG_NUM(curves, tau, "tau", double),
        CCFG_NUM(curves, omega, "omega", double),
        CCFG_NUM(curves, grid_min, "grid_min", double),
        CCFG_NUM(curves, grid_max, "grid_max", double),
        CCFG_NUM(curves, grid_step, "grid_step", double),
        CCFG_BOOL(curves, svg, "svg"),

        CCFG_NUM(equiv, omega, "omega", double),
        CCFG_NUM(equiv, tau, "tau", double),
        CCFG_STR(equiv, mode, "mode"),
        CCFG_NUM(equiv, seeds, "seeds", int),
        CCFG_NUM(equiv, n, "n", long long),
        CCFG_NUM(equiv, tolerance, "tolerance", double),
        CCFG_BOOL(equiv, wrong_rho, "wrong_rho"),

        Field{"output", "dir", [](const RunConfig& c) { return c.output; },
              [](RunConfig& c, const std::string& v) { c.output = v; }},
    };
    return table;
}

#undef CCFG_NUM
#undef CCFG_STR
#undef CCFG_BOOL

void set_field(RunConfig& config, const std::string& section, const std::string& key, const std::string& value)
{
    bool known_section = false;
    for (const auto& f : fields()) {
        if (section != f.section) continue;
        known_section = true;
        if (key != f.key) continue;
        try {
            f.set(config, value);
        } catch (const std::exception& e) {
            throw ConfigError(section + "." + key + ": " + e.what());
        }
        return;
    }
    if (!known_section) throw ConfigError("unknown section [" + section + "]");
    throw ConfigError("unknown key '" + key + "' in section [" + section + "]");
}

template <typename F>
void check(const char* key, F&& f)
{
    try {
        f();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string(key) + ": " + e.what());
    }
}

void require(bool ok, const std::string& message)
{
    if (!ok) throw std::invalid_argument(message);
}

}  // namespace

void RunConfig::validate() const
{
    constexpr int num_classes = 2;
    check("data.n", [&] { require(data.n >= 1, "must be >= 1"); });
    check("schedule", [&] { (void)build_schedule(*this); });
    check("train", [&] { build_train_config(*this).validate(); });
    check("sample", [&] {
        require(sample.cond >= 0 && sample.cond < num_classes, "cond must be 0 (blue) or 1 (red)");
        require(sample.cond2 >= 0 && sample.cond2 < num_classes, "cond2 must be 0 (blue) or 1 (red)");
        require(sample.nfe >= 1 && sample.nfe <= schedule.steps, "nfe must be in [1, steps]");
        require(sample.n >= 1, "n must be >= 1");
        require(std::isfinite(sample.scale) && sample.scale >= 0.0, "scale must be finite and >= 0");
        const GuidanceSpec spec = build_guidance(*this);
        ccfg::validate(spec);
        if (parse_variant(sample.variant) == Variant::PosteriorMean) {
            require(std::holds_alternative<Cfg>(spec) || std::holds_alternative<NCfg>(spec) ||
                        std::holds_alternative<CcfgPos>(spec) || std::holds_alternative<CcfgNeg>(spec),
                    "posterior variant supports cfg, ncfg, ccfg-pos, ccfg-neg");
        }
    });
    check("sweep", [&] {
        require(!sweep.methods.empty(), "methods must not be empty");
        require(!sweep.scales.empty(), "scales must not be empty");
        for (double s : sweep.scales) require(std::isfinite(s) && s >= 0.0, "scales must be finite and >= 0");
        for (const auto& m : sweep.methods) {
            require(m != "posneg", "posneg is not a sweep method");
            ccfg::validate(make_spec(m, sweep.scales.front(), sample.tau));
        }
        require(sweep.forbidden >= 0 && sweep.forbidden < num_classes, "forbidden must be 0 or 1");
        require(sweep.mahal_threshold > 0.0, "mahal_threshold must be positive");
        require(sweep.n_proj >= 1, "n_proj must be >= 1");
    });
    check("curves", [&] {
        require(curves.tau > 0.0 && std::isfinite(curves.tau), "tau must be finite and positive");
        require(curves.omega >= 0.0 && std::isfinite(curves.omega), "omega must be finite and >= 0");
        require(curves.grid_min >= 0.0 && curves.grid_max >= curves.grid_min, "need 0 <= grid_min <= grid_max");
        require(curves.grid_step > 0.0, "grid_step must be positive");
    });
    check("equiv", [&] {
        require(equiv.omega >= 0.0 && std::isfinite(equiv.omega), "omega must be finite and >= 0");
        require(equiv.tau > 0.0, "tau must be positive");
        require(equiv.mode == "pos" || equiv.mode == "neg" || equiv.mode == "both", "mode must be pos, neg or both");
        require(equiv.seeds >= 1, "seeds must be >= 1");
        require(equiv.n >= 1, "n must be >= 1");
        require(equiv.tolerance > 0.0, "tolerance must be positive");
    });
    check("output.dir", [&] { require(!output.empty(), "must not be empty"); });
}

RunConfig parse_config(std::istream& in)
{
    RunConfig config;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = fmt::format("config line {}: ", lineno);
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
        if (section.empty()) throw ConfigError(where + "key outside of any section");
        try {
            set_field(config, section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError(where + e.what());
        }
    }
    return config;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_config(in);
}

std::string serialize_config(const RunConfig& config)
{
    std::string out;
    std::string section;
    for (const auto& f : fields()) {
        if (section != f.section) {
            section = f.section;
            out += (out.empty() ? "[" : "\n[") + section + "]\n";
        }
        out += fmt::format("{} = {}\n", f.key, f.get(config));
    }
    return out;
}

void apply_override(RunConfig& config, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    const auto dot = assignment.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
        throw ConfigError("override must look like section.key=value, got '" + assignment + "'");
    }
    set_field(config, trim(assignment.substr(0, dot)), trim(assignment.substr(dot + 1, eq - dot - 1)),
              trim(assignment.substr(eq + 1)));
}

Schedule build_schedule(const RunConfig& config)
{
    return make_schedule(config.schedule.steps, config.schedule.beta_min, config.schedule.beta_max);
}

TrainConfig build_train_config(const RunConfig& config)
{
    TrainConfig tc;
    tc.epochs = config.train.epochs;
    tc.batch_size = config.train.batch_size;
    tc.learning_rate = config.train.learning_rate;
    tc.learning_rate_final = config.train.learning_rate_final;
    tc.drop_prob = config.train.drop_prob;
    tc.hidden = config.train.hidden;
    tc.activation = parse_activation(config.train.activation);
    tc.embed_dim = config.train.embed_dim;
    tc.time_features = config.train.time_features;
    tc.seed = config.train.seed;
    return tc;
}

GuidanceSpec build_guidance(const RunConfig& config)
{
    Dng dng;
    dng.prior = config.sample.dng_prior;
    dng.tau_prime = config.sample.dng_tau_prime;
    dng.delta = config.sample.dng_delta;
    dng.clamp = config.sample.dng_clamp;
    return make_spec(config.sample.method, config.sample.scale, config.sample.tau, dng);
}

SampleRun build_sample_run(const RunConfig& config)
{
    SampleRun run;
    run.seed = config.sample.seed;
    run.nfe = config.sample.nfe;
    run.spec = build_guidance(config);
    run.variant = parse_variant(config.sample.variant);
    if (!std::holds_alternative<NoGuidance>(run.spec)) run.cond = Condition::of_class(config.sample.cond);
    if (needs_second_condition(run.spec)) run.cond2 = Condition::of_class(config.sample.cond2);
    return run;
}

}  // namespace ccfg
