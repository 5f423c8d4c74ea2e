#include "ccfg/guidance.hpp"

#include <type_traits>

namespace ccfg {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require(bool ok, const std::string& what)
{
    if (!ok) throw std::invalid_argument(what);
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

}  // namespace

void validate(const GuidanceSpec& spec)
{
    std::visit(overloaded{
                   [](const NoGuidance&) {},
                   [](const Cfg& s) { require(s.gamma >= 0.0 && std::isfinite(s.gamma), "cfg: gamma must be >= 0"); },
                   [](const CfgPP& s) { require(s.lambda >= 0.0 && s.lambda <= 1.0, "cfgpp: lambda must be in [0, 1]"); },
                   [](const NCfg& s) { require(s.gamma >= 0.0 && std::isfinite(s.gamma), "ncfg: gamma must be >= 0"); },
                   [](const PosNeg& s) { require(s.gamma >= 0.0 && std::isfinite(s.gamma), "posneg: gamma must be >= 0"); },
                   [](const Dng& s) {
                       require(s.omega >= 0.0 && std::isfinite(s.omega), "dng: omega must be >= 0");
                       require(s.clamp > 0.0 && s.clamp < 0.5, "dng: clamp must be in (0, 0.5)");
                       require(s.prior > s.clamp && s.prior < 1.0 - s.clamp, "dng: prior must be inside (clamp, 1 - clamp)");
                       require(s.tau_prime >= 0.0 && std::isfinite(s.tau_prime), "dng: tau' must be >= 0");
                       require(std::isfinite(s.delta), "dng: delta must be finite");
                   },
                   [](const CcfgPos& s) {
                       require(s.omega >= 0.0 && std::isfinite(s.omega), "ccfg-pos: omega must be >= 0");
                       require(s.tau > 0.0 && std::isfinite(s.tau), "ccfg-pos: tau must be > 0");
                   },
                   [](const CcfgNeg& s) {
                       require(s.omega >= 0.0 && std::isfinite(s.omega), "ccfg-neg: omega must be >= 0");
                       require(s.tau > 0.0 && std::isfinite(s.tau), "ccfg-neg: tau must be > 0");
                   },
               },
               spec);
}

std::string method_name(const GuidanceSpec& spec)
{
    return std::visit(overloaded{
                          [](const NoGuidance&) { return std::string("none"); },
                          [](const Cfg&) { return std::string("cfg"); },
                          [](const CfgPP&) { return std::string("cfgpp"); },
                          [](const NCfg&) { return std::string("ncfg"); },
                          [](const PosNeg&) { return std::string("posneg"); },
                          [](const Dng&) { return std::string("dng"); },
                          [](const CcfgPos&) { return std::string("ccfg-pos"); },
                          [](const CcfgNeg&) { return std::string("ccfg-neg"); },
                      },
                      spec);
}

GuidanceSpec make_spec(const std::string& method, double scale, double tau, const Dng& dng_defaults)
{
    GuidanceSpec spec;
    if (method == "none") {
        spec = NoGuidance{};
    } else if (method == "cfg") {
        spec = Cfg{scale};
    } else if (method == "cfgpp") {
        spec = CfgPP{scale};
    } else if (method == "ncfg") {
        spec = NCfg{scale};
    } else if (method == "posneg") {
        spec = PosNeg{scale};
    } else if (method == "dng") {
        Dng d = dng_defaults;
        d.omega = scale;
        spec = d;
    } else if (method == "ccfg-pos") {
        spec = CcfgPos{scale, tau};
    } else if (method == "ccfg-neg") {
        spec = CcfgNeg{scale, tau};
    } else {
        throw std::invalid_argument("unknown guidance method '" + method + "'");
    }
    validate(spec);
    return spec;
}

double guidance_scale(const GuidanceSpec& spec)
{
    return std::visit(overloaded{
                          [](const NoGuidance&) { return 0.0; },
                          [](const Cfg& s) { return s.gamma; },
                          [](const CfgPP& s) { return s.lambda; },
                          [](const NCfg& s) { return s.gamma; },
                          [](const PosNeg& s) { return s.gamma; },
                          [](const Dng& s) { return s.omega; },
                          [](const CcfgPos& s) { return s.omega; },
                          [](const CcfgNeg& s) { return s.omega; },
                      },
                      spec);
}

GuidanceSpec with_scale(const GuidanceSpec& spec, double scale)
{
    GuidanceSpec out = spec;
    std::visit(overloaded{
                   [](NoGuidance&) {},
                   [&](Cfg& s) { s.gamma = scale; },
                   [&](CfgPP& s) { s.lambda = scale; },
                   [&](NCfg& s) { s.gamma = scale; },
                   [&](PosNeg& s) { s.gamma = scale; },
                   [&](Dng& s) { s.omega = scale; },
                   [&](CcfgPos& s) { s.omega = scale; },
                   [&](CcfgNeg& s) { s.omega = scale; },
               },
               out);
    return out;
}

bool needs_second_condition(const GuidanceSpec& spec) { return std::holds_alternative<PosNeg>(spec); }

bool is_dng(const GuidanceSpec& spec) { return std::holds_alternative<Dng>(spec); }

DngState make_dng_state(const Dng& spec)
{
    validate(spec);
    return DngState{logit(spec.prior), spec.clamp};
}

double guidance_coefficient(const GuidanceSpec& spec, double dist_sq, const DngState* state)
{
    return std::visit(overloaded{
                          [](const NoGuidance&) { return 0.0; },
                          [](const Cfg& s) { return s.gamma; },
                          [](const CfgPP& s) { return s.lambda; },
                          [](const NCfg& s) { return -s.gamma; },
                          [](const PosNeg&) -> double {
                              throw std::invalid_argument("posneg has no single-condition coefficient");
                          },
                          [&](const Dng& s) {
                              if (!state) throw std::invalid_argument("dng guidance requires a DngState");
                              return -s.omega * state->scale();
                          },
                          [&](const CcfgPos& s) { return s.omega * coef_ccfg_pos(s.tau, dist_sq); },
                          [&](const CcfgNeg& s) { return s.omega * coef_ccfg_neg(s.tau, dist_sq); },
                      },
                      spec);
}

GuidedEps guide(const GuidanceSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& eps_null,
                const Eigen::Ref<const Eigen::VectorXd>& eps_cond, const std::optional<Eigen::VectorXd>& eps_cond2,
                const std::optional<DngState>& state)
{
    if (eps_null.size() != eps_cond.size()) throw std::invalid_argument("guide: point dimension mismatch");
    GuidedEps out;
    if (const auto* pn = std::get_if<PosNeg>(&spec)) {
        if (!eps_cond2) throw std::invalid_argument("posneg guidance requires the negative-condition prediction");
        if (eps_cond2->size() != eps_cond.size()) throw std::invalid_argument("guide: point dimension mismatch");
        out.guided = eps_cond + pn->gamma * (eps_cond - *eps_cond2);
        out.renoise = out.guided;
    } else {
        if (is_dng(spec) && !state) throw std::invalid_argument("dng guidance requires a DngState");
        const Eigen::VectorXd diff = eps_cond - eps_null;
        const double k = guidance_coefficient(spec, diff.squaredNorm(), state ? &*state : nullptr);
        out.guided = eps_null + k * diff;
        out.renoise = std::holds_alternative<CfgPP>(spec) ? Eigen::VectorXd(eps_null) : out.guided;
        if (is_dng(spec)) out.state = state;
    }
    if (!out.guided.allFinite()) throw std::domain_error("guide: non-finite guided noise");
    return out;
}

DngState dng_update(const DngState& state, const Dng& spec, const Eigen::Ref<const Eigen::VectorXd>& x_prev,
                    const Eigen::Ref<const Eigen::VectorXd>& mu_null, const Eigen::Ref<const Eigen::VectorXd>& mu_cond,
                    double sigma_sq)
{
    if (!(sigma_sq > 0.0)) throw std::invalid_argument("dng_update: sigma_sq must be positive");
    if (x_prev.size() != mu_null.size() || x_prev.size() != mu_cond.size()) {
        throw std::invalid_argument("dng_update: point dimension mismatch");
    }
    const double llr = ((x_prev - mu_null).squaredNorm() - (x_prev - mu_cond).squaredNorm()) / (2.0 * sigma_sq);
    const double next = state.log_odds + spec.tau_prime * llr + spec.delta;
    if (!std::isfinite(next)) throw std::domain_error("dng_update: non-finite log-odds");
    const double bound = logit(1.0 - state.clamp);
    DngState out = state;
    out.log_odds = std::clamp(next, -bound, bound);
    return out;
}

std::vector<CurveRow> emit_curves(double tau, double omega, const std::vector<double>& dist_sq_grid)
{
    if (!(tau > 0.0)) throw std::invalid_argument("emit_curves: tau must be positive");
    std::vector<CurveRow> rows;
    rows.reserve(dist_sq_grid.size());
    for (std::size_t i = 0; i < dist_sq_grid.size(); ++i) {
        const double d2 = dist_sq_grid[i];
        if (!(d2 >= 0.0)) throw std::invalid_argument("emit_curves: grid must be non-negative");
        if (i > 0 && d2 < dist_sq_grid[i - 1]) throw std::invalid_argument("emit_curves: grid must be sorted");
        // One-dimensional witnesses with ||eps_null - eps_cond||^2 = d2, evaluated at eps = eps_null.
        const Eigen::VectorXd null_pt = Eigen::VectorXd::Zero(1);
        const Eigen::VectorXd cond_pt = Eigen::VectorXd::Constant(1, std::sqrt(d2));
        rows.push_back(CurveRow{
            d2,
            coef_ccfg_pos(tau, d2),
            coef_ccfg_neg(tau, d2),
            nce_loss_pos(null_pt, null_pt, cond_pt, tau),
            nce_loss_neg(null_pt, null_pt, cond_pt, tau),
            omega,
            -omega,
        });
    }
    return rows;
}

}  // namespace ccfg
