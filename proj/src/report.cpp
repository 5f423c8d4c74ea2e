#include "ccfg/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

namespace ccfg {

namespace {

std::string num(double v) { return fmt::format("{}", v); }

struct Box {
    double x0, x1, y0, y1;
};

constexpr double kWidth = 480.0;
constexpr double kHeight = 480.0;
constexpr double kMargin = 40.0;

double px(const Box& b, double x) { return kMargin + (x - b.x0) / (b.x1 - b.x0) * (kWidth - 2 * kMargin); }
double py(const Box& b, double y) { return kHeight - kMargin - (y - b.y0) / (b.y1 - b.y0) * (kHeight - 2 * kMargin); }

void svg_open(std::ostream& out, const std::string& title)
{
    out << fmt::format(R"(<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">)", kWidth,
                       kHeight, kWidth, kHeight)
        << "\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << fmt::format(R"(<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>)",
                       kWidth / 2, title)
        << "\n";
}

void svg_frame(std::ostream& out, const Box& b)
{
    out << fmt::format(R"(<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#888"/>)", kMargin, kMargin,
                       kWidth - 2 * kMargin, kHeight - 2 * kMargin)
        << "\n";
    const auto label = [&](double x, double y, const std::string& text, const char* anchor) {
        out << fmt::format(R"(<text x="{:.1f}" y="{:.1f}" font-family="sans-serif" font-size="10" text-anchor="{}">{}</text>)",
                           x, y, anchor, text)
            << "\n";
    };
    label(kMargin, kHeight - kMargin + 14, fmt::format("{:.3g}", b.x0), "start");
    label(kWidth - kMargin, kHeight - kMargin + 14, fmt::format("{:.3g}", b.x1), "end");
    label(kMargin - 4, kHeight - kMargin, fmt::format("{:.3g}", b.y0), "end");
    label(kMargin - 4, kMargin + 8, fmt::format("{:.3g}", b.y1), "end");
}

}  // namespace

void write_report_csv(std::ostream& out, const std::vector<RunReport>& rows)
{
    out << kReportHeader << '\n';
    for (const auto& r : rows) {
        if (r.node_occupancy.size() != 3) throw std::invalid_argument("report csv: expected three node occupancies");
        out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", num(r.scale), r.method, num(r.error_rate),
                           num(r.off_support), num(r.sliced_w), num(r.node_occupancy[0]), num(r.node_occupancy[1]),
                           num(r.node_occupancy[2]), num(r.mean_loglik), r.n, r.seed, r.nfe);
    }
}

void write_curves_csv(std::ostream& out, const std::vector<CurveRow>& rows)
{
    out << kCurvesHeader << '\n';
    for (const auto& r : rows) {
        out << fmt::format("{},{},{},{},{},{},{}\n", num(r.dist_sq), num(r.coef_pos), num(r.coef_neg), num(r.loss_pos),
                           num(r.loss_neg), num(r.cfg), num(r.ncfg));
    }
}

void write_samples_csv(std::ostream& out, const Eigen::Ref<const Eigen::MatrixXd>& points, std::uint64_t seed)
{
    const Eigen::Index dim = points.rows();
    if (dim == 2) {
        out << "x,y";
    } else {
        for (Eigen::Index k = 0; k < dim; ++k) out << (k ? ",x" : "x") << k;
    }
    out << ",chain,seed\n";
    std::string line;
    for (Eigen::Index j = 0; j < points.cols(); ++j) {
        line.clear();
        for (Eigen::Index k = 0; k < dim; ++k) line += num(points(k, j)) + ',';
        line += fmt::format("{},{}\n", j, seed);
        out << line;
    }
}

void write_loss_csv(std::ostream& out, const std::vector<double>& epoch_loss)
{
    out << "epoch,loss\n";
    for (std::size_t e = 0; e < epoch_loss.size(); ++e) out << fmt::format("{},{}\n", e + 1, num(epoch_loss[e]));
}

void write_scatter_svg(std::ostream& out, const MixtureSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& points,
                       int colored_class, const std::string& title)
{
    if (points.rows() != 2 || spec.dim() != 2) throw std::invalid_argument("scatter svg: only 2-D data is supported");
    Box b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    const auto grow = [&](double x, double y) {
        if (!std::isfinite(x) || !std::isfinite(y)) return;
        b.x0 = std::min(b.x0, x);
        b.x1 = std::max(b.x1, x);
        b.y0 = std::min(b.y0, y);
        b.y1 = std::max(b.y1, y);
    };
    for (int k = 0; k < spec.num_nodes(); ++k) {
        grow(spec.centers(0, k) - 4 * spec.scales[k], spec.centers(1, k) - 4 * spec.scales[k]);
        grow(spec.centers(0, k) + 4 * spec.scales[k], spec.centers(1, k) + 4 * spec.scales[k]);
    }
    for (Eigen::Index j = 0; j < points.cols(); ++j) grow(points(0, j), points(1, j));
    // Square aspect so node shapes are not distorted.
    const double half = 0.5 * std::max(b.x1 - b.x0, b.y1 - b.y0);
    const double cx = 0.5 * (b.x0 + b.x1), cy = 0.5 * (b.y0 + b.y1);
    b = {cx - half, cx + half, cy - half, cy + half};

    svg_open(out, title);
    svg_frame(out, b);
    for (Eigen::Index j = 0; j < points.cols(); ++j) {
        const double x = points(0, j), y = points(1, j);
        if (!std::isfinite(x) || !std::isfinite(y)) continue;
        const double p = oracle_class_posterior(spec, points.col(j), colored_class);
        const int red = static_cast<int>(std::lround(40 + 200 * p));
        const int blue = static_cast<int>(std::lround(40 + 200 * (1 - p)));
        out << fmt::format(R"svg(<circle cx="{:.2f}" cy="{:.2f}" r="1.6" fill="rgb({},60,{})" fill-opacity="0.6"/>)svg",
                           px(b, x), py(b, y), red, blue)
            << "\n";
    }
    for (int k = 0; k < spec.num_nodes(); ++k) {
        out << fmt::format(R"(<circle cx="{:.2f}" cy="{:.2f}" r="{:.2f}" fill="none" stroke="black" stroke-dasharray="3,3"/>)",
                           px(b, spec.centers(0, k)), py(b, spec.centers(1, k)),
                           4 * spec.scales[k] / (b.x1 - b.x0) * (kWidth - 2 * kMargin))
            << "\n";
    }
    out << "</svg>\n";
}

void write_curves_svg(std::ostream& out, const std::vector<CurveRow>& rows, const std::string& title)
{
    if (rows.empty()) throw std::invalid_argument("curves svg: no rows");
    const Box b{rows.front().dist_sq, std::max(rows.back().dist_sq, rows.front().dist_sq + 1e-12), -1.1, 2.1};
    svg_open(out, title);
    svg_frame(out, b);
    const auto polyline = [&](auto value, const char* color) {
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& r : rows) out << fmt::format("{:.2f},{:.2f} ", px(b, r.dist_sq), py(b, value(r)));
        out << "\"/>\n";
    };
    out << fmt::format(R"(<line x1="{}" x2="{}" y1="{:.2f}" y2="{:.2f}" stroke="#ccc"/>)", kMargin, kWidth - kMargin,
                       py(b, 0.0), py(b, 0.0))
        << "\n";
    polyline([](const CurveRow& r) { return r.coef_pos; }, "#c0392b");
    polyline([](const CurveRow& r) { return r.coef_neg; }, "#2c3e9b");
    out << "</svg>\n";
}

void write_text_file(const std::string& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace ccfg
