#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ccfg/data.hpp"
#include "ccfg/guidance.hpp"
#include "ccfg/metrics.hpp"

namespace ccfg {

inline constexpr const char* kReportHeader =
    "scale,method,error_rate,off_support,sliced_w,occ1,occ2,occ3,mean_loglik,n,seed,nfe";
inline constexpr const char* kCurvesHeader = "dist_sq,coef_pos,coef_neg,loss_pos,loss_neg,cfg,ncfg";

// Numbers use the shortest representation that reads back to the same double.

void write_report_csv(std::ostream& out, const std::vector<RunReport>& rows);
void write_curves_csv(std::ostream& out, const std::vector<CurveRow>& rows);

/// One row per chain: coordinates (x,y for 2-D, x0..x{d-1} otherwise), chain, seed.
void write_samples_csv(std::ostream& out, const Eigen::Ref<const Eigen::MatrixXd>& points, std::uint64_t seed);

void write_loss_csv(std::ostream& out, const std::vector<double>& epoch_loss);

/// Scatter of 2-D samples colored by the oracle posterior of `colored_class`,
/// with the mixture node centers marked.
void write_scatter_svg(std::ostream& out, const MixtureSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& points,
                       int colored_class, const std::string& title);

/// coef_pos and coef_neg against dist_sq.
void write_curves_svg(std::ostream& out, const std::vector<CurveRow>& rows, const std::string& title);

/// Writes `content` to `path`, replacing any previous file.
void write_text_file(const std::string& path, const std::string& content);

}  // namespace ccfg
