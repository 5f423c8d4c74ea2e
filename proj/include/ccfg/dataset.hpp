#pragma once

#include <vector>

#include <Eigen/Dense>

namespace ccfg {

/// Points stored column-wise (dim x n) with an integer class label per column.
/// `nodes` records the generating mixture component when known.
struct LabeledPoints {
    Eigen::MatrixXd points;
    std::vector<int> labels;
    std::vector<int> nodes;
    int num_classes = 0;

    Eigen::Index size() const { return points.cols(); }
    Eigen::Index dim() const { return points.rows(); }
};

}  // namespace ccfg
