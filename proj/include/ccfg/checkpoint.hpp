#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ccfg/model.hpp"
#include "ccfg/schedule.hpp"

namespace ccfg {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary layout, all integers and floats little-endian:
///
///   "CCFG" u32 version
///   4 sections, each: 4-byte tag, u64 payload length, payload
///     SCHD  i64 T, f64 beta_min, f64 beta_max
///     DIMS  u32 data_dim, num_classes, time_features, embed_dim, activation,
///           layer count L, then L+1 layer widths
///     EMBD  null embedding, then class offsets (embed_dim x classes, row-major)
///     WGTS  per layer: weights (row-major), then biases
///   u64 FNV-1a of every preceding byte
struct Checkpoint {
    EpsModel model;
    int steps = 0;
    double beta_min = 0.0;
    double beta_max = 0.0;

    Schedule schedule() const { return make_schedule(steps, beta_min, beta_max); }
};

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::vector<std::uint8_t> encode_checkpoint(const EpsModel& model, const Schedule& schedule);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::string& path, const EpsModel& model, const Schedule& schedule);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace ccfg
