#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace socm {

/// Identifier recorded in every report that depends on random draws.
inline constexpr const char* kRngAlgorithm =
    "mt19937_64 seeded by std::seed_seq{seed_lo, seed_hi, stream_lo, stream_hi}; "
    "std::normal_distribution; std::sample";

/// Engine for substream `stream` of `seed`. Trial t of a run always uses
/// stream t, whichever thread executes it.
[[nodiscard]] std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream);

/// rows x cols matrix of i.i.d. standard normals, filled column by column.
[[nodiscard]] Eigen::MatrixXd standard_normal(std::mt19937_64& rng, Eigen::Index rows,
                                              Eigen::Index cols);

}  // namespace socm
