#pragma once

#include <cstdint>
#include <string>

#include "unleak/dataset.hpp"

namespace unleak {

/// Deterministic census-style table generator. Produces the same column
/// layout as the UCI Adult extract: demographic and work features, a binary
/// `income` column and a 12-way `occupation` column, both learnable from the
/// features but noisy enough that simple models stay well-generalized. Used
/// by the test suites and the `synth` CLI subcommand when no real extract is
/// at hand.
RawTable synth_census(std::size_t rows, std::uint64_t seed);

/// Writes a RawTable as comma-separated text with a header row.
void write_csv(const RawTable& table, const std::string& path);

}  // namespace unleak
