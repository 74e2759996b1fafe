#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "stepsize/harness.hpp"
#include "stepsize/landscape.hpp"

namespace stepsize {

// Shortest decimal form that parses back to the same bits; infinities as
// "inf"/"-inf", NaN as "nan".
std::string format_double(double v);

// Strict parser for format_double output (whole field must be consumed);
// throws DataError otherwise.
double parse_double(std::string_view field);

std::uint64_t parse_uint(std::string_view field);

// summary schema: algorithm,<param columns...>,seed,steps,mean_loss,
// tail_mean_loss,diverged. Param columns are the union of hyperparameter
// names over all rows in first-seen order; cells a row does not use are
// empty.
void write_summary_csv(const std::filesystem::path& path, const SweepTable& table);
SweepTable read_summary_csv(const std::filesystem::path& path);

// trace schema: step,loss[,alpha_0..alpha_{d-1}][,sigma,alpha_star], one row
// per recorded sample. Reading restores only the sampled columns; summary
// fields of the returned record are zero.
void write_trace_csv(const std::filesystem::path& path, const RunRecord& record);
RunRecord read_trace_csv(const std::filesystem::path& path);

// landscape schema: axis-labeled matrix. The header row carries the alpha1
// axis after the corner label, each data row starts with its alpha2 value.
void write_landscape_csv(const std::filesystem::path& path, const LandscapeGrid& grid);
LandscapeGrid read_landscape_csv(const std::filesystem::path& path);

}  // namespace stepsize
