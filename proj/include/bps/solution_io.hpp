#pragma once

#include "bps/solution.hpp"
#include "bps/vnv.hpp"

#include <string>

namespace bps {

inline constexpr int kSolutionSchema = 1;

/// Solution JSON, schema 1. Matrices are arrays of node rows. Non-finite
/// numbers are written as null.
std::string solution_to_json(const TrajectorySolution& s, int indent = 1);

/// Reads schema-1 JSON. Required: schema, t, X, U. Optional entries fall back
/// to: xa, xb from the first and last rows of X; ta, tf from t; duals absent
/// (has_duals = false) unless lambda is present. Throws Parse on malformed input.
TrajectorySolution solution_from_json(const std::string& text);

std::string report_to_json(const VnvReport& report, int indent = 1);

/// Columns t, x0..x{nx-1}, u0..u{nu-1} over the propagation samples, floats at
/// 17 significant digits.
std::string propagation_csv(const PropagationResult& prop, const ControlSignal& control);

/// printf %.17g, which round-trips every double.
std::string format_double(double v);

}  // namespace bps
