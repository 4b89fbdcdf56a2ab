#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "midthink/grading_metrics.hpp"
#include "midthink/pareto.hpp"

namespace midthink {

/// A published measurement, kept for comparison against live runs.
/// Settings use the harness's labels: built-in mode names, "budget=<b>",
/// "fixed_<k>k" and "prompt".
struct ReferencePoint {
    std::string source;  // e.g. "table2"
    std::string model;
    std::string dataset;
    std::string setting;
    std::optional<double> budget;
    std::optional<double> avg_len;
    std::optional<double> wait;
    double accuracy = 0.0;
};

const std::vector<ReferencePoint>& reference_points();

std::optional<ReferencePoint> find_reference(std::string_view model, std::string_view dataset,
                                             std::string_view setting);

/// The "standard" budget rows for one model/dataset as a curve. Prefers the
/// full-sweep tables; throws DataError if none exist.
BudgetCurve reference_curve(std::string_view model, std::string_view dataset);

struct ReferenceComparison {
    ReferencePoint reference;
    double accuracy_delta = 0.0;  // live - reference
    std::optional<double> wait_delta;
    std::optional<double> avg_len_delta;
    bool within_tolerance = false;
};

/// Accuracy is the gated quantity; wait and length deltas are informative.
ReferenceComparison compare_to_reference(const EvalSummary& live, const ReferencePoint& ref,
                                         double accuracy_tolerance = 2.0);

}  // namespace midthink
