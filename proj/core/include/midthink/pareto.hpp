#pragma once

#include <span>
#include <string>
#include <vector>

#include "midthink/grading_metrics.hpp"

namespace midthink {

/// One (average length, accuracy) operating point.
struct ParetoPoint {
    std::string label;
    double avg_len = 0.0;
    double accuracy = 0.0;

    bool operator==(const ParetoPoint&) const = default;
};

/// p dominates q iff p is no longer and no less accurate, and strictly
/// better in at least one of the two.
bool dominates(const ParetoPoint& p, const ParetoPoint& q);

/// Points not dominated by any other, sorted by avg_len ascending (ties by
/// accuracy descending, then input order). Identical points are all kept.
/// O(n log n).
std::vector<ParetoPoint> pareto_frontier(std::span<const ParetoPoint> points);

struct BudgetCurvePoint {
    double budget = 0.0;
    EvalSummary summary;
};

/// Budget sweep results; budgets strictly increasing.
class BudgetCurve {
public:
    BudgetCurve() = default;
    /// Throws InputError if budgets are not strictly increasing or leave [0, 1].
    explicit BudgetCurve(std::vector<BudgetCurvePoint> points);

    const std::vector<BudgetCurvePoint>& points() const noexcept { return points_; }
    std::size_t size() const noexcept { return points_.size(); }
    bool empty() const noexcept { return points_.empty(); }

    std::vector<ParetoPoint> as_pareto_points() const;

private:
    std::vector<BudgetCurvePoint> points_;
};

/// Convenience for fixtures: builds a curve from (budget, avg_len, accuracy).
struct CurveSample {
    double budget;
    double avg_len;
    double accuracy;
};
BudgetCurve make_curve(std::span<const CurveSample> samples);

enum class FrontierPosition { beyond, on, below };

std::string_view to_string(FrontierPosition pos);

struct Classification {
    FrontierPosition position = FrontierPosition::on;
    /// Curve accuracy interpolated at the point's length.
    double interpolated_accuracy = 0.0;
    /// Budget of the curve point whose accuracy is closest to the point's.
    double nearest_budget = 0.0;
    /// The point's length lies outside the curve's length range.
    bool extrapolated = false;
};

inline constexpr double kDefaultClassifyEpsilon = 0.5;

/// Places `p` against a budget curve: linear interpolation of accuracy in
/// avg_len, then beyond/below when the gap exceeds `epsilon` accuracy
/// points. Outside the curve's length range the nearest endpoint is used.
/// Throws InputError when the curve has fewer than two points.
Classification classify_point(const ParetoPoint& p, const BudgetCurve& curve,
                              double epsilon = kDefaultClassifyEpsilon);

}  // namespace midthink
