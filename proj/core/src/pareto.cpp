#include "midthink/pareto.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <limits>
#include <numeric>

#include "midthink/error.hpp"

namespace midthink {

bool dominates(const ParetoPoint& p, const ParetoPoint& q) {
    return p.avg_len <= q.avg_len && p.accuracy >= q.accuracy &&
           (p.avg_len < q.avg_len || p.accuracy > q.accuracy);
}

std::vector<ParetoPoint> pareto_frontier(std::span<const ParetoPoint> points) {
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (points[a].avg_len != points[b].avg_len) return points[a].avg_len < points[b].avg_len;
        return points[a].accuracy > points[b].accuracy;
    });

    std::vector<ParetoPoint> out;
    double best_shorter = -std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    while (i < order.size()) {
        // Group of equal length; the first member has the group's best accuracy.
        std::size_t j = i;
        const double len = points[order[i]].avg_len;
        const double group_best = points[order[i]].accuracy;
        while (j < order.size() && points[order[j]].avg_len == len) {
            const auto& p = points[order[j]];
            // Dominated by a shorter point with >= accuracy, or a same-length
            // point with strictly higher accuracy.
            if (!(best_shorter >= p.accuracy) && !(group_best > p.accuracy)) out.push_back(p);
            ++j;
        }
        best_shorter = std::max(best_shorter, group_best);
        i = j;
    }
    return out;
}

BudgetCurve::BudgetCurve(std::vector<BudgetCurvePoint> points) : points_(std::move(points)) {
    for (std::size_t i = 0; i < points_.size(); ++i) {
        const double b = points_[i].budget;
        if (!(b >= 0.0 && b <= 1.0)) throw InputError("budget curve: budget outside [0, 1]");
        if (i > 0 && !(b > points_[i - 1].budget))
            throw InputError("budget curve: budgets must be strictly increasing");
    }
}

std::vector<ParetoPoint> BudgetCurve::as_pareto_points() const {
    std::vector<ParetoPoint> out;
    for (const auto& p : points_) {
        char label[32];
        std::snprintf(label, sizeof label, "budget=%g", p.budget);
        out.push_back({label, p.summary.avg_len, p.summary.accuracy});
    }
    return out;
}

BudgetCurve make_curve(std::span<const CurveSample> samples) {
    std::vector<BudgetCurvePoint> pts;
    for (const auto& s : samples) {
        BudgetCurvePoint p;
        p.budget = s.budget;
        p.summary.avg_len = s.avg_len;
        p.summary.accuracy = s.accuracy;
        pts.push_back(std::move(p));
    }
    return BudgetCurve(std::move(pts));
}

std::string_view to_string(FrontierPosition pos) {
    switch (pos) {
        case FrontierPosition::beyond: return "beyond";
        case FrontierPosition::on: return "on";
        case FrontierPosition::below: return "below";
    }
    return "on";
}

Classification classify_point(const ParetoPoint& p, const BudgetCurve& curve, double epsilon) {
    if (curve.size() < 2) throw InputError("classify_point: curve needs at least two points");

    // Interpolate accuracy as a function of length.
    std::vector<BudgetCurvePoint> by_len = curve.points();
    std::stable_sort(by_len.begin(), by_len.end(), [](const auto& a, const auto& b) {
        return a.summary.avg_len < b.summary.avg_len;
    });

    Classification c;
    const auto& first = by_len.front().summary;
    const auto& last = by_len.back().summary;
    if (p.avg_len < first.avg_len) {
        c.interpolated_accuracy = first.accuracy;
        c.extrapolated = true;
    } else if (p.avg_len > last.avg_len) {
        c.interpolated_accuracy = last.accuracy;
        c.extrapolated = true;
    } else {
        for (std::size_t i = 0; i + 1 < by_len.size(); ++i) {
            const auto& a = by_len[i].summary;
            const auto& b = by_len[i + 1].summary;
            if (p.avg_len < a.avg_len || p.avg_len > b.avg_len) continue;
            const double span = b.avg_len - a.avg_len;
            const double t = span > 0.0 ? (p.avg_len - a.avg_len) / span : 0.0;
            c.interpolated_accuracy = a.accuracy + t * (b.accuracy - a.accuracy);
            break;
        }
    }

    const double gap = p.accuracy - c.interpolated_accuracy;
    c.position = gap > epsilon ? FrontierPosition::beyond
               : gap < -epsilon ? FrontierPosition::below
                                : FrontierPosition::on;

    double best = std::numeric_limits<double>::infinity();
    for (const auto& pt : curve.points()) {
        const double d = std::abs(pt.summary.accuracy - p.accuracy);
        if (d < best) {
            best = d;
            c.nearest_budget = pt.budget;
        }
    }
    return c;
}

}  // namespace midthink
