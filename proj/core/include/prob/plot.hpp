#pragma once

#include <span>
#include <string>

#include "prob/metrics.hpp"

namespace prob {

/// Temperature sweep: one panel per metric (U-Recall, known mAP, A-OSE, WI),
/// tau on the x-axis. Null metric values are left out of their series.
/// Throws DomainError on an empty report list.
std::string sweep_svg(std::span<const EvalReport> reports);

/// Per-task metric trajectory (previous/current/both mAP, U-Recall) with the
/// task index on the x-axis. Null metrics are omitted.
std::string tasks_svg(std::span<const EvalReport> reports);

/// Per-class precision/recall curves of one report, one panel per class.
std::string pr_svg(const EvalReport& report);

}  // namespace prob
