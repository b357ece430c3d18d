#pragma once

#include "unusual/model.hpp"

#include <limits>
#include <map>
#include <span>

namespace unusual {

/// Thrown by partition() for a context kind that does not apply to the
/// observations' artifact kind and metric.
class InapplicableCombination : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct DetectorConfig {
    /// Fence multiplier: values outside [q1 - k*iqr, q3 + k*iqr] are flagged.
    double k = 3.0;
    std::size_t min_group_size = 10;
    /// Empty means every catalog type.
    std::vector<EventTypeId> enabled_event_types;
    bool useful_only = false;
    /// Worker threads used to evaluate event types; 1 runs inline.
    std::size_t threads = 1;

    void validate() const;
};

using ContextGroups = std::map<ContextKey, std::vector<Observation>>;

/// Splits observations of one metric into context groups. For
/// days_between_commits under any context other than project and filetype
/// the gaps are recomputed along each group's own commit ordering, so the
/// incoming values are only used to identify the metric.
ContextGroups partition(std::span<const Observation> observations, const RepoSnapshot &snapshot,
                        ContextKind context);

/// Quartiles by linear interpolation at rank p*(n-1), plus fences at
/// q1 - k*iqr and q3 + k*iqr. Throws std::invalid_argument on empty input.
DistributionSummary summarize(std::span<const double> values, double k);

/// Linear-interpolation quantile of sorted data.
double quantile_sorted(std::span<const double> sorted, double p);

/// Observations strictly outside the summary's fences.
std::vector<UnusualEvent> detect_group(std::span<const Observation> group, const DistributionSummary &summary,
                                       const EventTypeId &type, const ContextKey &context);

std::vector<UnusualEvent> detect_all(const RepoSnapshot &snapshot, const DetectorConfig &config = {});

/// Deterministic output order: artifact kind, artifact id, event type,
/// context, path.
void sort_events(std::vector<UnusualEvent> &events);
bool event_less(const UnusualEvent &lhs, const UnusualEvent &rhs);

}  // namespace unusual
