#pragma once

#include "unusual/model.hpp"

#include <iosfwd>
#include <map>

namespace unusual {

// ---------------------------------------------------------------------------
// Frequency and coverage

struct FrequencyRow {
    EventTypeId type;
    /// Distinct artifacts with at least one event of this type.
    std::size_t count = 0;
    /// count / total artifacts of the type's kind, in [0, 1].
    double fraction = 0.0;
    /// 100 * fraction.
    double percentage = 0.0;
    /// Integer-rounded percentage for display.
    long percent_display = 0;
};

struct FrequencyReport {
    /// One row per catalog event type, in catalog order.
    std::vector<FrequencyRow> rows;
    std::map<ArtifactKind, std::size_t> totals;

    const FrequencyRow &row(const EventTypeId &type) const;
};

FrequencyReport frequency_report(const std::vector<UnusualEvent> &events, const RepoSnapshot &snapshot);

struct KindCoverage {
    std::size_t unusual = 0;
    std::size_t total = 0;
    double fraction = 0.0;
    /// Most distinct (event type, context) pairs on one artifact.
    std::size_t max_types_per_artifact = 0;
};

struct CoverageStats {
    std::map<ArtifactKind, KindCoverage> per_kind;
    std::size_t max_types_per_artifact = 0;
};

CoverageStats coverage_stats(const std::vector<UnusualEvent> &events, const RepoSnapshot &snapshot);

// ---------------------------------------------------------------------------
// Odds ratios

/// 2x2 odds ratio with a 95% Woolf (log-normal) interval. A zero cell
/// adds 0.5 to every cell and marks the result corrected.
OddsRatioResult odds_ratio(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d);

enum class PerceptionOutcome { difficult, atypical };
std::string_view outcome_name(PerceptionOutcome outcome);

struct PerceptionRow {
    PerceptionOutcome outcome = PerceptionOutcome::difficult;
    /// "all", "owned", "not_owned", "commit", "issue", "pull", or an event
    /// type id for the per-type rows.
    std::string stratum;
    std::optional<EventTypeId> event_type;
    OddsRatioResult result;
    /// The stratum had no ratings at all.
    bool empty_stratum = false;
};

/// Odds of being rated difficult / atypical for unusual versus regular
/// artifacts, overall, by ownership, by artifact kind, and per
/// project-context event type (compared within the same artifact kind).
std::vector<PerceptionRow> perception_analysis(const std::vector<Rating> &ratings);

// ---------------------------------------------------------------------------
// Usefulness

struct VoteCount {
    std::int64_t positive = 0;
    std::int64_t negative = 0;
    bool operator==(const VoteCount &) const = default;
};

struct RankedType {
    EventTypeId type;
    VoteCount votes;
    double share = 0.0;
};

/// Types rated useful at least half the time with at least `min_votes`
/// votes, best share first; ties by total votes, then catalog order.
std::vector<RankedType> usefulness_ranking(const std::map<EventTypeId, VoteCount> &votes, std::int64_t min_votes = 6);

std::map<EventTypeId, VoteCount> votes_from_ratings(const std::vector<Rating> &ratings);

// ---------------------------------------------------------------------------
// Survey sampling

struct SurveyCell {
    bool own = false;
    bool unusual = false;
    ArtifactKind kind = ArtifactKind::commit;
};

struct SurveyItem {
    SurveyCell cell;
    ArtifactRef artifact;
    /// One representative event per presented type (at most five types).
    std::vector<UnusualEvent> presented;
};

struct SurveySample {
    std::string participant_id;
    std::vector<SurveyItem> items;
};

class UnknownParticipant : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline constexpr std::size_t kMaxPresentedTypes = 5;

SurveySample sample_survey_artifacts(const RepoSnapshot &snapshot, const std::vector<UnusualEvent> &events,
                                     const std::string &participant_id, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Ratings file (one JSON object per line)

std::vector<Rating> read_ratings(std::istream &in);
void write_rating(const Rating &rating, std::ostream &out);

}  // namespace unusual
