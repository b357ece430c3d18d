#pragma once

// Shared domain types: repository snapshots, metrics, contexts and
// detection results. Everything here is a plain value type.

#include <chrono>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace unusual {

/// UTC instant with second precision.
using Timestamp = std::chrono::sys_seconds;

inline constexpr double kSecondsPerDay = 86400.0;

/// Fractional days between two instants (later - earlier).
double days_between(Timestamp earlier, Timestamp later);

/// Parses "YYYY-MM-DDTHH:MM:SS" followed by "Z" or a "+HH:MM"/"-HH:MM"
/// offset. Fractional seconds are accepted and truncated.
Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp t);

/// Number of Unicode scalar values in a UTF-8 string.
std::size_t unicode_length(std::string_view utf8);

enum class ArtifactKind { commit, issue, pull };

enum class ChangeKind { added, modified, deleted, renamed };

struct FileChange {
    std::string path;
    ChangeKind change_kind = ChangeKind::modified;
    std::int64_t lines_added = 0;
    std::int64_t lines_deleted = 0;
    std::optional<std::string> previous_path;

    bool operator==(const FileChange &) const = default;
};

struct Commit {
    std::string sha;
    std::vector<std::string> parent_shas;
    std::string author_id;
    std::string committer_id;
    Timestamp committer_timestamp{};
    std::string message;
    std::vector<FileChange> file_changes;
    std::int64_t comment_count = 0;
    std::set<std::int64_t> linked_issue_numbers;
    std::set<std::int64_t> linked_pr_numbers;

    bool is_merge() const { return parent_shas.size() >= 2; }
    bool operator==(const Commit &) const = default;
};

struct Issue {
    std::int64_t number = 0;
    std::string title;
    std::string body;
    std::string creator_id;
    std::set<std::string> assignee_ids;
    std::set<std::string> labels;
    Timestamp created_at{};
    std::optional<Timestamp> closed_at;
    std::int64_t comment_count = 0;
    std::set<std::string> linked_default_branch_commit_shas;

    bool operator==(const Issue &) const = default;
};

struct PullRequest {
    std::int64_t number = 0;
    std::string title;
    std::string body;
    std::string creator_id;
    std::set<std::string> assignee_ids;
    std::set<std::string> labels;
    Timestamp created_at{};
    std::optional<Timestamp> closed_at;
    std::optional<Timestamp> merged_at;
    std::int64_t comment_count = 0;
    std::int64_t review_comment_count = 0;
    std::int64_t changed_files = 0;
    std::int64_t lines_added = 0;
    std::int64_t lines_deleted = 0;
    std::set<std::string> commit_shas;

    bool is_merged() const { return merged_at.has_value(); }
    bool operator==(const PullRequest &) const = default;
};

/// One repository captured at a point in time. Commits are kept in the
/// order the data source delivered them (newest first for GitHub).
struct RepoSnapshot {
    std::string owner;
    std::string name;
    std::string default_branch;
    /// Head of the default branch; empty means "first commit in the list".
    std::string default_branch_head;
    Timestamp fetched_at{};
    std::vector<Commit> commits;
    std::vector<Issue> issues;
    std::vector<PullRequest> pulls;
    /// Parents referenced by commits but absent from the snapshot
    /// (shallow boundary). They terminate reachability walks.
    std::set<std::string> external_parent_shas;

    bool operator==(const RepoSnapshot &) const = default;
};

/// Thrown when a snapshot violates one of its structural invariants.
class InvalidSnapshot : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Checks every RepoSnapshot/Commit/FileChange/Issue/PullRequest invariant.
void validate_snapshot(const RepoSnapshot &snapshot);

/// Fills external_parent_shas with every referenced parent that is not
/// part of the snapshot.
void mark_external_parents(RepoSnapshot &snapshot);

// ---------------------------------------------------------------------------
// Metrics and contexts

enum class Unit { days, lines, characters, count };

enum class MetricKind {
    // commit
    commit_days_between_commits,
    commit_loc_added,
    commit_loc_deleted,
    commit_loc_modified,
    commit_message_length,
    commit_comment_count,
    commit_files_added,
    commit_files_changed,
    commit_files_deleted,
    commit_files_modified,
    commit_files_renamed,
    commit_pull_request_count,
    // issue
    issue_body_length,
    issue_days_open_to_closed,
    issue_comment_count,
    issue_label_count,
    issue_default_branch_commit_count,
    issue_title_length,
    // pull request
    pull_body_length,
    pull_days_open_to_closed,
    pull_days_open_to_merged,
    pull_changed_files,
    pull_review_comment_count,
    pull_comment_count,
    pull_label_count,
    pull_loc_added,
    pull_loc_deleted,
    pull_default_branch_commit_count,
    pull_title_length,
};

const std::vector<MetricKind> &all_metrics();
ArtifactKind artifact_of(MetricKind metric);
Unit unit_of(MetricKind metric);
/// Short machine name without the artifact prefix, e.g. "loc_added".
std::string_view metric_name(MetricKind metric);
/// Human wording used in notifications, e.g. "number of changed files".
std::string_view metric_display_name(MetricKind metric);
std::optional<MetricKind> metric_from_name(ArtifactKind artifact, std::string_view name);

enum class ContextKind {
    project,
    label,
    merge_flag,
    committer,
    committer_and_merge,
    file,
    file_and_merge,
    file_and_committer,
    file_and_label,
    filetype,
    assignee,
    owner,
    merge_status,
};

std::string_view context_name(ContextKind kind);
std::optional<ContextKind> context_from_name(std::string_view name);
std::size_t context_arity(ContextKind kind);
/// Contexts whose groups are formed from per-file observations.
bool is_file_level(ContextKind kind);

std::string_view artifact_name(ArtifactKind kind);
std::string_view artifact_display_name(ArtifactKind kind);
std::string_view artifact_display_plural(ArtifactKind kind);
std::optional<ArtifactKind> artifact_from_name(std::string_view name);

std::string_view change_kind_name(ChangeKind kind);
std::optional<ChangeKind> change_kind_from_name(std::string_view name);

/// A concrete context group: the context kind plus its discriminating values.
class ContextKey {
public:
    ContextKey() = default;
    /// Throws std::invalid_argument if the number of discriminators does not
    /// match the arity of `kind`.
    ContextKey(ContextKind kind, std::vector<std::string> discriminators = {});

    ContextKind kind() const { return kind_; }
    const std::vector<std::string> &discriminators() const { return discriminators_; }
    std::string to_string() const;

    auto operator<=>(const ContextKey &) const = default;
    bool operator==(const ContextKey &) const = default;

private:
    ContextKind kind_ = ContextKind::project;
    std::vector<std::string> discriminators_;
};

/// One (artifact kind, metric, context kind) combination. Only the
/// combinations that make up the event type catalog can be constructed.
class EventTypeId {
public:
    EventTypeId() = default;
    static std::optional<EventTypeId> make(MetricKind metric, ContextKind context);
    /// Parses "commit/loc_added/project".
    static std::optional<EventTypeId> parse(std::string_view text);

    ArtifactKind artifact() const { return artifact_of(metric_); }
    MetricKind metric() const { return metric_; }
    ContextKind context() const { return context_; }
    std::string to_string() const;

    auto operator<=>(const EventTypeId &) const = default;
    bool operator==(const EventTypeId &) const = default;

private:
    EventTypeId(MetricKind metric, ContextKind context) : metric_(metric), context_(context) {}
    MetricKind metric_ = MetricKind::commit_days_between_commits;
    ContextKind context_ = ContextKind::project;
};

bool is_valid_combination(MetricKind metric, ContextKind context);
/// All 151 constructible event types, in catalog order.
const std::vector<EventTypeId> &all_event_types();
/// The six types developers rated useful most often.
const std::vector<EventTypeId> &useful_event_types();

struct ArtifactRef {
    ArtifactKind kind = ArtifactKind::commit;
    /// sha for commits, decimal number for issues and pulls.
    std::string id;
    std::optional<std::string> path;

    bool operator==(const ArtifactRef &) const = default;
};

/// Orders by kind, then id (numerically for issues and pulls), then path.
std::strong_ordering compare_refs(const ArtifactRef &lhs, const ArtifactRef &rhs);

struct RefLess {
    bool operator()(const ArtifactRef &lhs, const ArtifactRef &rhs) const {
        return compare_refs(lhs, rhs) < 0;
    }
};

struct Observation {
    ArtifactRef artifact_ref;
    MetricKind metric = MetricKind::commit_days_between_commits;
    double value = 0.0;

    bool operator==(const Observation &) const = default;
};

struct DistributionSummary {
    std::size_t n = 0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double iqr = 0.0;
    double lower_fence = 0.0;
    double upper_fence = 0.0;

    bool operator==(const DistributionSummary &) const = default;
};

enum class Direction { high, low };
std::string_view direction_name(Direction d);

struct UnusualEvent {
    ArtifactRef artifact_ref;
    EventTypeId event_type;
    ContextKey context;
    double value = 0.0;
    DistributionSummary summary;
    Direction direction = Direction::high;

    /// direction agrees with value and the embedded fences.
    bool is_consistent() const;
    bool operator==(const UnusualEvent &) const = default;
};

struct Rating {
    ArtifactRef artifact_ref;
    bool is_unusual = false;
    std::set<EventTypeId> flagged_types;
    bool perceived_difficult = false;
    bool perceived_typical = true;
    bool owned_by_rater = false;
    std::map<EventTypeId, bool> per_type_useful;

    bool operator==(const Rating &) const = default;
};

struct OddsRatioResult {
    std::int64_t a = 0;
    std::int64_t b = 0;
    std::int64_t c = 0;
    std::int64_t d = 0;
    double odds_ratio = 1.0;
    double ci_low = 1.0;
    double ci_high = 1.0;
    /// Haldane-Anscombe correction applied because a cell was zero.
    bool corrected = false;
};

}  // namespace unusual
