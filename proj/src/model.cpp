#include "unusual/model.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <unordered_set>

#include <fmt/format.h>

namespace unusual {

using namespace std::chrono;

double days_between(Timestamp earlier, Timestamp later) {
    return static_cast<double>((later - earlier).count()) / kSecondsPerDay;
}

namespace {

int parse_int(std::string_view text, std::size_t pos, std::size_t len) {
    if (pos + len > text.size()) {
        throw std::invalid_argument(fmt::format("timestamp too short: '{}'", text));
    }
    int value = 0;
    auto first = text.data() + pos;
    auto [ptr, ec] = std::from_chars(first, first + len, value);
    if (ec != std::errc{} || ptr != first + len) {
        throw std::invalid_argument(fmt::format("malformed timestamp: '{}'", text));
    }
    return value;
}

void expect_char(std::string_view text, std::size_t pos, char c) {
    if (pos >= text.size() || (text[pos] != c && !(c == 'T' && text[pos] == ' '))) {
        throw std::invalid_argument(fmt::format("malformed timestamp: '{}'", text));
    }
}

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
    const int y = parse_int(text, 0, 4);
    expect_char(text, 4, '-');
    const int mo = parse_int(text, 5, 2);
    expect_char(text, 7, '-');
    const int d = parse_int(text, 8, 2);
    expect_char(text, 10, 'T');
    const int h = parse_int(text, 11, 2);
    expect_char(text, 13, ':');
    const int mi = parse_int(text, 14, 2);
    expect_char(text, 16, ':');
    const int s = parse_int(text, 17, 2);

    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || s > 60) {
        throw std::invalid_argument(fmt::format("timestamp out of range: '{}'", text));
    }

    std::size_t pos = 19;
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
    }
    seconds offset{0};
    if (pos == text.size()) {
        // No zone designator; treated as UTC.
    } else if (text[pos] == 'Z' && pos + 1 == text.size()) {
    } else if ((text[pos] == '+' || text[pos] == '-') && pos + 6 == text.size()) {
        const int oh = parse_int(text, pos + 1, 2);
        expect_char(text, pos + 3, ':');
        const int om = parse_int(text, pos + 4, 2);
        offset = hours{oh} + minutes{om};
        if (text[pos] == '-') offset = -offset;
    } else {
        throw std::invalid_argument(fmt::format("malformed timestamp zone: '{}'", text));
    }
    return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s} - offset;
}

std::string format_timestamp(Timestamp t) {
    const auto day_point = floor<days>(t);
    const year_month_day ymd{day_point};
    const hh_mm_ss hms{t - day_point};
    return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}Z", static_cast<int>(ymd.year()),
                       static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                       hms.hours().count(), hms.minutes().count(), hms.seconds().count());
}

std::size_t unicode_length(std::string_view utf8) {
    return static_cast<std::size_t>(std::count_if(utf8.begin(), utf8.end(), [](char c) {
        return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
    }));
}

// ---------------------------------------------------------------------------

void mark_external_parents(RepoSnapshot &snapshot) {
    std::unordered_set<std::string> present;
    for (const auto &c : snapshot.commits) present.insert(c.sha);
    snapshot.external_parent_shas.clear();
    for (const auto &c : snapshot.commits) {
        for (const auto &p : c.parent_shas) {
            if (!present.contains(p)) snapshot.external_parent_shas.insert(p);
        }
    }
}

void validate_snapshot(const RepoSnapshot &snapshot) {
    std::unordered_set<std::string> shas;
    for (const auto &c : snapshot.commits) {
        if (c.sha.empty()) throw InvalidSnapshot("commit with empty sha");
        if (!shas.insert(c.sha).second) {
            throw InvalidSnapshot(fmt::format("duplicate commit sha {}", c.sha));
        }
        if (c.comment_count < 0) {
            throw InvalidSnapshot(fmt::format("commit {} has negative comment_count", c.sha));
        }
        for (const auto &fc : c.file_changes) {
            if (fc.path.empty()) {
                throw InvalidSnapshot(fmt::format("commit {} has a file change with empty path", c.sha));
            }
            if (fc.lines_added < 0 || fc.lines_deleted < 0) {
                throw InvalidSnapshot(fmt::format("commit {} {}: negative line counts", c.sha, fc.path));
            }
            if (fc.change_kind == ChangeKind::renamed && !fc.previous_path) {
                throw InvalidSnapshot(fmt::format("commit {} {}: rename without previous_path", c.sha, fc.path));
            }
            if (fc.change_kind == ChangeKind::added && fc.lines_deleted != 0) {
                throw InvalidSnapshot(fmt::format("commit {} {}: added file with deletions", c.sha, fc.path));
            }
            if (fc.change_kind == ChangeKind::deleted && fc.lines_added != 0) {
                throw InvalidSnapshot(fmt::format("commit {} {}: deleted file with additions", c.sha, fc.path));
            }
        }
    }
    for (const auto &c : snapshot.commits) {
        for (const auto &p : c.parent_shas) {
            if (!shas.contains(p) && !snapshot.external_parent_shas.contains(p)) {
                throw InvalidSnapshot(
                    fmt::format("commit {} references parent {} which is neither present nor external", c.sha, p));
            }
        }
    }

    std::unordered_set<std::int64_t> issue_numbers;
    for (const auto &i : snapshot.issues) {
        if (!issue_numbers.insert(i.number).second) {
            throw InvalidSnapshot(fmt::format("duplicate issue number {}", i.number));
        }
        if (i.comment_count < 0) throw InvalidSnapshot(fmt::format("issue {} has negative comment_count", i.number));
        if (i.closed_at && *i.closed_at < i.created_at) {
            throw InvalidSnapshot(fmt::format("issue {} closed before it was created", i.number));
        }
    }
    std::unordered_set<std::int64_t> pull_numbers;
    for (const auto &p : snapshot.pulls) {
        if (!pull_numbers.insert(p.number).second) {
            throw InvalidSnapshot(fmt::format("duplicate pull request number {}", p.number));
        }
        if (issue_numbers.contains(p.number)) {
            throw InvalidSnapshot(fmt::format("number {} used by both an issue and a pull request", p.number));
        }
        if (p.comment_count < 0 || p.review_comment_count < 0 || p.changed_files < 0 || p.lines_added < 0 ||
            p.lines_deleted < 0) {
            throw InvalidSnapshot(fmt::format("pull request {} has a negative count", p.number));
        }
        if (p.closed_at && *p.closed_at < p.created_at) {
            throw InvalidSnapshot(fmt::format("pull request {} closed before it was created", p.number));
        }
        if (p.merged_at && (!p.closed_at || *p.merged_at < p.created_at)) {
            throw InvalidSnapshot(fmt::format("pull request {} has an inconsistent merge time", p.number));
        }
    }
}

// ---------------------------------------------------------------------------

namespace {

struct MetricInfo {
    MetricKind kind;
    ArtifactKind artifact;
    Unit unit;
    std::string_view name;
    std::string_view display;
};

constexpr std::array kMetrics{
    MetricInfo{MetricKind::commit_days_between_commits, ArtifactKind::commit, Unit::days, "days_between_commits",
               "days between commits"},
    MetricInfo{MetricKind::commit_loc_added, ArtifactKind::commit, Unit::lines, "loc_added", "number of LOC added"},
    MetricInfo{MetricKind::commit_loc_deleted, ArtifactKind::commit, Unit::lines, "loc_deleted",
               "number of LOC deleted"},
    MetricInfo{MetricKind::commit_loc_modified, ArtifactKind::commit, Unit::lines, "loc_modified",
               "number of LOC modified"},
    MetricInfo{MetricKind::commit_message_length, ArtifactKind::commit, Unit::characters, "message_length",
               "message length"},
    MetricInfo{MetricKind::commit_comment_count, ArtifactKind::commit, Unit::count, "comment_count",
               "number of comments"},
    MetricInfo{MetricKind::commit_files_added, ArtifactKind::commit, Unit::count, "files_added",
               "number of files added"},
    MetricInfo{MetricKind::commit_files_changed, ArtifactKind::commit, Unit::count, "files_changed",
               "number of files changed"},
    MetricInfo{MetricKind::commit_files_deleted, ArtifactKind::commit, Unit::count, "files_deleted",
               "number of files deleted"},
    MetricInfo{MetricKind::commit_files_modified, ArtifactKind::commit, Unit::count, "files_modified",
               "number of files modified"},
    MetricInfo{MetricKind::commit_files_renamed, ArtifactKind::commit, Unit::count, "files_renamed",
               "number of files renamed"},
    MetricInfo{MetricKind::commit_pull_request_count, ArtifactKind::commit, Unit::count, "pull_request_count",
               "number of pull requests"},
    MetricInfo{MetricKind::issue_body_length, ArtifactKind::issue, Unit::characters, "body_length", "body length"},
    MetricInfo{MetricKind::issue_days_open_to_closed, ArtifactKind::issue, Unit::days, "days_open_to_closed",
               "days between open and closed"},
    MetricInfo{MetricKind::issue_comment_count, ArtifactKind::issue, Unit::count, "comment_count",
               "number of comments"},
    MetricInfo{MetricKind::issue_label_count, ArtifactKind::issue, Unit::count, "label_count", "number of labels"},
    MetricInfo{MetricKind::issue_default_branch_commit_count, ArtifactKind::issue, Unit::count,
               "default_branch_commit_count", "number of master branch commits"},
    MetricInfo{MetricKind::issue_title_length, ArtifactKind::issue, Unit::characters, "title_length",
               "title length"},
    MetricInfo{MetricKind::pull_body_length, ArtifactKind::pull, Unit::characters, "body_length", "body length"},
    MetricInfo{MetricKind::pull_days_open_to_closed, ArtifactKind::pull, Unit::days, "days_open_to_closed",
               "days between open and closed"},
    MetricInfo{MetricKind::pull_days_open_to_merged, ArtifactKind::pull, Unit::days, "days_open_to_merged",
               "days between open and merged"},
    MetricInfo{MetricKind::pull_changed_files, ArtifactKind::pull, Unit::count, "changed_files",
               "number of changed files"},
    MetricInfo{MetricKind::pull_review_comment_count, ArtifactKind::pull, Unit::count, "review_comment_count",
               "number of code review comments"},
    MetricInfo{MetricKind::pull_comment_count, ArtifactKind::pull, Unit::count, "comment_count",
               "number of comments"},
    MetricInfo{MetricKind::pull_label_count, ArtifactKind::pull, Unit::count, "label_count", "number of labels"},
    MetricInfo{MetricKind::pull_loc_added, ArtifactKind::pull, Unit::lines, "loc_added", "number of LOC added"},
    MetricInfo{MetricKind::pull_loc_deleted, ArtifactKind::pull, Unit::lines, "loc_deleted",
               "number of LOC deleted"},
    MetricInfo{MetricKind::pull_default_branch_commit_count, ArtifactKind::pull, Unit::count,
               "default_branch_commit_count", "number of master branch commits"},
    MetricInfo{MetricKind::pull_title_length, ArtifactKind::pull, Unit::characters, "title_length", "title length"},
};

const MetricInfo &info(MetricKind m) { return kMetrics[static_cast<std::size_t>(m)]; }

constexpr std::array<std::string_view, 13> kContextNames{
    "project",         "label",         "merge_flag",     "committer", "committer_and_merge",
    "file",            "file_and_merge", "file_and_committer", "file_and_label", "filetype",
    "assignee",        "owner",         "merge_status",
};

bool is_commit_file_metric(MetricKind m) {
    return m == MetricKind::commit_days_between_commits || m == MetricKind::commit_loc_added ||
           m == MetricKind::commit_loc_deleted || m == MetricKind::commit_loc_modified;
}

}  // namespace

const std::vector<MetricKind> &all_metrics() {
    static const std::vector<MetricKind> metrics = [] {
        std::vector<MetricKind> out;
        for (const auto &m : kMetrics) out.push_back(m.kind);
        return out;
    }();
    return metrics;
}

ArtifactKind artifact_of(MetricKind metric) { return info(metric).artifact; }
Unit unit_of(MetricKind metric) { return info(metric).unit; }
std::string_view metric_name(MetricKind metric) { return info(metric).name; }
std::string_view metric_display_name(MetricKind metric) { return info(metric).display; }

std::optional<MetricKind> metric_from_name(ArtifactKind artifact, std::string_view name) {
    for (const auto &m : kMetrics) {
        if (m.artifact == artifact && m.name == name) return m.kind;
    }
    return std::nullopt;
}

std::string_view context_name(ContextKind kind) { return kContextNames[static_cast<std::size_t>(kind)]; }

std::optional<ContextKind> context_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kContextNames.size(); ++i) {
        if (kContextNames[i] == name) return static_cast<ContextKind>(i);
    }
    return std::nullopt;
}

std::size_t context_arity(ContextKind kind) {
    switch (kind) {
    case ContextKind::project:
        return 0;
    case ContextKind::committer_and_merge:
    case ContextKind::file_and_merge:
    case ContextKind::file_and_committer:
    case ContextKind::file_and_label:
        return 2;
    default:
        return 1;
    }
}

bool is_file_level(ContextKind kind) {
    switch (kind) {
    case ContextKind::file:
    case ContextKind::file_and_merge:
    case ContextKind::file_and_committer:
    case ContextKind::file_and_label:
    case ContextKind::filetype:
        return true;
    default:
        return false;
    }
}

std::string_view artifact_name(ArtifactKind kind) {
    switch (kind) {
    case ArtifactKind::commit:
        return "commit";
    case ArtifactKind::issue:
        return "issue";
    case ArtifactKind::pull:
        return "pull";
    }
    return "";
}

std::string_view artifact_display_name(ArtifactKind kind) {
    return kind == ArtifactKind::pull ? "pull request" : artifact_name(kind);
}

std::string_view artifact_display_plural(ArtifactKind kind) {
    switch (kind) {
    case ArtifactKind::commit:
        return "commits";
    case ArtifactKind::issue:
        return "issues";
    case ArtifactKind::pull:
        return "pull requests";
    }
    return "";
}

std::optional<ArtifactKind> artifact_from_name(std::string_view name) {
    if (name == "commit") return ArtifactKind::commit;
    if (name == "issue") return ArtifactKind::issue;
    if (name == "pull") return ArtifactKind::pull;
    return std::nullopt;
}

std::string_view change_kind_name(ChangeKind kind) {
    switch (kind) {
    case ChangeKind::added:
        return "added";
    case ChangeKind::modified:
        return "modified";
    case ChangeKind::deleted:
        return "deleted";
    case ChangeKind::renamed:
        return "renamed";
    }
    return "";
}

std::optional<ChangeKind> change_kind_from_name(std::string_view name) {
    for (auto k : {ChangeKind::added, ChangeKind::modified, ChangeKind::deleted, ChangeKind::renamed}) {
        if (change_kind_name(k) == name) return k;
    }
    return std::nullopt;
}

std::string_view direction_name(Direction d) { return d == Direction::high ? "high" : "low"; }

ContextKey::ContextKey(ContextKind kind, std::vector<std::string> discriminators)
    : kind_(kind), discriminators_(std::move(discriminators)) {
    if (discriminators_.size() != context_arity(kind_)) {
        throw std::invalid_argument(fmt::format("context '{}' takes {} discriminator(s), got {}",
                                                context_name(kind_), context_arity(kind_), discriminators_.size()));
    }
}

std::string ContextKey::to_string() const {
    std::string out{context_name(kind_)};
    for (const auto &d : discriminators_) {
        out += ':';
        out += d;
    }
    return out;
}

bool is_valid_combination(MetricKind metric, ContextKind context) {
    switch (artifact_of(metric)) {
    case ArtifactKind::commit:
        switch (context) {
        case ContextKind::project:
        case ContextKind::label:
        case ContextKind::merge_flag:
        case ContextKind::committer:
            return true;
        case ContextKind::committer_and_merge:
        case ContextKind::file:
        case ContextKind::file_and_merge:
        case ContextKind::file_and_committer:
        case ContextKind::file_and_label:
        case ContextKind::filetype:
            return is_commit_file_metric(metric);
        default:
            return false;
        }
    case ArtifactKind::issue:
        return context == ContextKind::project || context == ContextKind::label ||
               context == ContextKind::assignee || context == ContextKind::owner;
    case ArtifactKind::pull:
        return context == ContextKind::project || context == ContextKind::label ||
               context == ContextKind::assignee || context == ContextKind::owner ||
               context == ContextKind::merge_status;
    }
    return false;
}

std::optional<EventTypeId> EventTypeId::make(MetricKind metric, ContextKind context) {
    if (!is_valid_combination(metric, context)) return std::nullopt;
    return EventTypeId{metric, context};
}

std::optional<EventTypeId> EventTypeId::parse(std::string_view text) {
    const auto first = text.find('/');
    const auto last = text.rfind('/');
    if (first == std::string_view::npos || first == last) return std::nullopt;
    const auto artifact = artifact_from_name(text.substr(0, first));
    if (!artifact) return std::nullopt;
    const auto metric = metric_from_name(*artifact, text.substr(first + 1, last - first - 1));
    const auto context = context_from_name(text.substr(last + 1));
    if (!metric || !context) return std::nullopt;
    return make(*metric, *context);
}

std::string EventTypeId::to_string() const {
    return fmt::format("{}/{}/{}", artifact_name(artifact()), metric_name(metric_), context_name(context_));
}

const std::vector<EventTypeId> &all_event_types() {
    static const std::vector<EventTypeId> types = [] {
        std::vector<EventTypeId> out;
        for (const auto &m : kMetrics) {
            for (std::size_t c = 0; c < kContextNames.size(); ++c) {
                if (auto id = EventTypeId::make(m.kind, static_cast<ContextKind>(c))) out.push_back(*id);
            }
        }
        return out;
    }();
    return types;
}

const std::vector<EventTypeId> &useful_event_types() {
    static const std::vector<EventTypeId> types{
        *EventTypeId::make(MetricKind::commit_loc_modified, ContextKind::project),
        *EventTypeId::make(MetricKind::pull_comment_count, ContextKind::project),
        *EventTypeId::make(MetricKind::issue_days_open_to_closed, ContextKind::project),
        *EventTypeId::make(MetricKind::issue_comment_count, ContextKind::label),
        *EventTypeId::make(MetricKind::commit_loc_deleted, ContextKind::project),
        *EventTypeId::make(MetricKind::commit_loc_added, ContextKind::project),
    };
    return types;
}

std::strong_ordering compare_refs(const ArtifactRef &lhs, const ArtifactRef &rhs) {
    if (auto c = lhs.kind <=> rhs.kind; c != 0) return c;
    if (lhs.kind != ArtifactKind::commit) {
        // Numeric ids: shorter decimal strings sort first.
        if (auto c = lhs.id.size() <=> rhs.id.size(); c != 0) return c;
    }
    if (auto c = lhs.id <=> rhs.id; c != 0) return c;
    return lhs.path <=> rhs.path;
}

bool UnusualEvent::is_consistent() const {
    return direction == Direction::high ? value > summary.upper_fence : value < summary.lower_fence;
}

}  // namespace unusual
