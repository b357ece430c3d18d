#include "unusual/metrics.hpp"

#include "unusual/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <unordered_map>

namespace unusual {

LocSplit split_loc(const FileChange &change) {
    const auto modified = std::min(change.lines_added, change.lines_deleted);
    return {change.lines_added - modified, change.lines_deleted - modified, modified};
}

std::vector<std::size_t> chronological_order(const RepoSnapshot &snapshot) {
    std::vector<std::size_t> order(snapshot.commits.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto &ca = snapshot.commits[a];
        const auto &cb = snapshot.commits[b];
        if (ca.committer_timestamp != cb.committer_timestamp) return ca.committer_timestamp < cb.committer_timestamp;
        return ca.sha < cb.sha;
    });
    return order;
}

std::vector<FileTouch> file_touches(const RepoSnapshot &snapshot) {
    std::vector<FileTouch> touches;
    std::unordered_map<std::string, std::string> identity_of;
    std::unordered_map<std::string, std::size_t> issued;
    // A path reused after its file was renamed away starts a new file.
    auto fresh = [&](const std::string &path) {
        const auto n = issued[path]++;
        return n == 0 ? path : path + "~" + std::to_string(n + 1);
    };
    for (auto ci : chronological_order(snapshot)) {
        const auto &changes = snapshot.commits[ci].file_changes;
        for (std::size_t fi = 0; fi < changes.size(); ++fi) {
            const auto &fc = changes[fi];
            std::string identity;
            if (fc.change_kind == ChangeKind::renamed && fc.previous_path) {
                auto it = identity_of.find(*fc.previous_path);
                identity = it != identity_of.end() ? it->second : fresh(*fc.previous_path);
                identity_of.erase(*fc.previous_path);
            } else {
                auto it = identity_of.find(fc.path);
                identity = it != identity_of.end() ? it->second : fresh(fc.path);
            }
            identity_of[fc.path] = identity;
            touches.push_back({ci, fi, std::move(identity)});
        }
    }
    return touches;
}

std::string file_type_of(std::string_view path) {
    const auto slash = path.find_last_of('/');
    const auto name = slash == std::string_view::npos ? path : path.substr(slash + 1);
    const auto dot = name.find_last_of('.');
    if (dot == std::string_view::npos || dot + 1 == name.size()) return "<none>";
    std::string ext(name.substr(dot + 1));
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext;
}

std::vector<double> consecutive_gaps(const std::vector<Timestamp> &sorted) {
    std::vector<double> gaps;
    for (std::size_t i = 1; i < sorted.size(); ++i) gaps.push_back(days_between(sorted[i - 1], sorted[i]));
    return gaps;
}

namespace {

ArtifactRef commit_ref(const Commit &c, std::optional<std::string> path = std::nullopt) {
    return {ArtifactKind::commit, c.sha, std::move(path)};
}

ArtifactRef numbered_ref(ArtifactKind kind, std::int64_t number) { return {kind, std::to_string(number), {}}; }

}  // namespace

std::vector<Observation> commit_observations(const RepoSnapshot &snapshot) {
    std::unordered_map<std::size_t, double> gap_of;
    const auto order = chronological_order(snapshot);
    for (std::size_t i = 1; i < order.size(); ++i) {
        gap_of[order[i]] = days_between(snapshot.commits[order[i - 1]].committer_timestamp,
                                        snapshot.commits[order[i]].committer_timestamp);
    }

    std::vector<Observation> out;
    for (std::size_t ci = 0; ci < snapshot.commits.size(); ++ci) {
        const auto &c = snapshot.commits[ci];
        const auto ref = commit_ref(c);
        auto emit = [&](MetricKind m, double v) { out.push_back({ref, m, v}); };

        if (auto it = gap_of.find(ci); it != gap_of.end()) emit(MetricKind::commit_days_between_commits, it->second);

        LocSplit loc;
        std::int64_t added = 0, deleted = 0, modified = 0, renamed = 0;
        for (const auto &fc : c.file_changes) {
            const auto s = split_loc(fc);
            loc.added += s.added;
            loc.deleted += s.deleted;
            loc.modified += s.modified;
            switch (fc.change_kind) {
            case ChangeKind::added:
                ++added;
                break;
            case ChangeKind::deleted:
                ++deleted;
                break;
            case ChangeKind::modified:
                ++modified;
                break;
            case ChangeKind::renamed:
                ++renamed;
                break;
            }
        }
        emit(MetricKind::commit_loc_added, static_cast<double>(loc.added));
        emit(MetricKind::commit_loc_deleted, static_cast<double>(loc.deleted));
        emit(MetricKind::commit_loc_modified, static_cast<double>(loc.modified));
        emit(MetricKind::commit_message_length, static_cast<double>(unicode_length(c.message)));
        emit(MetricKind::commit_comment_count, static_cast<double>(c.comment_count));
        emit(MetricKind::commit_files_added, static_cast<double>(added));
        emit(MetricKind::commit_files_changed, static_cast<double>(c.file_changes.size()));
        emit(MetricKind::commit_files_deleted, static_cast<double>(deleted));
        emit(MetricKind::commit_files_modified, static_cast<double>(modified));
        emit(MetricKind::commit_files_renamed, static_cast<double>(renamed));
        emit(MetricKind::commit_pull_request_count, static_cast<double>(c.linked_pr_numbers.size()));
    }
    return out;
}

std::vector<Observation> per_file_observations(const RepoSnapshot &snapshot) {
    std::vector<Observation> out;
    std::unordered_map<std::string, Timestamp> last_touch;
    for (const auto &t : file_touches(snapshot)) {
        const auto &c = snapshot.commits[t.commit_index];
        const auto &fc = c.file_changes[t.change_index];
        const auto ref = commit_ref(c, fc.path);
        if (auto it = last_touch.find(t.identity); it != last_touch.end()) {
            out.push_back({ref, MetricKind::commit_days_between_commits,
                           days_between(it->second, c.committer_timestamp)});
        }
        last_touch[t.identity] = c.committer_timestamp;
        const auto s = split_loc(fc);
        out.push_back({ref, MetricKind::commit_loc_added, static_cast<double>(s.added)});
        out.push_back({ref, MetricKind::commit_loc_deleted, static_cast<double>(s.deleted)});
        out.push_back({ref, MetricKind::commit_loc_modified, static_cast<double>(s.modified)});
    }
    return out;
}

std::vector<Observation> issue_observations(const RepoSnapshot &snapshot) {
    std::vector<Observation> out;
    for (const auto &i : snapshot.issues) {
        const auto ref = numbered_ref(ArtifactKind::issue, i.number);
        auto emit = [&](MetricKind m, double v) { out.push_back({ref, m, v}); };
        emit(MetricKind::issue_body_length, static_cast<double>(unicode_length(i.body)));
        if (i.closed_at) emit(MetricKind::issue_days_open_to_closed, days_between(i.created_at, *i.closed_at));
        emit(MetricKind::issue_comment_count, static_cast<double>(i.comment_count));
        emit(MetricKind::issue_label_count, static_cast<double>(i.labels.size()));
        emit(MetricKind::issue_default_branch_commit_count,
             static_cast<double>(i.linked_default_branch_commit_shas.size()));
        emit(MetricKind::issue_title_length, static_cast<double>(unicode_length(i.title)));
    }
    return out;
}

std::vector<Observation> pull_observations(const RepoSnapshot &snapshot) {
    const auto reachable = default_branch_commits(snapshot);
    std::vector<Observation> out;
    for (const auto &p : snapshot.pulls) {
        const auto ref = numbered_ref(ArtifactKind::pull, p.number);
        auto emit = [&](MetricKind m, double v) { out.push_back({ref, m, v}); };
        emit(MetricKind::pull_body_length, static_cast<double>(unicode_length(p.body)));
        if (p.closed_at) emit(MetricKind::pull_days_open_to_closed, days_between(p.created_at, *p.closed_at));
        if (p.merged_at) emit(MetricKind::pull_days_open_to_merged, days_between(p.created_at, *p.merged_at));
        emit(MetricKind::pull_changed_files, static_cast<double>(p.changed_files));
        emit(MetricKind::pull_review_comment_count, static_cast<double>(p.review_comment_count));
        emit(MetricKind::pull_comment_count, static_cast<double>(p.comment_count));
        emit(MetricKind::pull_label_count, static_cast<double>(p.labels.size()));
        emit(MetricKind::pull_loc_added, static_cast<double>(p.lines_added));
        emit(MetricKind::pull_loc_deleted, static_cast<double>(p.lines_deleted));
        const auto on_default = std::count_if(p.commit_shas.begin(), p.commit_shas.end(),
                                              [&](const std::string &sha) { return reachable.contains(sha); });
        emit(MetricKind::pull_default_branch_commit_count, static_cast<double>(on_default));
        emit(MetricKind::pull_title_length, static_cast<double>(unicode_length(p.title)));
    }
    return out;
}

}  // namespace unusual
