#include "unusual/outliers.hpp"

#include "unusual/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <thread>
#include <unordered_map>

#include <fmt/format.h>

namespace unusual {

void DetectorConfig::validate() const {
    if (!(k > 0.0) || std::isnan(k)) throw std::invalid_argument("k must be > 0");
    if (min_group_size < 2) throw std::invalid_argument("min_group_size must be >= 2");
}

double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("quantile of empty data");
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= sorted.size() || frac == 0.0) return sorted[lo];
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

DistributionSummary summarize(std::span<const double> values, double k) {
    if (values.empty()) throw std::invalid_argument("cannot summarize an empty group");
    std::vector<double> sorted(values.begin(), values.end());
    for (double v : sorted) {
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite value in group");
    }
    std::sort(sorted.begin(), sorted.end());

    DistributionSummary s;
    s.n = sorted.size();
    s.q1 = quantile_sorted(sorted, 0.25);
    s.median = quantile_sorted(sorted, 0.5);
    s.q3 = quantile_sorted(sorted, 0.75);
    s.iqr = s.q3 - s.q1;
    // 0 * inf would poison the fences of a constant group.
    const double spread = s.iqr == 0.0 ? 0.0 : k * s.iqr;
    s.lower_fence = s.q1 - spread;
    s.upper_fence = s.q3 + spread;
    return s;
}

std::vector<UnusualEvent> detect_group(std::span<const Observation> group, const DistributionSummary &summary,
                                       const EventTypeId &type, const ContextKey &context) {
    std::vector<UnusualEvent> events;
    for (const auto &o : group) {
        Direction direction;
        if (o.value > summary.upper_fence) {
            direction = Direction::high;
        } else if (o.value < summary.lower_fence) {
            direction = Direction::low;
        } else {
            continue;
        }
        events.push_back({o.artifact_ref, type, context, o.value, summary, direction});
    }
    return events;
}

namespace {

const std::string kMerge = "merge";
const std::string kNonMerge = "non-merge";

const std::string &merge_flag(const Commit &c) { return c.is_merge() ? kMerge : kNonMerge; }

/// Lookup tables shared by every partition of one snapshot.
class ContextIndex {
public:
    explicit ContextIndex(const RepoSnapshot &snapshot) : snapshot_(snapshot), touches_(file_touches(snapshot)) {
        for (std::size_t i = 0; i < snapshot.commits.size(); ++i) commit_at_.emplace(snapshot.commits[i].sha, i);
        for (const auto &i : snapshot.issues) issue_at_.emplace(std::to_string(i.number), &i);
        for (const auto &p : snapshot.pulls) pull_at_.emplace(std::to_string(p.number), &p);
        std::unordered_map<std::int64_t, const std::set<std::string> *> issue_labels, pull_labels;
        for (const auto &i : snapshot.issues) issue_labels.emplace(i.number, &i.labels);
        for (const auto &p : snapshot.pulls) pull_labels.emplace(p.number, &p.labels);

        commit_labels_.resize(snapshot.commits.size());
        for (std::size_t ci = 0; ci < snapshot.commits.size(); ++ci) {
            const auto &c = snapshot.commits[ci];
            for (auto n : c.linked_issue_numbers) {
                if (auto it = issue_labels.find(n); it != issue_labels.end()) {
                    commit_labels_[ci].insert(it->second->begin(), it->second->end());
                }
            }
            for (auto n : c.linked_pr_numbers) {
                if (auto it = pull_labels.find(n); it != pull_labels.end()) {
                    commit_labels_[ci].insert(it->second->begin(), it->second->end());
                }
            }
        }
        for (std::size_t t = 0; t < touches_.size(); ++t) {
            const auto &touch = touches_[t];
            const auto &c = snapshot.commits[touch.commit_index];
            touch_at_.emplace(c.sha + '\n' + c.file_changes[touch.change_index].path, t);
        }
    }

    /// Context keys an observation belongs to.
    std::vector<ContextKey> keys_for(const Observation &o, ContextKind context) const {
        switch (o.artifact_ref.kind) {
        case ArtifactKind::commit: {
            const auto ci = commit_index(o.artifact_ref.id);
            if (is_file_level(context)) {
                if (!o.artifact_ref.path) {
                    throw std::invalid_argument(
                        fmt::format("context '{}' needs per-file observations", context_name(context)));
                }
                auto it = touch_at_.find(o.artifact_ref.id + '\n' + *o.artifact_ref.path);
                if (it == touch_at_.end()) {
                    throw std::invalid_argument(
                        fmt::format("commit {} did not touch {}", o.artifact_ref.id, *o.artifact_ref.path));
                }
                return touch_keys(it->second, context);
            }
            return commit_keys(ci, context);
        }
        case ArtifactKind::issue: {
            auto it = issue_at_.find(o.artifact_ref.id);
            if (it == issue_at_.end()) throw std::invalid_argument("unknown issue " + o.artifact_ref.id);
            const Issue &i = *it->second;
            return tracker_keys(context, i.labels, i.assignee_ids, i.creator_id, std::nullopt);
        }
        case ArtifactKind::pull: {
            auto it = pull_at_.find(o.artifact_ref.id);
            if (it == pull_at_.end()) throw std::invalid_argument("unknown pull request " + o.artifact_ref.id);
            const PullRequest &p = *it->second;
            return tracker_keys(context, p.labels, p.assignee_ids, p.creator_id, p.is_merged());
        }
        }
        return {};
    }

    std::vector<ContextKey> commit_keys(std::size_t ci, ContextKind context) const {
        const auto &c = snapshot_.commits[ci];
        switch (context) {
        case ContextKind::project:
            return {ContextKey(context)};
        case ContextKind::label: {
            std::vector<ContextKey> keys;
            for (const auto &l : commit_labels_[ci]) keys.emplace_back(context, std::vector<std::string>{l});
            return keys;
        }
        case ContextKind::merge_flag:
            return {ContextKey(context, {merge_flag(c)})};
        case ContextKind::committer:
            return {ContextKey(context, {c.committer_id})};
        case ContextKind::committer_and_merge:
            return {ContextKey(context, {c.committer_id, merge_flag(c)})};
        default:
            return {};
        }
    }

    std::vector<ContextKey> touch_keys(std::size_t t, ContextKind context) const {
        const auto &touch = touches_[t];
        const auto &c = snapshot_.commits[touch.commit_index];
        const auto &fc = c.file_changes[touch.change_index];
        switch (context) {
        case ContextKind::file:
            return {ContextKey(context, {touch.identity})};
        case ContextKind::file_and_merge:
            return {ContextKey(context, {touch.identity, merge_flag(c)})};
        case ContextKind::file_and_committer:
            return {ContextKey(context, {touch.identity, c.committer_id})};
        case ContextKind::file_and_label: {
            std::vector<ContextKey> keys;
            for (const auto &l : commit_labels_[touch.commit_index]) {
                keys.emplace_back(context, std::vector<std::string>{touch.identity, l});
            }
            return keys;
        }
        case ContextKind::filetype:
            return {ContextKey(context, {file_type_of(fc.path)})};
        default:
            return {};
        }
    }

    const std::vector<FileTouch> &touches() const { return touches_; }
    const RepoSnapshot &snapshot() const { return snapshot_; }

private:
    std::size_t commit_index(const std::string &sha) const {
        auto it = commit_at_.find(sha);
        if (it == commit_at_.end()) throw std::invalid_argument("unknown commit " + sha);
        return it->second;
    }

    static std::vector<ContextKey> tracker_keys(ContextKind context, const std::set<std::string> &labels,
                                                const std::set<std::string> &assignees, const std::string &creator,
                                                std::optional<bool> merged) {
        std::vector<ContextKey> keys;
        switch (context) {
        case ContextKind::project:
            keys.emplace_back(context);
            break;
        case ContextKind::label:
            for (const auto &l : labels) keys.emplace_back(context, std::vector<std::string>{l});
            break;
        case ContextKind::assignee:
            for (const auto &a : assignees) keys.emplace_back(context, std::vector<std::string>{a});
            break;
        case ContextKind::owner:
            keys.emplace_back(context, std::vector<std::string>{creator});
            break;
        case ContextKind::merge_status:
            if (merged) keys.emplace_back(context, std::vector<std::string>{*merged ? "merged" : "not_merged"});
            break;
        default:
            break;
        }
        return keys;
    }

    const RepoSnapshot &snapshot_;
    std::vector<FileTouch> touches_;
    std::unordered_map<std::string, std::size_t> commit_at_;
    std::unordered_map<std::string, const Issue *> issue_at_;
    std::unordered_map<std::string, const PullRequest *> pull_at_;
    std::unordered_map<std::string, std::size_t> touch_at_;
    std::vector<std::set<std::string>> commit_labels_;
};

bool regroups_gaps(MetricKind metric, ContextKind context) {
    return metric == MetricKind::commit_days_between_commits && context != ContextKind::project &&
           context != ContextKind::filetype;
}

/// Re-derives days_between_commits along each group's own ordering.
ContextGroups regrouped_gaps(const ContextIndex &index, ContextKind context) {
    const auto &snapshot = index.snapshot();
    struct Member {
        Timestamp at;
        const std::string *sha;
        ArtifactRef ref;
    };
    std::map<ContextKey, std::vector<Member>> members;
    if (is_file_level(context)) {
        const auto &touches = index.touches();
        for (std::size_t t = 0; t < touches.size(); ++t) {
            const auto &c = snapshot.commits[touches[t].commit_index];
            const auto &path = c.file_changes[touches[t].change_index].path;
            for (auto &key : index.touch_keys(t, context)) {
                members[key].push_back({c.committer_timestamp, &c.sha, {ArtifactKind::commit, c.sha, path}});
            }
        }
    } else {
        for (auto ci : chronological_order(snapshot)) {
            const auto &c = snapshot.commits[ci];
            for (auto &key : index.commit_keys(ci, context)) {
                members[key].push_back({c.committer_timestamp, &c.sha, {ArtifactKind::commit, c.sha, {}}});
            }
        }
    }

    ContextGroups groups;
    for (auto &[key, list] : members) {
        std::stable_sort(list.begin(), list.end(), [](const Member &a, const Member &b) {
            if (a.at != b.at) return a.at < b.at;
            return *a.sha < *b.sha;
        });
        if (list.size() < 2) continue;
        auto &out = groups[key];
        for (std::size_t i = 1; i < list.size(); ++i) {
            out.push_back({list[i].ref, MetricKind::commit_days_between_commits, days_between(list[i - 1].at, list[i].at)});
        }
    }
    return groups;
}

ContextGroups partition_with(const ContextIndex &index, std::span<const Observation> observations,
                             ContextKind context) {
    ContextGroups groups;
    if (observations.empty()) return groups;
    const auto metric = observations.front().metric;
    if (!is_valid_combination(metric, context)) {
        throw InapplicableCombination(fmt::format("context '{}' does not apply to {} metric '{}'",
                                                  context_name(context), artifact_name(artifact_of(metric)),
                                                  metric_name(metric)));
    }
    for (const auto &o : observations) {
        if (o.metric != metric) throw std::invalid_argument("partition needs observations of a single metric");
    }
    if (regroups_gaps(metric, context)) return regrouped_gaps(index, context);

    for (const auto &o : observations) {
        for (auto &key : index.keys_for(o, context)) groups[std::move(key)].push_back(o);
    }
    return groups;
}

}  // namespace

ContextGroups partition(std::span<const Observation> observations, const RepoSnapshot &snapshot,
                        ContextKind context) {
    const ContextIndex index(snapshot);
    return partition_with(index, observations, context);
}

bool event_less(const UnusualEvent &lhs, const UnusualEvent &rhs) {
    const ArtifactRef a{lhs.artifact_ref.kind, lhs.artifact_ref.id, {}};
    const ArtifactRef b{rhs.artifact_ref.kind, rhs.artifact_ref.id, {}};
    if (auto c = compare_refs(a, b); c != 0) return c < 0;
    if (lhs.event_type != rhs.event_type) return lhs.event_type < rhs.event_type;
    if (lhs.context != rhs.context) return lhs.context < rhs.context;
    return lhs.artifact_ref.path < rhs.artifact_ref.path;
}

void sort_events(std::vector<UnusualEvent> &events) { std::sort(events.begin(), events.end(), event_less); }

std::vector<UnusualEvent> detect_all(const RepoSnapshot &snapshot, const DetectorConfig &config) {
    config.validate();

    std::vector<EventTypeId> types =
        config.enabled_event_types.empty() ? all_event_types() : config.enabled_event_types;
    if (config.useful_only) {
        const auto &useful = useful_event_types();
        std::erase_if(types, [&](const EventTypeId &t) {
            return std::find(useful.begin(), useful.end(), t) == useful.end();
        });
    }
    std::sort(types.begin(), types.end());
    types.erase(std::unique(types.begin(), types.end()), types.end());

    const ContextIndex index(snapshot);
    const auto commit_obs = commit_observations(snapshot);
    const auto file_obs = per_file_observations(snapshot);
    const auto issue_obs = issue_observations(snapshot);
    const auto pull_obs = pull_observations(snapshot);

    auto evaluate = [&](const EventTypeId &type) {
        const std::vector<Observation> *source = nullptr;
        switch (type.artifact()) {
        case ArtifactKind::commit:
            source = is_file_level(type.context()) ? &file_obs : &commit_obs;
            break;
        case ArtifactKind::issue:
            source = &issue_obs;
            break;
        case ArtifactKind::pull:
            source = &pull_obs;
            break;
        }
        std::vector<Observation> selected;
        for (const auto &o : *source) {
            if (o.metric == type.metric()) selected.push_back(o);
        }
        std::vector<UnusualEvent> events;
        if (selected.empty()) return events;
        for (const auto &[key, group] : partition_with(index, selected, type.context())) {
            if (group.size() < config.min_group_size) continue;
            std::vector<double> values;
            values.reserve(group.size());
            for (const auto &o : group) values.push_back(o.value);
            const auto summary = summarize(values, config.k);
            auto found = detect_group(group, summary, type, key);
            events.insert(events.end(), std::make_move_iterator(found.begin()), std::make_move_iterator(found.end()));
        }
        return events;
    };

    std::vector<std::vector<UnusualEvent>> per_type(types.size());
    const std::size_t workers = std::max<std::size_t>(1, std::min(config.threads, types.size()));
    if (workers == 1) {
        for (std::size_t i = 0; i < types.size(); ++i) per_type[i] = evaluate(types[i]);
    } else {
        std::vector<std::jthread> threads;
        for (std::size_t w = 0; w < workers; ++w) {
            threads.emplace_back([&, w] {
                for (std::size_t i = w; i < types.size(); i += workers) per_type[i] = evaluate(types[i]);
            });
        }
    }

    std::vector<UnusualEvent> events;
    for (auto &v : per_type) events.insert(events.end(), std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
    sort_events(events);
    return events;
}

}  // namespace unusual
