#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace unusual::testing {

std::set<std::string> reachable_by_fixpoint(const RepoSnapshot &snapshot) {
    std::set<std::string> reached;
    if (snapshot.commits.empty()) return reached;
    reached.insert(snapshot.default_branch_head.empty() ? snapshot.commits.front().sha
                                                        : snapshot.default_branch_head);
    bool grew = true;
    while (grew) {
        grew = false;
        for (const auto &c : snapshot.commits) {
            if (!reached.contains(c.sha)) continue;
            for (const auto &p : c.parent_shas) {
                const bool known = std::any_of(snapshot.commits.begin(), snapshot.commits.end(),
                                               [&](const Commit &o) { return o.sha == p; });
                if (known && reached.insert(p).second) grew = true;
            }
        }
    }
    return reached;
}

double textbook_quantile(std::vector<double> values, double p) {
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    const double h = (n - 1.0) * p + 1.0;
    const auto fl = static_cast<std::size_t>(std::floor(h));
    const double frac = h - std::floor(h);
    const double below = values[fl - 1];
    if (frac == 0.0) return below;
    return below + frac * (values[fl] - below);
}

namespace {

struct Touch {
    const Commit *commit;
    const FileChange *change;
    std::string identity;
};

bool earlier(const Commit *a, const Commit *b) {
    if (a->committer_timestamp != b->committer_timestamp) return a->committer_timestamp < b->committer_timestamp;
    return a->sha < b->sha;
}

std::vector<const Commit *> commits_in_time_order(const RepoSnapshot &s) {
    std::vector<const Commit *> out;
    for (const auto &c : s.commits) out.push_back(&c);
    std::sort(out.begin(), out.end(), earlier);
    return out;
}

/// Identity by searching backwards through earlier touches.
std::vector<Touch> touches_of(const RepoSnapshot &s) {
    std::vector<Touch> touches;
    std::map<std::string, int> fresh_count;
    auto fresh = [&](const std::string &path) {
        const int n = ++fresh_count[path];
        return n == 1 ? path : path + "~" + std::to_string(n);
    };
    auto lookup = [&](const std::string &path) -> std::optional<std::string> {
        for (auto it = touches.rbegin(); it != touches.rend(); ++it) {
            if (it->change->change_kind == ChangeKind::renamed && it->change->previous_path == path &&
                it->change->path != path) {
                return std::nullopt;
            }
            if (it->change->path == path) return it->identity;
        }
        return std::nullopt;
    };
    for (const Commit *c : commits_in_time_order(s)) {
        for (const auto &fc : c->file_changes) {
            std::string identity;
            const bool renamed = fc.change_kind == ChangeKind::renamed && fc.previous_path.has_value();
            const std::string &origin = renamed ? *fc.previous_path : fc.path;
            auto found = lookup(origin);
            identity = found ? *found : fresh(origin);
            touches.push_back({c, &fc, identity});
        }
    }
    return touches;
}

std::set<std::string> labels_of_commit(const RepoSnapshot &s, const Commit &c) {
    std::set<std::string> out;
    for (const auto &i : s.issues) {
        if (c.linked_issue_numbers.contains(i.number)) out.insert(i.labels.begin(), i.labels.end());
    }
    for (const auto &p : s.pulls) {
        if (c.linked_pr_numbers.contains(p.number)) out.insert(p.labels.begin(), p.labels.end());
    }
    return out;
}

std::string merge_word(const Commit &c) { return c.parent_shas.size() > 1 ? "merge" : "non-merge"; }

std::string extension(const std::string &path) {
    auto name = path.substr(path.rfind('/') == std::string::npos ? 0 : path.rfind('/') + 1);
    auto dot = name.rfind('.');
    if (dot == std::string::npos || dot + 1 == name.size()) return "<none>";
    std::string ext = name.substr(dot + 1);
    for (auto &ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return ext;
}

struct Member {
    ArtifactRef ref;
    std::optional<double> value;
    std::vector<ContextKey> keys;
    const Commit *commit = nullptr;  // for regrouped gaps
};

std::vector<ContextKey> commit_keys(const RepoSnapshot &s, const Commit &c, ContextKind ctx) {
    std::vector<ContextKey> keys;
    switch (ctx) {
    case ContextKind::project:
        keys.emplace_back(ctx);
        break;
    case ContextKind::label:
        for (const auto &l : labels_of_commit(s, c)) keys.emplace_back(ctx, std::vector<std::string>{l});
        break;
    case ContextKind::merge_flag:
        keys.emplace_back(ctx, std::vector<std::string>{merge_word(c)});
        break;
    case ContextKind::committer:
        keys.emplace_back(ctx, std::vector<std::string>{c.committer_id});
        break;
    case ContextKind::committer_and_merge:
        keys.emplace_back(ctx, std::vector<std::string>{c.committer_id, merge_word(c)});
        break;
    default:
        break;
    }
    return keys;
}

std::vector<ContextKey> touch_keys(const RepoSnapshot &s, const Touch &t, ContextKind ctx) {
    std::vector<ContextKey> keys;
    switch (ctx) {
    case ContextKind::file:
        keys.emplace_back(ctx, std::vector<std::string>{t.identity});
        break;
    case ContextKind::file_and_merge:
        keys.emplace_back(ctx, std::vector<std::string>{t.identity, merge_word(*t.commit)});
        break;
    case ContextKind::file_and_committer:
        keys.emplace_back(ctx, std::vector<std::string>{t.identity, t.commit->committer_id});
        break;
    case ContextKind::file_and_label:
        for (const auto &l : labels_of_commit(s, *t.commit)) {
            keys.emplace_back(ctx, std::vector<std::string>{t.identity, l});
        }
        break;
    case ContextKind::filetype:
        keys.emplace_back(ctx, std::vector<std::string>{extension(t.change->path)});
        break;
    default:
        break;
    }
    return keys;
}

template <class Tracker>
std::vector<ContextKey> tracker_keys(const Tracker &t, ContextKind ctx, std::optional<bool> merged) {
    std::vector<ContextKey> keys;
    switch (ctx) {
    case ContextKind::project:
        keys.emplace_back(ctx);
        break;
    case ContextKind::label:
        for (const auto &l : t.labels) keys.emplace_back(ctx, std::vector<std::string>{l});
        break;
    case ContextKind::assignee:
        for (const auto &a : t.assignee_ids) keys.emplace_back(ctx, std::vector<std::string>{a});
        break;
    case ContextKind::owner:
        keys.emplace_back(ctx, std::vector<std::string>{t.creator_id});
        break;
    case ContextKind::merge_status:
        if (merged) keys.emplace_back(ctx, std::vector<std::string>{*merged ? "merged" : "not_merged"});
        break;
    default:
        break;
    }
    return keys;
}

std::int64_t loc_part(const FileChange &fc, MetricKind m) {
    const auto paired = std::min(fc.lines_added, fc.lines_deleted);
    if (m == MetricKind::commit_loc_added) return fc.lines_added - paired;
    if (m == MetricKind::commit_loc_deleted) return fc.lines_deleted - paired;
    return paired;
}

std::optional<double> commit_value(const RepoSnapshot &, const Commit &c, MetricKind m) {
    auto count_kind = [&](ChangeKind k) {
        return static_cast<double>(std::count_if(c.file_changes.begin(), c.file_changes.end(),
                                                 [&](const FileChange &fc) { return fc.change_kind == k; }));
    };
    switch (m) {
    case MetricKind::commit_loc_added:
    case MetricKind::commit_loc_deleted:
    case MetricKind::commit_loc_modified: {
        std::int64_t total = 0;
        for (const auto &fc : c.file_changes) total += loc_part(fc, m);
        return static_cast<double>(total);
    }
    case MetricKind::commit_message_length:
        return static_cast<double>(unicode_length(c.message));
    case MetricKind::commit_comment_count:
        return static_cast<double>(c.comment_count);
    case MetricKind::commit_files_added:
        return count_kind(ChangeKind::added);
    case MetricKind::commit_files_deleted:
        return count_kind(ChangeKind::deleted);
    case MetricKind::commit_files_modified:
        return count_kind(ChangeKind::modified);
    case MetricKind::commit_files_renamed:
        return count_kind(ChangeKind::renamed);
    case MetricKind::commit_files_changed:
        return static_cast<double>(c.file_changes.size());
    case MetricKind::commit_pull_request_count:
        return static_cast<double>(c.linked_pr_numbers.size());
    default:
        return std::nullopt;
    }
}

std::optional<double> issue_value(const Issue &i, MetricKind m) {
    switch (m) {
    case MetricKind::issue_body_length:
        return static_cast<double>(unicode_length(i.body));
    case MetricKind::issue_title_length:
        return static_cast<double>(unicode_length(i.title));
    case MetricKind::issue_days_open_to_closed:
        if (!i.closed_at) return std::nullopt;
        return days_between(i.created_at, *i.closed_at);
    case MetricKind::issue_comment_count:
        return static_cast<double>(i.comment_count);
    case MetricKind::issue_label_count:
        return static_cast<double>(i.labels.size());
    case MetricKind::issue_default_branch_commit_count:
        return static_cast<double>(i.linked_default_branch_commit_shas.size());
    default:
        return std::nullopt;
    }
}

std::optional<double> pull_value(const PullRequest &p, MetricKind m, const std::set<std::string> &reachable) {
    switch (m) {
    case MetricKind::pull_body_length:
        return static_cast<double>(unicode_length(p.body));
    case MetricKind::pull_title_length:
        return static_cast<double>(unicode_length(p.title));
    case MetricKind::pull_days_open_to_closed:
        if (!p.closed_at) return std::nullopt;
        return days_between(p.created_at, *p.closed_at);
    case MetricKind::pull_days_open_to_merged:
        if (!p.merged_at) return std::nullopt;
        return days_between(p.created_at, *p.merged_at);
    case MetricKind::pull_changed_files:
        return static_cast<double>(p.changed_files);
    case MetricKind::pull_review_comment_count:
        return static_cast<double>(p.review_comment_count);
    case MetricKind::pull_comment_count:
        return static_cast<double>(p.comment_count);
    case MetricKind::pull_label_count:
        return static_cast<double>(p.labels.size());
    case MetricKind::pull_loc_added:
        return static_cast<double>(p.lines_added);
    case MetricKind::pull_loc_deleted:
        return static_cast<double>(p.lines_deleted);
    case MetricKind::pull_default_branch_commit_count: {
        double n = 0;
        for (const auto &sha : p.commit_shas) n += reachable.contains(sha) ? 1 : 0;
        return n;
    }
    default:
        return std::nullopt;
    }
}

using Groups = std::map<ContextKey, std::vector<std::pair<ArtifactRef, double>>>;

/// Consecutive gaps inside each key, members ordered by (time, sha).
Groups regrouped(const std::vector<Member> &members) {
    std::map<ContextKey, std::vector<const Member *>> by_key;
    for (const auto &m : members) {
        for (const auto &k : m.keys) by_key[k].push_back(&m);
    }
    Groups groups;
    for (auto &[key, list] : by_key) {
        std::stable_sort(list.begin(), list.end(),
                         [](const Member *a, const Member *b) { return earlier(a->commit, b->commit); });
        for (std::size_t i = 1; i < list.size(); ++i) {
            groups[key].emplace_back(list[i]->ref, days_between(list[i - 1]->commit->committer_timestamp,
                                                                list[i]->commit->committer_timestamp));
        }
    }
    return groups;
}

Groups plain(const std::vector<Member> &members) {
    Groups groups;
    for (const auto &m : members) {
        if (!m.value) continue;
        for (const auto &k : m.keys) groups[k].emplace_back(m.ref, *m.value);
    }
    return groups;
}

Groups groups_for(const RepoSnapshot &s, const EventTypeId &type, const std::vector<Touch> &touches,
                  const std::set<std::string> &reachable) {
    const auto m = type.metric();
    const auto ctx = type.context();
    std::vector<Member> members;
    const bool gaps = m == MetricKind::commit_days_between_commits;

    switch (type.artifact()) {
    case ArtifactKind::commit:
        if (is_file_level(ctx)) {
            for (std::size_t t = 0; t < touches.size(); ++t) {
                Member mem{{ArtifactKind::commit, touches[t].commit->sha, touches[t].change->path}, std::nullopt,
                           touch_keys(s, touches[t], ctx), touches[t].commit};
                if (gaps) {
                    for (std::size_t u = t; u-- > 0;) {
                        if (touches[u].identity == touches[t].identity) {
                            mem.value = days_between(touches[u].commit->committer_timestamp,
                                                     touches[t].commit->committer_timestamp);
                            break;
                        }
                    }
                } else {
                    mem.value = static_cast<double>(loc_part(*touches[t].change, m));
                }
                members.push_back(std::move(mem));
            }
            if (gaps && ctx != ContextKind::filetype) return regrouped(members);
            return plain(members);
        }
        for (const auto &c : s.commits) {
            members.push_back({{ArtifactKind::commit, c.sha, {}}, commit_value(s, c, m), commit_keys(s, c, ctx), &c});
        }
        if (gaps) {
            if (ctx != ContextKind::project) return regrouped(members);
            auto ordered = commits_in_time_order(s);
            Groups groups;
            for (std::size_t i = 1; i < ordered.size(); ++i) {
                groups[ContextKey(ContextKind::project)].emplace_back(
                    ArtifactRef{ArtifactKind::commit, ordered[i]->sha, {}},
                    days_between(ordered[i - 1]->committer_timestamp, ordered[i]->committer_timestamp));
            }
            return groups;
        }
        return plain(members);
    case ArtifactKind::issue:
        for (const auto &i : s.issues) {
            members.push_back({{ArtifactKind::issue, std::to_string(i.number), {}}, issue_value(i, m),
                               tracker_keys(i, ctx, std::nullopt)});
        }
        return plain(members);
    case ArtifactKind::pull:
        for (const auto &p : s.pulls) {
            members.push_back({{ArtifactKind::pull, std::to_string(p.number), {}}, pull_value(p, m, reachable),
                               tracker_keys(p, ctx, p.merged_at.has_value())});
        }
        return plain(members);
    }
    return {};
}

}  // namespace

std::vector<UnusualEvent> brute_force_detect(const RepoSnapshot &snapshot, const DetectorConfig &config) {
    std::vector<EventTypeId> types = config.enabled_event_types.empty() ? all_event_types() : config.enabled_event_types;
    if (config.useful_only) {
        std::vector<EventTypeId> kept;
        for (const auto &t : types) {
            for (const auto &u : useful_event_types()) {
                if (t == u) kept.push_back(t);
            }
        }
        types = kept;
    }
    std::set<EventTypeId> unique(types.begin(), types.end());

    const auto touches = touches_of(snapshot);
    const auto reachable = reachable_by_fixpoint(snapshot);
    std::vector<UnusualEvent> events;
    for (const auto &type : unique) {
        for (const auto &[key, members] : groups_for(snapshot, type, touches, reachable)) {
            if (members.size() < config.min_group_size) continue;
            std::vector<double> values;
            for (const auto &m : members) values.push_back(m.second);
            DistributionSummary s;
            s.n = values.size();
            s.q1 = textbook_quantile(values, 0.25);
            s.median = textbook_quantile(values, 0.5);
            s.q3 = textbook_quantile(values, 0.75);
            s.iqr = s.q3 - s.q1;
            s.lower_fence = s.iqr == 0.0 ? s.q1 : s.q1 - config.k * s.iqr;
            s.upper_fence = s.iqr == 0.0 ? s.q3 : s.q3 + config.k * s.iqr;
            for (const auto &[ref, v] : members) {
                if (v > s.upper_fence) events.push_back({ref, type, key, v, s, Direction::high});
                if (v < s.lower_fence) events.push_back({ref, type, key, v, s, Direction::low});
            }
        }
    }
    sort_events(events);
    return events;
}

}  // namespace unusual::testing
