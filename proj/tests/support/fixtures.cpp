#include "fixtures.hpp"

#include "unusual/ingest.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace unusual::testing {

Timestamp at_seconds(std::int64_t seconds) {
    return parse_timestamp("2016-01-01T00:00:00Z") + std::chrono::seconds(seconds);
}

Timestamp at_days(double days) { return at_seconds(std::llround(days * kSecondsPerDay)); }

FileChange change(std::string path, ChangeKind kind, std::int64_t added, std::int64_t deleted,
                  std::optional<std::string> previous) {
    return {std::move(path), kind, added, deleted, std::move(previous)};
}

Commit make_commit(std::string sha, std::vector<std::string> parents, std::string committer, Timestamp when,
                   std::string message, std::vector<FileChange> changes) {
    Commit c;
    c.sha = std::move(sha);
    c.parent_shas = std::move(parents);
    c.author_id = committer;
    c.committer_id = std::move(committer);
    c.committer_timestamp = when;
    c.message = std::move(message);
    c.file_changes = std::move(changes);
    return c;
}

Issue make_issue(std::int64_t number, std::string creator, Timestamp created, std::optional<Timestamp> closed,
                 std::int64_t comments, std::set<std::string> labels, std::set<std::string> assignees) {
    Issue i;
    i.number = number;
    i.title = fmt::format("Issue {}", number);
    i.creator_id = std::move(creator);
    i.created_at = created;
    i.closed_at = closed;
    i.comment_count = comments;
    i.labels = std::move(labels);
    i.assignee_ids = std::move(assignees);
    return i;
}

PullRequest make_pull(std::int64_t number, std::string creator, Timestamp created, std::optional<Timestamp> closed,
                      std::optional<Timestamp> merged) {
    PullRequest p;
    p.number = number;
    p.title = fmt::format("PR {}", number);
    p.creator_id = std::move(creator);
    p.created_at = created;
    p.closed_at = closed;
    p.merged_at = merged;
    return p;
}

RepoSnapshot linear_history(const std::vector<std::pair<std::string, double>> &committer_and_day) {
    RepoSnapshot s;
    s.owner = "test";
    s.name = "linear";
    s.default_branch = "main";
    for (std::size_t i = 0; i < committer_and_day.size(); ++i) {
        std::vector<std::string> parents;
        if (i > 0) parents.push_back(fmt::format("c{:03d}", i - 1));
        s.commits.push_back(make_commit(fmt::format("c{:03d}", i), parents, committer_and_day[i].first,
                                        at_days(committer_and_day[i].second)));
    }
    std::reverse(s.commits.begin(), s.commits.end());
    if (!s.commits.empty()) s.default_branch_head = s.commits.front().sha;
    return s;
}

RepoSnapshot random_snapshot(std::mt19937_64 &rng, const RandomSnapshotOptions &options) {
    auto uniform = [&](std::int64_t lo, std::int64_t hi) {
        return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
    };
    auto chance = [&](double p) { return std::bernoulli_distribution(p)(rng); };

    RepoSnapshot s;
    s.owner = "random";
    s.name = "repo";
    s.default_branch = "main";
    s.fetched_at = at_days(400);

    const auto total = static_cast<std::size_t>(uniform(0, static_cast<std::int64_t>(options.max_artifacts)));
    const auto n_commits = static_cast<std::size_t>(uniform(0, static_cast<std::int64_t>(total)));
    const auto n_issues = static_cast<std::size_t>(uniform(0, static_cast<std::int64_t>(total - n_commits)));
    const auto n_pulls = total - n_commits - n_issues;

    std::vector<std::string> committers, labels;
    for (std::size_t i = 0; i < std::max<std::size_t>(1, options.committers); ++i) committers.push_back(fmt::format("dev{}", i));
    for (std::size_t i = 0; i < options.labels; ++i) labels.push_back(fmt::format("label{}", i));
    const std::vector<std::string> paths{"src/core.cpp", "src/core.hpp", "README.md", "Makefile",
                                         "docs/Guide.MD", "lib/tool.py", "lib/util.py", "src/new.cpp"};

    auto pick = [&](const std::vector<std::string> &pool) {
        return pool[static_cast<std::size_t>(uniform(0, static_cast<std::int64_t>(pool.size()) - 1))];
    };
    auto heavy = [&]() -> std::int64_t { return chance(0.08) ? uniform(200, 2000) : uniform(0, 30); };
    auto random_labels = [&] {
        std::set<std::string> out;
        if (labels.empty()) return out;
        for (int i = 0, n = static_cast<int>(uniform(0, 2)); i < n; ++i) out.insert(pick(labels));
        return out;
    };

    const std::int64_t first_number = 1;
    const auto issue_numbers_end = first_number + static_cast<std::int64_t>(n_issues);
    const auto pull_numbers_end = issue_numbers_end + static_cast<std::int64_t>(n_pulls);

    // Commits: a main line with occasional merges and unmerged side commits.
    std::vector<std::string> main_line;
    std::vector<Commit> commits;
    for (std::size_t i = 0; i < n_commits; ++i) {
        Commit c;
        c.sha = fmt::format("{:08x}", static_cast<std::uint32_t>(uniform(0, 0xffffffff)));
        while (std::any_of(commits.begin(), commits.end(), [&](const Commit &o) { return o.sha == c.sha; })) {
            c.sha += "a";
        }
        const bool side = !main_line.empty() && chance(0.15);
        if (!main_line.empty()) c.parent_shas.push_back(main_line.back());
        if (!side && main_line.size() >= 3 && chance(0.2)) {
            c.parent_shas.push_back(main_line[static_cast<std::size_t>(uniform(0, static_cast<std::int64_t>(main_line.size()) - 2))]);
        }
        if (i == 0 && chance(0.2)) c.parent_shas.push_back("beyond-shallow-boundary");
        c.committer_id = pick(committers);
        c.author_id = chance(0.8) ? c.committer_id : pick(committers);
        // Whole hours so equal timestamps occur now and then.
        c.committer_timestamp = at_seconds(uniform(0, 24 * 60) * 3600 / (chance(0.1) ? 24 : 1));

        std::string message;
        const auto words = uniform(0, 6);
        for (std::int64_t w = 0; w < words; ++w) message += chance(0.1) ? "ünïcode " : "word ";
        if (pull_numbers_end > first_number && chance(0.5)) {
            message += fmt::format("fixes #{}", uniform(first_number, pull_numbers_end));
        }
        if (chance(0.05)) message = std::string(static_cast<std::size_t>(uniform(200, 400)), 'x');
        c.message = message;

        std::vector<std::string> used;
        for (std::int64_t f = 0, nf = uniform(0, 4); f < nf; ++f) {
            auto path = pick(paths);
            if (std::find(used.begin(), used.end(), path) != used.end()) continue;
            used.push_back(path);
            FileChange fc;
            fc.path = path;
            switch (uniform(0, 5)) {
            case 0:
                fc.change_kind = ChangeKind::added;
                fc.lines_added = heavy();
                break;
            case 1:
                fc.change_kind = ChangeKind::deleted;
                fc.lines_deleted = heavy();
                break;
            case 2: {
                auto prev = pick(paths);
                if (prev == path || std::find(used.begin(), used.end(), prev) != used.end()) {
                    fc.change_kind = ChangeKind::modified;
                } else {
                    used.push_back(prev);
                    fc.change_kind = ChangeKind::renamed;
                    fc.previous_path = prev;
                }
                fc.lines_added = heavy();
                fc.lines_deleted = heavy();
                break;
            }
            default:
                fc.change_kind = ChangeKind::modified;
                fc.lines_added = heavy();
                fc.lines_deleted = heavy();
                break;
            }
            c.file_changes.push_back(std::move(fc));
        }
        c.comment_count = chance(0.1) ? uniform(1, 20) : 0;
        if (!side) main_line.push_back(c.sha);
        commits.push_back(std::move(c));
    }
    std::reverse(commits.begin(), commits.end());
    s.commits = std::move(commits);
    s.default_branch_head = main_line.empty() ? "" : main_line.back();

    for (auto n = first_number; n < issue_numbers_end; ++n) {
        Issue i;
        i.number = n;
        i.title = std::string(static_cast<std::size_t>(uniform(1, chance(0.05) ? 300 : 60)), 't');
        i.body = std::string(static_cast<std::size_t>(uniform(0, chance(0.05) ? 5000 : 400)), 'b');
        i.creator_id = pick(committers);
        if (chance(0.6)) i.assignee_ids.insert(pick(committers));
        i.labels = random_labels();
        i.created_at = at_seconds(uniform(0, 100 * 86400));
        if (chance(0.7)) i.closed_at = i.created_at + std::chrono::seconds(heavy() * 3600);
        i.comment_count = heavy() / 3;
        s.issues.push_back(std::move(i));
    }
    for (auto n = issue_numbers_end; n < pull_numbers_end; ++n) {
        PullRequest p;
        p.number = n;
        p.title = std::string(static_cast<std::size_t>(uniform(1, 80)), 'p');
        p.body = std::string(static_cast<std::size_t>(uniform(0, 600)), 'q');
        p.creator_id = pick(committers);
        if (chance(0.5)) p.assignee_ids.insert(pick(committers));
        p.labels = random_labels();
        p.created_at = at_seconds(uniform(0, 100 * 86400));
        if (chance(0.8)) {
            p.closed_at = p.created_at + std::chrono::seconds(heavy() * 1800);
            if (chance(0.6)) p.merged_at = p.closed_at;
        }
        p.comment_count = heavy() / 4;
        p.review_comment_count = heavy() / 2;
        p.changed_files = uniform(1, 20);
        p.lines_added = heavy();
        p.lines_deleted = heavy();
        for (const auto &c : s.commits) {
            if (chance(0.1)) p.commit_shas.insert(c.sha);
        }
        s.pulls.push_back(std::move(p));
    }

    mark_external_parents(s);
    s = link_commits_to_artifacts(std::move(s));
    validate_snapshot(s);
    return s;
}

RepoSnapshot long_open_issue_fixture() {
    RepoSnapshot s;
    s.owner = "fixture";
    s.name = "durations";
    s.default_branch = "master";
    s.fetched_at = at_days(200);
    // Open durations in hours; sorted they put 21.74 h at rank 2, 4.65 d at
    // rank 4 and 16.20 d at rank 6 of nine, i.e. exactly on the quartiles.
    const std::vector<double> durations_days{0.1, 0.5, 21.74 / 24.0, 2.0, 4.65, 10.0, 16.20, 20.0, 70.0};
    std::int64_t number = 200;
    for (double d : durations_days) {
        const auto created = at_days(static_cast<double>(number - 200));
        auto issue = make_issue(number, "contributor", created, created + std::chrono::seconds(std::llround(d * kSecondsPerDay)));
        s.issues.push_back(std::move(issue));
        ++number;
    }
    return s;
}

RepoSnapshot two_branch_fixture() {
    RepoSnapshot s;
    s.owner = "fixture";
    s.name = "two-branch";
    s.default_branch = "main";
    s.fetched_at = at_days(30);
    s.commits = {
        make_commit("m2", {"m1", "f1"}, "alice", at_days(5), "Merge branch 'feature'\n\nCloses #12"),
        make_commit("s1", {"root"}, "carol", at_days(4), "fixes #7 on the side",
                    {change("docs/side.md", ChangeKind::added, 3, 0)}),
        make_commit("f1", {"root"}, "bob", at_days(3), "Feature \"quoted\" work\nsecond line\ttab #99",
                    {change("src/new_name.cpp", ChangeKind::renamed, 4, 2, "src/old_name.cpp")}),
        make_commit("m1", {"root"}, "alice", at_days(2), "Ünïcödé ✓ commit, refs #7",
                    {change("src/old_name.cpp", ChangeKind::modified, 10, 3)}),
        make_commit("root", {"before-clone"}, "alice", at_days(1), "initial",
                    {change("src/old_name.cpp", ChangeKind::added, 40, 0), change("README", ChangeKind::added, 2, 0)}),
    };
    s.issues = {make_issue(7, "dave", at_days(1), at_days(6), 3, {"bug", "wontfix"}, {"alice"}),
                make_issue(12, "erin", at_days(2), std::nullopt, 0, {}, {})};
    s.issues[0].body = "Body with \"quotes\", a backslash \\ and\nnewlines\r\n\x01 control";
    auto pr = make_pull(99, "bob", at_days(3), at_days(5), at_days(5));
    pr.commit_shas = {"f1"};
    pr.labels = {"enhancement"};
    pr.body = "emoji 😀";
    s.pulls = {pr};
    mark_external_parents(s);
    return link_commits_to_artifacts(std::move(s));
}

}  // namespace unusual::testing
