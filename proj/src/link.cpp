#include "unusual/ingest.hpp"

#include <cctype>
#include <charconv>
#include <unordered_map>

namespace unusual {

namespace {

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

}  // namespace

std::vector<std::int64_t> extract_references(std::string_view message) {
    std::vector<std::int64_t> refs;
    for (std::size_t i = 0; i < message.size(); ++i) {
        if (message[i] != '#') continue;
        if (i > 0 && is_word_char(message[i - 1])) continue;
        std::size_t end = i + 1;
        while (end < message.size() && std::isdigit(static_cast<unsigned char>(message[end]))) ++end;
        if (end == i + 1) continue;
        if (end < message.size() && is_word_char(message[end])) continue;
        std::int64_t number = 0;
        auto [ptr, ec] = std::from_chars(message.data() + i + 1, message.data() + end, number);
        if (ec == std::errc{}) refs.push_back(number);
        i = end - 1;
    }
    return refs;
}

std::unordered_set<std::string> default_branch_commits(const RepoSnapshot &snapshot) {
    std::unordered_set<std::string> reachable;
    if (snapshot.commits.empty()) return reachable;

    std::unordered_map<std::string_view, const Commit *> by_sha;
    for (const auto &c : snapshot.commits) by_sha.emplace(c.sha, &c);

    const std::string &head = snapshot.default_branch_head.empty() ? snapshot.commits.front().sha
                                                                    : snapshot.default_branch_head;
    if (!by_sha.contains(head)) return reachable;

    std::vector<const Commit *> stack{by_sha.at(head)};
    reachable.insert(head);
    while (!stack.empty()) {
        const Commit *c = stack.back();
        stack.pop_back();
        for (const auto &p : c->parent_shas) {
            auto it = by_sha.find(p);
            if (it == by_sha.end()) continue;  // shallow boundary
            if (reachable.insert(p).second) stack.push_back(it->second);
        }
    }
    return reachable;
}

RepoSnapshot link_commits_to_artifacts(RepoSnapshot snapshot) {
    std::unordered_set<std::int64_t> issue_numbers;
    for (const auto &i : snapshot.issues) issue_numbers.insert(i.number);
    std::unordered_set<std::int64_t> pull_numbers;
    std::unordered_map<std::string, std::vector<std::int64_t>> pulls_by_sha;
    for (const auto &p : snapshot.pulls) {
        pull_numbers.insert(p.number);
        for (const auto &sha : p.commit_shas) pulls_by_sha[sha].push_back(p.number);
    }

    for (auto &c : snapshot.commits) {
        c.linked_issue_numbers.clear();
        c.linked_pr_numbers.clear();
        for (auto n : extract_references(c.message)) {
            if (issue_numbers.contains(n)) c.linked_issue_numbers.insert(n);
            if (pull_numbers.contains(n)) c.linked_pr_numbers.insert(n);
        }
        if (auto it = pulls_by_sha.find(c.sha); it != pulls_by_sha.end()) {
            c.linked_pr_numbers.insert(it->second.begin(), it->second.end());
        }
    }

    const auto reachable = default_branch_commits(snapshot);
    std::unordered_map<std::int64_t, Issue *> issues;
    for (auto &i : snapshot.issues) {
        i.linked_default_branch_commit_shas.clear();
        issues.emplace(i.number, &i);
    }
    for (const auto &c : snapshot.commits) {
        if (!reachable.contains(c.sha)) continue;
        for (auto n : c.linked_issue_numbers) issues.at(n)->linked_default_branch_commit_shas.insert(c.sha);
    }
    return snapshot;
}

Qualification qualifies_for_sample(std::size_t commits, std::size_t issues, std::size_t pulls,
                                   std::size_t min_commits, std::size_t min_issues_or_pulls) {
    if (commits < min_commits) return {false, "insufficient commits"};
    if (issues < min_issues_or_pulls && pulls < min_issues_or_pulls) return {false, "insufficient issues/pulls"};
    return {true, "qualifies"};
}

Qualification qualifies_for_sample(const RepoSnapshot &snapshot, std::size_t min_commits,
                                   std::size_t min_issues_or_pulls) {
    return qualifies_for_sample(snapshot.commits.size(), snapshot.issues.size(), snapshot.pulls.size(),
                                min_commits, min_issues_or_pulls);
}

}  // namespace unusual
