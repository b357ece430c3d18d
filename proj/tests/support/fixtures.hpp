#pragma once

// Snapshot builders shared by the unit and acceptance tests.

#include "unusual/model.hpp"

#include <random>

namespace unusual::testing {

/// 2016-01-01T00:00:00Z plus a number of seconds.
Timestamp at_seconds(std::int64_t seconds);
Timestamp at_days(double days);

FileChange change(std::string path, ChangeKind kind, std::int64_t added, std::int64_t deleted,
                  std::optional<std::string> previous = std::nullopt);

Commit make_commit(std::string sha, std::vector<std::string> parents, std::string committer, Timestamp when,
                   std::string message = {}, std::vector<FileChange> changes = {});

Issue make_issue(std::int64_t number, std::string creator, Timestamp created,
                 std::optional<Timestamp> closed = std::nullopt, std::int64_t comments = 0,
                 std::set<std::string> labels = {}, std::set<std::string> assignees = {});

PullRequest make_pull(std::int64_t number, std::string creator, Timestamp created,
                      std::optional<Timestamp> closed = std::nullopt, std::optional<Timestamp> merged = std::nullopt);

/// Linear history c0 <- c1 <- ... with the given committers and day offsets.
RepoSnapshot linear_history(const std::vector<std::pair<std::string, double>> &committer_and_day);

struct RandomSnapshotOptions {
    std::size_t max_artifacts = 50;
    std::size_t committers = 5;
    std::size_t labels = 4;
};

/// Random but valid, linked snapshot.
RepoSnapshot random_snapshot(std::mt19937_64 &rng, const RandomSnapshotOptions &options = {});

/// Issues whose open durations reproduce a known quartile structure plus
/// one 70-day issue.
RepoSnapshot long_open_issue_fixture();

/// Two branches off a common root; the side branch is never merged.
///
///   root <- m1 <- m2 (head, merge of m1 and f1)
///      \        /
///       f1 ----       s1 (side, unmerged)
///
/// Carries unicode, quotes, control characters, a rename and a commit whose
/// parent lies beyond the shallow boundary.
RepoSnapshot two_branch_fixture();

}  // namespace unusual::testing
