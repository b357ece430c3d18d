#pragma once

#include "unusual/model.hpp"

#include <unordered_set>

namespace unusual {

/// Churn split of one file change. Paired add/delete lines count as
/// modified: modified = min(added, deleted), the remainder stays as pure
/// additions or deletions.
struct LocSplit {
    std::int64_t added = 0;
    std::int64_t deleted = 0;
    std::int64_t modified = 0;
};

LocSplit split_loc(const FileChange &change);

/// Commit indices ordered by (committer timestamp, sha).
std::vector<std::size_t> chronological_order(const RepoSnapshot &snapshot);

/// One (commit, file change) pair. `identity` is the path the file had when
/// it first appeared, so a file keeps its identity across renames. A path
/// that is reused after its file was renamed away gets a "~N" suffix.
struct FileTouch {
    std::size_t commit_index = 0;
    std::size_t change_index = 0;
    std::string identity;
};

/// All file touches in chronological commit order.
std::vector<FileTouch> file_touches(const RepoSnapshot &snapshot);

/// Lower-cased extension after the last dot of the file name, "<none>" if
/// there is none.
std::string file_type_of(std::string_view path);

std::vector<Observation> commit_observations(const RepoSnapshot &snapshot);
std::vector<Observation> per_file_observations(const RepoSnapshot &snapshot);
std::vector<Observation> issue_observations(const RepoSnapshot &snapshot);
std::vector<Observation> pull_observations(const RepoSnapshot &snapshot);

/// Gaps in days between consecutive instants of an already sorted sequence.
std::vector<double> consecutive_gaps(const std::vector<Timestamp> &sorted);

}  // namespace unusual
