// Line-delimited snapshot persistence. The first line carries the schema
// tag, every following line is one JSON record with a "kind" field.

#include "unusual/ingest.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include <fmt/format.h>

#include "json.hpp"

namespace unusual {

using json = nlohmann::ordered_json;

ParseError::ParseError(std::size_t line, const std::string &what)
    : std::runtime_error(fmt::format("line {}: {}", line, what)), line_(line) {}

SchemaVersionError::SchemaVersionError(std::string found)
    : std::runtime_error(fmt::format("unsupported snapshot schema '{}' (expected '{}')", found, kSnapshotSchema)),
      found_(std::move(found)) {}

namespace {

json optional_time(const std::optional<Timestamp> &t) {
    return t ? json(format_timestamp(*t)) : json(nullptr);
}

json to_json(const FileChange &fc) {
    json j;
    j["path"] = fc.path;
    j["change_kind"] = change_kind_name(fc.change_kind);
    j["lines_added"] = fc.lines_added;
    j["lines_deleted"] = fc.lines_deleted;
    j["previous_path"] = fc.previous_path ? json(*fc.previous_path) : json(nullptr);
    return j;
}

json to_json(const Commit &c) {
    json j;
    j["kind"] = "commit";
    j["sha"] = c.sha;
    j["parent_shas"] = c.parent_shas;
    j["author_id"] = c.author_id;
    j["committer_id"] = c.committer_id;
    j["committer_timestamp"] = format_timestamp(c.committer_timestamp);
    j["message"] = c.message;
    j["file_changes"] = json::array();
    for (const auto &fc : c.file_changes) j["file_changes"].push_back(to_json(fc));
    j["comment_count"] = c.comment_count;
    j["linked_issue_numbers"] = c.linked_issue_numbers;
    j["linked_pr_numbers"] = c.linked_pr_numbers;
    return j;
}

json to_json(const Issue &i) {
    json j;
    j["kind"] = "issue";
    j["number"] = i.number;
    j["title"] = i.title;
    j["body"] = i.body;
    j["creator_id"] = i.creator_id;
    j["assignee_ids"] = i.assignee_ids;
    j["labels"] = i.labels;
    j["created_at"] = format_timestamp(i.created_at);
    j["closed_at"] = optional_time(i.closed_at);
    j["comment_count"] = i.comment_count;
    j["linked_default_branch_commit_shas"] = i.linked_default_branch_commit_shas;
    return j;
}

json to_json(const PullRequest &p) {
    json j;
    j["kind"] = "pull";
    j["number"] = p.number;
    j["title"] = p.title;
    j["body"] = p.body;
    j["creator_id"] = p.creator_id;
    j["assignee_ids"] = p.assignee_ids;
    j["labels"] = p.labels;
    j["created_at"] = format_timestamp(p.created_at);
    j["closed_at"] = optional_time(p.closed_at);
    j["merged_at"] = optional_time(p.merged_at);
    j["comment_count"] = p.comment_count;
    j["review_comment_count"] = p.review_comment_count;
    j["changed_files"] = p.changed_files;
    j["lines_added"] = p.lines_added;
    j["lines_deleted"] = p.lines_deleted;
    j["commit_shas"] = p.commit_shas;
    return j;
}

json meta_json(const RepoSnapshot &s) {
    json j;
    j["kind"] = "meta";
    j["owner"] = s.owner;
    j["name"] = s.name;
    j["default_branch"] = s.default_branch;
    j["default_branch_head"] = s.default_branch_head;
    j["fetched_at"] = format_timestamp(s.fetched_at);
    j["external_parent_shas"] = s.external_parent_shas;
    return j;
}

std::string dump_line(const json &j) { return j.dump(-1, ' ', false, json::error_handler_t::replace); }

/// Field access that reports the offending line on failure.
class Reader {
public:
    Reader(const json &j, std::size_t line) : j_(j), line_(line) {}

    const json &field(const char *name) const {
        auto it = j_.find(name);
        if (it == j_.end()) throw ParseError(line_, fmt::format("missing field '{}'", name));
        return *it;
    }

    template <typename T>
    T get(const char *name) const {
        try {
            return field(name).template get<T>();
        } catch (const json::exception &e) {
            throw ParseError(line_, fmt::format("field '{}': {}", name, e.what()));
        }
    }

    Timestamp time(const char *name) const {
        try {
            return parse_timestamp(get<std::string>(name));
        } catch (const std::invalid_argument &e) {
            throw ParseError(line_, fmt::format("field '{}': {}", name, e.what()));
        }
    }

    std::optional<Timestamp> optional_time(const char *name) const {
        auto it = j_.find(name);
        if (it == j_.end() || it->is_null()) return std::nullopt;
        return time(name);
    }

    std::size_t line() const { return line_; }

private:
    const json &j_;
    std::size_t line_;
};

FileChange file_change_from(const json &j, std::size_t line) {
    Reader r(j, line);
    FileChange fc;
    fc.path = r.get<std::string>("path");
    const auto kind = change_kind_from_name(r.get<std::string>("change_kind"));
    if (!kind) throw ParseError(line, "unknown change_kind");
    fc.change_kind = *kind;
    fc.lines_added = r.get<std::int64_t>("lines_added");
    fc.lines_deleted = r.get<std::int64_t>("lines_deleted");
    if (auto it = j.find("previous_path"); it != j.end() && !it->is_null()) {
        fc.previous_path = r.get<std::string>("previous_path");
    }
    return fc;
}

Commit commit_from(const json &j, std::size_t line) {
    Reader r(j, line);
    Commit c;
    c.sha = r.get<std::string>("sha");
    c.parent_shas = r.get<std::vector<std::string>>("parent_shas");
    c.author_id = r.get<std::string>("author_id");
    c.committer_id = r.get<std::string>("committer_id");
    c.committer_timestamp = r.time("committer_timestamp");
    c.message = r.get<std::string>("message");
    const auto &changes = r.field("file_changes");
    if (!changes.is_array()) throw ParseError(line, "field 'file_changes' is not an array");
    for (const auto &fc : changes) c.file_changes.push_back(file_change_from(fc, line));
    c.comment_count = r.get<std::int64_t>("comment_count");
    c.linked_issue_numbers = r.get<std::set<std::int64_t>>("linked_issue_numbers");
    c.linked_pr_numbers = r.get<std::set<std::int64_t>>("linked_pr_numbers");
    return c;
}

Issue issue_from(const json &j, std::size_t line) {
    Reader r(j, line);
    Issue i;
    i.number = r.get<std::int64_t>("number");
    i.title = r.get<std::string>("title");
    i.body = r.get<std::string>("body");
    i.creator_id = r.get<std::string>("creator_id");
    i.assignee_ids = r.get<std::set<std::string>>("assignee_ids");
    i.labels = r.get<std::set<std::string>>("labels");
    i.created_at = r.time("created_at");
    i.closed_at = r.optional_time("closed_at");
    i.comment_count = r.get<std::int64_t>("comment_count");
    i.linked_default_branch_commit_shas = r.get<std::set<std::string>>("linked_default_branch_commit_shas");
    return i;
}

PullRequest pull_from(const json &j, std::size_t line) {
    Reader r(j, line);
    PullRequest p;
    p.number = r.get<std::int64_t>("number");
    p.title = r.get<std::string>("title");
    p.body = r.get<std::string>("body");
    p.creator_id = r.get<std::string>("creator_id");
    p.assignee_ids = r.get<std::set<std::string>>("assignee_ids");
    p.labels = r.get<std::set<std::string>>("labels");
    p.created_at = r.time("created_at");
    p.closed_at = r.optional_time("closed_at");
    p.merged_at = r.optional_time("merged_at");
    p.comment_count = r.get<std::int64_t>("comment_count");
    p.review_comment_count = r.get<std::int64_t>("review_comment_count");
    p.changed_files = r.get<std::int64_t>("changed_files");
    p.lines_added = r.get<std::int64_t>("lines_added");
    p.lines_deleted = r.get<std::int64_t>("lines_deleted");
    p.commit_shas = r.get<std::set<std::string>>("commit_shas");
    return p;
}

}  // namespace

void write_snapshot(const RepoSnapshot &snapshot, std::ostream &out) {
    json header;
    header["schema"] = kSnapshotSchema;
    out << dump_line(header) << '\n';
    out << dump_line(meta_json(snapshot)) << '\n';
    for (const auto &c : snapshot.commits) out << dump_line(to_json(c)) << '\n';
    for (const auto &i : snapshot.issues) out << dump_line(to_json(i)) << '\n';
    for (const auto &p : snapshot.pulls) out << dump_line(to_json(p)) << '\n';
}

RepoSnapshot read_snapshot(std::istream &in) {
    RepoSnapshot snapshot;
    std::string text;
    std::size_t line = 0;
    bool saw_header = false;
    bool saw_meta = false;

    while (std::getline(in, text)) {
        ++line;
        if (!saw_header) {
            json header;
            try {
                header = json::parse(text);
            } catch (const json::parse_error &e) {
                throw ParseError(line, fmt::format("malformed schema header: {}", e.what()));
            }
            if (!header.is_object() || !header.contains("schema") || !header["schema"].is_string()) {
                throw ParseError(line, "first line must be a schema header");
            }
            const auto schema = header["schema"].get<std::string>();
            if (schema != kSnapshotSchema) throw SchemaVersionError(schema);
            saw_header = true;
            continue;
        }
        if (text.empty()) continue;

        json record;
        try {
            record = json::parse(text);
        } catch (const json::parse_error &e) {
            throw ParseError(line, e.what());
        }
        if (!record.is_object()) throw ParseError(line, "record is not a JSON object");
        const auto kind = Reader(record, line).get<std::string>("kind");
        if (kind == "meta") {
            if (saw_meta) throw ParseError(line, "duplicate meta record");
            Reader r(record, line);
            snapshot.owner = r.get<std::string>("owner");
            snapshot.name = r.get<std::string>("name");
            snapshot.default_branch = r.get<std::string>("default_branch");
            snapshot.default_branch_head = r.get<std::string>("default_branch_head");
            snapshot.fetched_at = r.time("fetched_at");
            snapshot.external_parent_shas = r.get<std::set<std::string>>("external_parent_shas");
            saw_meta = true;
        } else if (kind == "commit") {
            snapshot.commits.push_back(commit_from(record, line));
        } else if (kind == "issue") {
            snapshot.issues.push_back(issue_from(record, line));
        } else if (kind == "pull") {
            snapshot.pulls.push_back(pull_from(record, line));
        } else {
            throw ParseError(line, fmt::format("unknown record kind '{}'", kind));
        }
    }
    if (!saw_header) throw ParseError(1, "empty snapshot file");
    if (!saw_meta) throw ParseError(line, "snapshot has no meta record");
    try {
        validate_snapshot(snapshot);
    } catch (const InvalidSnapshot &e) {
        throw ParseError(line, e.what());
    }
    return snapshot;
}

void save_snapshot(const RepoSnapshot &snapshot, const std::filesystem::path &path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(fmt::format("cannot open '{}' for writing", path.string()));
    write_snapshot(snapshot, out);
    out.flush();
    if (!out) throw std::runtime_error(fmt::format("failed writing '{}'", path.string()));
}

RepoSnapshot load_snapshot(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(fmt::format("cannot open '{}'", path.string()));
    return read_snapshot(in);
}

std::filesystem::path snapshot_cache_path(const std::filesystem::path &cache_dir, std::string_view owner,
                                          std::string_view name) {
    return cache_dir / fmt::format("{}__{}.snapshot.jsonl", owner, name);
}

}  // namespace unusual
