#pragma once

#include "unusual/model.hpp"

#include <chrono>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <unordered_set>

namespace unusual {

inline constexpr std::string_view kSnapshotSchema = "unusual-events/1";

// ---------------------------------------------------------------------------
// Errors

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string &what);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class SchemaVersionError : public std::runtime_error {
public:
    explicit SchemaVersionError(std::string found);
    const std::string &found() const { return found_; }

private:
    std::string found_;
};

class FetchError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class AuthenticationError : public FetchError {
public:
    using FetchError::FetchError;
};

class NetworkError : public FetchError {
public:
    using FetchError::FetchError;
};

class RepositoryNotFound : public FetchError {
public:
    using FetchError::FetchError;
};

/// A fetch that stopped part-way. Responses received so far are kept in
/// `partial_cache`; calling fetch_repository again with the same cache_dir
/// resumes from there.
class IncompleteFetch : public FetchError {
public:
    IncompleteFetch(const std::string &what, std::filesystem::path partial_cache, std::size_t cached_responses);
    const std::filesystem::path &partial_cache() const { return partial_cache_; }
    std::size_t cached_responses() const { return cached_responses_; }

private:
    std::filesystem::path partial_cache_;
    std::size_t cached_responses_;
};

// ---------------------------------------------------------------------------
// Persistence

void write_snapshot(const RepoSnapshot &snapshot, std::ostream &out);
RepoSnapshot read_snapshot(std::istream &in);
void save_snapshot(const RepoSnapshot &snapshot, const std::filesystem::path &path);
RepoSnapshot load_snapshot(const std::filesystem::path &path);

/// `<cache_dir>/<owner>__<name>.snapshot.jsonl`
std::filesystem::path snapshot_cache_path(const std::filesystem::path &cache_dir, std::string_view owner,
                                          std::string_view name);

// ---------------------------------------------------------------------------
// Sampling gate

struct Qualification {
    bool qualifies = false;
    std::string reason;
};

Qualification qualifies_for_sample(const RepoSnapshot &snapshot, std::size_t min_commits = 500,
                                   std::size_t min_issues_or_pulls = 100);
Qualification qualifies_for_sample(std::size_t commits, std::size_t issues, std::size_t pulls,
                                   std::size_t min_commits = 500, std::size_t min_issues_or_pulls = 100);

// ---------------------------------------------------------------------------
// Linking

/// Issue/PR numbers referenced as "#N" (word-boundary delimited).
std::vector<std::int64_t> extract_references(std::string_view message);

/// Shas reachable from the default branch head through parent links.
std::unordered_set<std::string> default_branch_commits(const RepoSnapshot &snapshot);

/// Recomputes every commit's linked issue/PR sets and every issue's
/// default-branch commit set from messages and PR commit listings.
RepoSnapshot link_commits_to_artifacts(RepoSnapshot snapshot);

// ---------------------------------------------------------------------------
// Fetching

struct IngestConfig {
    std::optional<std::string> auth_token;
    std::size_t max_parallel_requests = 4;
    std::size_t page_size = 100;
    std::optional<Timestamp> since;
    std::filesystem::path cache_dir = ".";
    std::string api_base_url = "https://api.github.com";

    /// Throws std::invalid_argument on out-of-range fields.
    void validate() const;
};

/// Reads the token from GITHUB_TOKEN when present.
std::optional<std::string> token_from_environment();

struct HttpResponse {
    int status = 0;
    std::string body;
    std::multimap<std::string, std::string> headers;  // lower-cased names

    std::optional<std::string> header(std::string_view name) const;
};

/// Minimal GET transport so the client can be pointed at fixtures.
class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    /// `target` is a path plus query, e.g. "/repos/o/n/commits?page=2".
    /// Throws NetworkError when no response could be obtained.
    virtual HttpResponse get(const std::string &target, const std::multimap<std::string, std::string> &headers) = 0;
};

/// cpp-httplib backed transport for `base_url` (http or https).
std::unique_ptr<HttpTransport> make_http_transport(const std::string &base_url);

using SleepFunction = std::function<void(std::chrono::seconds)>;

/// Fetches one repository. Throws AuthenticationError, RepositoryNotFound,
/// NetworkError before anything is cached, or IncompleteFetch afterwards.
RepoSnapshot fetch_repository(const std::string &owner, const std::string &name, const IngestConfig &config);
RepoSnapshot fetch_repository(const std::string &owner, const std::string &name, const IngestConfig &config,
                              HttpTransport &transport, const SleepFunction &sleep = {});

}  // namespace unusual
