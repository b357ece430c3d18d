// GitHub REST v3 ingestion: paginated listings, per-artifact detail
// requests fanned out over a small worker pool, rate-limit waits, and a
// resumable on-disk cache of every page received.

#include "unusual/ingest.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <thread>
#include <unordered_map>

#include <fmt/format.h>

#include "json.hpp"

#include "httplib.h"

namespace unusual {

using json = nlohmann::json;

IncompleteFetch::IncompleteFetch(const std::string &what, std::filesystem::path partial_cache,
                                 std::size_t cached_responses)
    : FetchError(what), partial_cache_(std::move(partial_cache)), cached_responses_(cached_responses) {}

void IngestConfig::validate() const {
    if (max_parallel_requests < 1) throw std::invalid_argument("max_parallel_requests must be >= 1");
    if (page_size < 1 || page_size > 100) throw std::invalid_argument("page_size must be in [1, 100]");
}

std::optional<std::string> token_from_environment() {
    if (const char *token = std::getenv("GITHUB_TOKEN"); token && *token) return std::string(token);
    return std::nullopt;
}

std::optional<std::string> HttpResponse::header(std::string_view name) const {
    std::string key(name);
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
    auto it = headers.find(key);
    if (it == headers.end()) return std::nullopt;
    return it->second;
}

namespace {

class HttplibTransport final : public HttpTransport {
public:
    explicit HttplibTransport(std::string base_url) : base_url_(std::move(base_url)) {}

    HttpResponse get(const std::string &target, const std::multimap<std::string, std::string> &headers) override {
        httplib::Client client(base_url_);
        client.set_connection_timeout(30);
        client.set_read_timeout(60);
        client.set_follow_location(true);
        httplib::Headers h(headers.begin(), headers.end());
        auto res = client.Get(target, h);
        if (!res) {
            throw NetworkError(fmt::format("GET {}{} failed: {}", base_url_, target, httplib::to_string(res.error())));
        }
        HttpResponse out;
        out.status = res->status;
        out.body = res->body;
        for (const auto &[k, v] : res->headers) {
            std::string key = k;
            std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
            out.headers.emplace(std::move(key), v);
        }
        return out;
    }

private:
    std::string base_url_;
};

/// Splits "https://host:port/prefix" into origin and path prefix.
std::pair<std::string, std::string> split_base_url(const std::string &url) {
    const auto scheme = url.find("://");
    const auto path_start = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (path_start == std::string::npos) return {url, ""};
    std::string prefix = url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {url.substr(0, path_start), prefix};
}

/// Strips scheme and host from an absolute URL taken from a Link header.
std::string target_of(const std::string &url) {
    const auto scheme = url.find("://");
    if (scheme == std::string::npos) return url;
    const auto path_start = url.find('/', scheme + 3);
    return path_start == std::string::npos ? "/" : url.substr(path_start);
}

std::optional<std::string> next_link(const std::optional<std::string> &link_header) {
    if (!link_header) return std::nullopt;
    std::string_view links = *link_header;
    std::size_t pos = 0;
    while (pos < links.size()) {
        auto end = links.find(',', pos);
        if (end == std::string_view::npos) end = links.size();
        auto part = links.substr(pos, end - pos);
        if (part.find("rel=\"next\"") != std::string_view::npos) {
            const auto lt = part.find('<');
            const auto gt = part.find('>', lt);
            if (lt != std::string_view::npos && gt != std::string_view::npos) {
                return std::string(part.substr(lt + 1, gt - lt - 1));
            }
        }
        pos = end + 1;
    }
    return std::nullopt;
}

std::optional<long long> header_number(const HttpResponse &r, std::string_view name) {
    auto v = r.header(name);
    if (!v) return std::nullopt;
    try {
        return std::stoll(*v);
    } catch (const std::exception &) {
        return std::nullopt;
    }
}

struct Page {
    std::string body;
    std::optional<std::string> next;
};

/// Append-only record of pages already received for one repository.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path path) : path_(std::move(path)) {
        std::ifstream in(path_, std::ios::binary);
        std::string line;
        while (std::getline(in, line)) {
            try {
                auto j = json::parse(line);
                Page page{j.at("body").get<std::string>(), std::nullopt};
                if (j.contains("next") && !j["next"].is_null()) page.next = j["next"].get<std::string>();
                pages_[j.at("target").get<std::string>()] = std::move(page);
            } catch (const json::exception &) {
                break;  // torn final write from an interrupted run
            }
        }
    }

    std::optional<Page> lookup(const std::string &target) const {
        std::scoped_lock lock(mutex_);
        auto it = pages_.find(target);
        if (it == pages_.end()) return std::nullopt;
        return it->second;
    }

    void store(const std::string &target, const Page &page) {
        std::scoped_lock lock(mutex_);
        if (!out_.is_open()) {
            std::filesystem::create_directories(path_.parent_path().empty() ? "." : path_.parent_path());
            out_.open(path_, std::ios::binary | std::ios::app);
        }
        json j{{"target", target}, {"body", page.body}, {"next", page.next ? json(*page.next) : json(nullptr)}};
        out_ << j.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
        out_.flush();
        pages_[target] = page;
    }

    std::size_t size() const {
        std::scoped_lock lock(mutex_);
        return pages_.size();
    }

    void discard() {
        std::scoped_lock lock(mutex_);
        if (out_.is_open()) out_.close();
        std::error_code ec;
        std::filesystem::remove(path_, ec);
    }

    const std::filesystem::path &path() const { return path_; }

private:
    std::filesystem::path path_;
    std::unordered_map<std::string, Page> pages_;
    std::ofstream out_;
    mutable std::mutex mutex_;
};

constexpr int kMaxAttempts = 8;

class GitHubClient {
public:
    GitHubClient(HttpTransport &transport, const IngestConfig &config, SleepFunction sleep, ResponseCache *cache)
        : transport_(transport), sleep_(std::move(sleep)), cache_(cache) {
        prefix_ = split_base_url(config.api_base_url).second;
        headers_.emplace("Accept", "application/vnd.github+json");
        headers_.emplace("User-Agent", "unusual-events");
        if (config.auth_token) headers_.emplace("Authorization", "Bearer " + *config.auth_token);
    }

    void set_cache(ResponseCache *cache) { cache_ = cache; }

    /// Fetches one page, waiting out rate limits. `path` is relative to the
    /// API root unless it is already a full target from a Link header.
    Page get(const std::string &target, bool repo_lookup = false) {
        if (cache_) {
            if (auto hit = cache_->lookup(target)) return *hit;
        }
        for (int attempt = 1;; ++attempt) {
            HttpResponse r = transport_.get(target, headers_);
            const auto remaining = header_number(r, "x-ratelimit-remaining");
            const auto retry_after = header_number(r, "retry-after");

            if (r.status == 200) {
                Page page{std::move(r.body), std::nullopt};
                if (auto next = next_link(r.header("link"))) page.next = target_of(*next);
                if (cache_) cache_->store(target, page);
                if (remaining && *remaining == 0) wait_for_reset(r);
                return page;
            }
            const bool rate_limited =
                (r.status == 403 || r.status == 429) && ((remaining && *remaining == 0) || retry_after);
            if (rate_limited) {
                if (attempt >= kMaxAttempts) throw FetchError(fmt::format("rate limit persisted for {}", target));
                wait_for_reset(r);
                continue;
            }
            if (r.status == 401 || r.status == 403) {
                throw AuthenticationError(fmt::format("GET {}: HTTP {} (authentication failed)", target, r.status));
            }
            if (r.status == 404) {
                if (repo_lookup) throw RepositoryNotFound(fmt::format("repository not found: {}", target));
                throw FetchError(fmt::format("GET {}: HTTP 404", target));
            }
            if (r.status >= 500 && attempt < kMaxAttempts) {
                sleep(std::chrono::seconds(1LL << std::min(attempt, 5)));
                continue;
            }
            throw FetchError(fmt::format("GET {}: HTTP {}", target, r.status));
        }
    }

    json get_json(const std::string &target, bool repo_lookup = false) {
        auto page = get(target, repo_lookup);
        try {
            return json::parse(page.body);
        } catch (const json::parse_error &e) {
            throw FetchError(fmt::format("GET {}: malformed JSON: {}", target, e.what()));
        }
    }

    /// Follows rel="next" links until exhausted, concatenating array pages.
    std::vector<json> get_all(const std::string &first_target) {
        std::vector<json> items;
        std::optional<std::string> target = first_target;
        while (target) {
            auto page = get(*target);
            json j;
            try {
                j = json::parse(page.body);
            } catch (const json::parse_error &e) {
                throw FetchError(fmt::format("GET {}: malformed JSON: {}", *target, e.what()));
            }
            if (!j.is_array()) throw FetchError(fmt::format("GET {}: expected a JSON array", *target));
            for (auto &item : j) items.push_back(std::move(item));
            target = page.next;
        }
        return items;
    }

    std::string api(const std::string &path) const { return prefix_ + path; }

    void sleep(std::chrono::seconds s) {
        if (sleep_) {
            sleep_(s);
        } else {
            std::this_thread::sleep_for(s);
        }
    }

private:
    void wait_for_reset(const HttpResponse &r) {
        std::chrono::seconds wait{1};
        if (auto retry = header_number(r, "retry-after")) {
            wait = std::chrono::seconds(std::max<long long>(*retry, 1));
        } else if (auto reset = header_number(r, "x-ratelimit-reset")) {
            const auto now = std::chrono::duration_cast<std::chrono::seconds>(
                                 std::chrono::system_clock::now().time_since_epoch())
                                 .count();
            wait = std::chrono::seconds(std::max<long long>(*reset - now + 1, 1));
        }
        sleep(wait);
    }

    HttpTransport &transport_;
    SleepFunction sleep_;
    ResponseCache *cache_;
    std::string prefix_;
    std::multimap<std::string, std::string> headers_;
};

/// Runs fn(i) for i in [0, n) on up to `workers` threads; rethrows the
/// first exception after all threads have stopped.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn fn) {
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        while (!failed) {
            const std::size_t i = next++;
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::scoped_lock lock(error_mutex);
                if (!error) error = std::current_exception();
                failed = true;
            }
        }
    };
    const std::size_t count = std::min(workers, n);
    std::vector<std::jthread> threads;
    for (std::size_t t = 1; t < count; ++t) threads.emplace_back(work);
    work();
    threads.clear();
    if (error) std::rethrow_exception(error);
}

std::string string_or_empty(const json &j, const char *key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return {};
    return it->get<std::string>();
}

std::string login_or(const json &user, const json &git_identity) {
    if (user.is_object()) {
        if (auto login = string_or_empty(user, "login"); !login.empty()) return login;
    }
    if (git_identity.is_object()) {
        if (auto email = string_or_empty(git_identity, "email"); !email.empty()) return email;
        return string_or_empty(git_identity, "name");
    }
    return {};
}

std::optional<Timestamp> optional_time(const json &j, const char *key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return parse_timestamp(it->get<std::string>());
}

std::set<std::string> names_of(const json &array, const char *key) {
    std::set<std::string> out;
    if (!array.is_array()) return out;
    for (const auto &item : array) {
        if (item.is_object() && item.contains(key) && item[key].is_string()) out.insert(item[key].get<std::string>());
    }
    return out;
}

FileChange file_change_from(const json &f) {
    FileChange fc;
    fc.path = f.at("filename").get<std::string>();
    fc.lines_added = f.value("additions", 0LL);
    fc.lines_deleted = f.value("deletions", 0LL);
    const auto status = f.value("status", std::string("modified"));
    if (status == "added" || status == "copied") {
        fc.change_kind = ChangeKind::added;
    } else if (status == "removed") {
        fc.change_kind = ChangeKind::deleted;
    } else if (status == "renamed" && f.contains("previous_filename") && f["previous_filename"].is_string()) {
        fc.change_kind = ChangeKind::renamed;
        fc.previous_path = f["previous_filename"].get<std::string>();
    } else {
        fc.change_kind = ChangeKind::modified;
    }
    if ((fc.change_kind == ChangeKind::added && fc.lines_deleted > 0) ||
        (fc.change_kind == ChangeKind::deleted && fc.lines_added > 0)) {
        fc.change_kind = ChangeKind::modified;
    }
    return fc;
}

std::string page_query(const IngestConfig &config) {
    std::string q = fmt::format("per_page={}", config.page_size);
    if (config.since) q += "&since=" + format_timestamp(*config.since);
    return q;
}

RepoSnapshot fetch_into(GitHubClient &client, const std::string &owner, const std::string &name,
                        const std::string &default_branch, const IngestConfig &config) {
    const std::string repo = client.api(fmt::format("/repos/{}/{}", owner, name));
    RepoSnapshot snapshot;
    snapshot.owner = owner;
    snapshot.name = name;
    snapshot.default_branch = default_branch;

    const auto commit_list =
        client.get_all(fmt::format("{}/commits?sha={}&{}", repo, default_branch, page_query(config)));
    snapshot.commits.resize(commit_list.size());
    for (std::size_t i = 0; i < commit_list.size(); ++i) {
        const auto &item = commit_list[i];
        auto &c = snapshot.commits[i];
        const auto &git = item.at("commit");
        c.sha = item.at("sha").get<std::string>();
        for (const auto &p : item.value("parents", json::array())) c.parent_shas.push_back(p.at("sha").get<std::string>());
        c.author_id = login_or(item.value("author", json()), git.value("author", json()));
        c.committer_id = login_or(item.value("committer", json()), git.value("committer", json()));
        c.committer_timestamp = parse_timestamp(git.at("committer").at("date").get<std::string>());
        c.message = string_or_empty(git, "message");
        c.comment_count = git.value("comment_count", 0LL);
    }
    if (!snapshot.commits.empty()) snapshot.default_branch_head = snapshot.commits.front().sha;

    parallel_for(snapshot.commits.size(), config.max_parallel_requests, [&](std::size_t i) {
        auto &c = snapshot.commits[i];
        std::optional<std::string> target = fmt::format("{}/commits/{}", repo, c.sha);
        while (target) {
            auto page = client.get(*target);
            const auto detail = json::parse(page.body);
            for (const auto &f : detail.value("files", json::array())) c.file_changes.push_back(file_change_from(f));
            target = page.next;
        }
    });

    for (const auto &item : client.get_all(fmt::format("{}/issues?state=all&{}", repo, page_query(config)))) {
        if (item.contains("pull_request")) continue;
        Issue issue;
        issue.number = item.at("number").get<std::int64_t>();
        issue.title = string_or_empty(item, "title");
        issue.body = string_or_empty(item, "body");
        issue.creator_id = login_or(item.value("user", json()), json());
        issue.assignee_ids = names_of(item.value("assignees", json::array()), "login");
        if (issue.assignee_ids.empty() && item.contains("assignee") && item["assignee"].is_object()) {
            issue.assignee_ids.insert(string_or_empty(item["assignee"], "login"));
        }
        issue.labels = names_of(item.value("labels", json::array()), "name");
        issue.created_at = parse_timestamp(item.at("created_at").get<std::string>());
        issue.closed_at = optional_time(item, "closed_at");
        issue.comment_count = item.value("comments", 0LL);
        snapshot.issues.push_back(std::move(issue));
    }

    const auto pull_list = client.get_all(fmt::format("{}/pulls?state=all&{}", repo, page_query(config)));
    snapshot.pulls.resize(pull_list.size());
    parallel_for(pull_list.size(), config.max_parallel_requests, [&](std::size_t i) {
        auto &p = snapshot.pulls[i];
        const auto number = pull_list[i].at("number").get<std::int64_t>();
        const auto detail = client.get_json(fmt::format("{}/pulls/{}", repo, number));
        p.number = number;
        p.title = string_or_empty(detail, "title");
        p.body = string_or_empty(detail, "body");
        p.creator_id = login_or(detail.value("user", json()), json());
        p.assignee_ids = names_of(detail.value("assignees", json::array()), "login");
        p.labels = names_of(detail.value("labels", json::array()), "name");
        p.created_at = parse_timestamp(detail.at("created_at").get<std::string>());
        p.closed_at = optional_time(detail, "closed_at");
        p.merged_at = optional_time(detail, "merged_at");
        p.comment_count = detail.value("comments", 0LL);
        p.review_comment_count = detail.value("review_comments", 0LL);
        p.changed_files = detail.value("changed_files", 0LL);
        p.lines_added = detail.value("additions", 0LL);
        p.lines_deleted = detail.value("deletions", 0LL);
        for (const auto &c :
             client.get_all(fmt::format("{}/pulls/{}/commits?per_page={}", repo, number, config.page_size))) {
            p.commit_shas.insert(c.at("sha").get<std::string>());
        }
    });

    mark_external_parents(snapshot);
    snapshot = link_commits_to_artifacts(std::move(snapshot));
    snapshot.fetched_at = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
    validate_snapshot(snapshot);
    return snapshot;
}

}  // namespace

std::unique_ptr<HttpTransport> make_http_transport(const std::string &base_url) {
    return std::make_unique<HttplibTransport>(split_base_url(base_url).first);
}

RepoSnapshot fetch_repository(const std::string &owner, const std::string &name, const IngestConfig &config) {
    auto transport = make_http_transport(config.api_base_url);
    return fetch_repository(owner, name, config, *transport);
}

RepoSnapshot fetch_repository(const std::string &owner, const std::string &name, const IngestConfig &config,
                              HttpTransport &transport, const SleepFunction &sleep) {
    config.validate();
    GitHubClient client(transport, config, sleep, nullptr);

    // Credentials and existence are checked before anything touches disk.
    const auto repo = client.get_json(client.api(fmt::format("/repos/{}/{}", owner, name)), true);
    const auto default_branch = repo.value("default_branch", std::string("master"));

    ResponseCache cache(config.cache_dir / fmt::format("{}__{}.partial.jsonl", owner, name));
    client.set_cache(&cache);
    try {
        auto snapshot = fetch_into(client, owner, name, default_branch, config);
        cache.discard();
        return snapshot;
    } catch (const IncompleteFetch &) {
        throw;
    } catch (const std::exception &e) {
        throw IncompleteFetch(fmt::format("fetch of {}/{} incomplete: {}", owner, name, e.what()), cache.path(),
                              cache.size());
    }
}

}  // namespace unusual
