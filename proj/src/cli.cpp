#include "unusual/cli.hpp"

#include "unusual/ingest.hpp"
#include "unusual/outliers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"

namespace unusual {

using ojson = nlohmann::ordered_json;

std::string format_statistic(double value) { return fmt::format("{:.1f}", value); }

std::string format_observed(double value) {
    if (std::isfinite(value) && std::floor(value) == value && std::fabs(value) < 1e15) {
        return fmt::format("{:.0f}", value);
    }
    return format_statistic(value);
}

std::string render_event_message(const UnusualEvent &event) {
    const auto kind = event.event_type.artifact();
    return fmt::format(
        "This {} is an outlier in terms of {} with a value of {}. Most {} with these characteristics have values "
        "between {} and {} with a median of {}.",
        artifact_display_name(kind), metric_display_name(event.event_type.metric()), format_observed(event.value),
        artifact_display_plural(kind), format_statistic(event.summary.q1), format_statistic(event.summary.q3),
        format_statistic(event.summary.median));
}

namespace {

ojson ref_json(const ArtifactRef &ref) {
    ojson j;
    j["kind"] = artifact_name(ref.kind);
    j["id"] = ref.id;
    if (ref.path) j["path"] = *ref.path;
    return j;
}

ojson event_json(const UnusualEvent &e) {
    ojson j;
    j["artifact"] = ref_json(e.artifact_ref);
    j["metric"] = metric_name(e.event_type.metric());
    j["context"] = {{"kind", context_name(e.context.kind())}, {"discriminators", e.context.discriminators()}};
    j["value"] = e.value;
    j["direction"] = direction_name(e.direction);
    j["summary"] = {{"n", e.summary.n},
                    {"q1", e.summary.q1},
                    {"median", e.summary.median},
                    {"q3", e.summary.q3},
                    {"iqr", e.summary.iqr},
                    {"lower_fence", e.summary.lower_fence},
                    {"upper_fence", e.summary.upper_fence}};
    j["message"] = render_event_message(e);
    return j;
}

std::string dump(const ojson &j) { return j.dump(-1, ' ', false, ojson::error_handler_t::replace); }

std::string artifact_label(const ArtifactRef &ref) {
    if (ref.kind == ArtifactKind::commit) return fmt::format("commit {}", ref.id);
    return fmt::format("{} #{}", artifact_display_name(ref.kind), ref.id);
}

}  // namespace

std::string event_to_json(const UnusualEvent &event) { return dump(event_json(event)); }

UnusualEvent event_from_json(const std::string &line) {
    try {
        const auto j = ojson::parse(line);
        UnusualEvent e;
        const auto &a = j.at("artifact");
        const auto kind = artifact_from_name(a.at("kind").get<std::string>());
        if (!kind) throw std::invalid_argument("unknown artifact kind");
        e.artifact_ref.kind = *kind;
        e.artifact_ref.id = a.at("id").get<std::string>();
        if (a.contains("path")) e.artifact_ref.path = a["path"].get<std::string>();
        const auto metric = metric_from_name(*kind, j.at("metric").get<std::string>());
        const auto context = context_from_name(j.at("context").at("kind").get<std::string>());
        if (!metric || !context) throw std::invalid_argument("unknown metric or context");
        const auto type = EventTypeId::make(*metric, *context);
        if (!type) throw std::invalid_argument("invalid metric/context combination");
        e.event_type = *type;
        e.context = ContextKey(*context, j.at("context").at("discriminators").get<std::vector<std::string>>());
        e.value = j.at("value").get<double>();
        const auto direction = j.at("direction").get<std::string>();
        if (direction != "high" && direction != "low") throw std::invalid_argument("bad direction");
        e.direction = direction == "high" ? Direction::high : Direction::low;
        const auto &s = j.at("summary");
        e.summary = {s.at("n").get<std::size_t>(),  s.at("q1").get<double>(),  s.at("median").get<double>(),
                     s.at("q3").get<double>(),      s.at("iqr").get<double>(), s.at("lower_fence").get<double>(),
                     s.at("upper_fence").get<double>()};
        return e;
    } catch (const ojson::exception &ex) {
        throw std::invalid_argument(ex.what());
    }
}

std::vector<FeedEntry> build_feed(const std::vector<UnusualEvent> &events) {
    std::map<ArtifactRef, std::vector<UnusualEvent>, RefLess> grouped;
    for (const auto &e : events) grouped[{e.artifact_ref.kind, e.artifact_ref.id, {}}].push_back(e);
    std::vector<FeedEntry> feed;
    for (auto &[ref, list] : grouped) {
        std::sort(list.begin(), list.end(), event_less);
        FeedEntry entry{ref, std::move(list), {}};
        for (const auto &e : entry.events) entry.messages.push_back(render_event_message(e));
        feed.push_back(std::move(entry));
    }
    return feed;
}

void print_feed_text(const std::vector<FeedEntry> &feed, std::ostream &out) {
    for (const auto &entry : feed) {
        out << artifact_label(entry.artifact) << '\n';
        for (std::size_t i = 0; i < entry.events.size(); ++i) {
            const auto &e = entry.events[i];
            std::string where = e.context.to_string();
            if (e.artifact_ref.path) where += " @ " + *e.artifact_ref.path;
            out << "  - [" << where << "] " << entry.messages[i] << '\n';
        }
    }
}

void print_feed_json(const std::vector<FeedEntry> &feed, std::ostream &out) {
    for (const auto &entry : feed) {
        ojson j;
        j["artifact"] = ref_json(entry.artifact);
        j["events"] = ojson::array();
        for (const auto &e : entry.events) j["events"].push_back(event_json(e));
        out << dump(j) << '\n';
    }
}

void print_report_text(const FrequencyReport &report, const CoverageStats &coverage, std::ostream &out) {
    for (auto kind : {ArtifactKind::commit, ArtifactKind::issue, ArtifactKind::pull}) {
        std::vector<ContextKind> contexts;
        std::vector<MetricKind> metrics;
        for (const auto &row : report.rows) {
            if (row.type.artifact() != kind) continue;
            if (std::find(contexts.begin(), contexts.end(), row.type.context()) == contexts.end()) {
                contexts.push_back(row.type.context());
            }
            if (std::find(metrics.begin(), metrics.end(), row.type.metric()) == metrics.end()) {
                metrics.push_back(row.type.metric());
            }
        }
        std::sort(contexts.begin(), contexts.end());

        out << fmt::format("Unusual {} ({} total)\n", artifact_display_plural(kind), report.totals.at(kind));
        out << fmt::format("{:<32}", "");
        for (auto c : contexts) out << fmt::format("{:>20}", context_name(c));
        out << '\n';
        for (auto m : metrics) {
            out << fmt::format("{:<32}", metric_display_name(m));
            for (auto c : contexts) {
                auto type = EventTypeId::make(m, c);
                if (!type) {
                    out << fmt::format("{:>20}", "-");
                    continue;
                }
                const auto &row = report.row(*type);
                out << fmt::format("{:>20}", fmt::format("{} ({}%)", row.count, row.percent_display));
            }
            out << '\n';
        }
        out << '\n';
    }
    out << "Coverage\n";
    for (const auto &[kind, k] : coverage.per_kind) {
        out << fmt::format("  {:<14} {} of {} unusual in at least one way ({:.2f}%), max {} types per artifact\n",
                           artifact_display_plural(kind), k.unusual, k.total, 100.0 * k.fraction,
                           k.max_types_per_artifact);
    }
    out << fmt::format("  max event types per artifact: {}\n", coverage.max_types_per_artifact);
}

void print_report_json(const FrequencyReport &report, const CoverageStats &coverage, std::ostream &out) {
    ojson j;
    j["totals"] = ojson::object();
    for (const auto &[kind, total] : report.totals) j["totals"][std::string(artifact_name(kind))] = total;
    j["rows"] = ojson::array();
    for (const auto &row : report.rows) {
        j["rows"].push_back({{"type", row.type.to_string()},
                             {"count", row.count},
                             {"fraction", row.fraction},
                             {"percentage", row.percentage},
                             {"percent_display", row.percent_display}});
    }
    ojson cov;
    for (const auto &[kind, k] : coverage.per_kind) {
        cov[std::string(artifact_name(kind))] = {{"unusual", k.unusual},
                                                 {"total", k.total},
                                                 {"fraction", k.fraction},
                                                 {"max_types_per_artifact", k.max_types_per_artifact}};
    }
    cov["max_types_per_artifact"] = coverage.max_types_per_artifact;
    j["coverage"] = cov;
    out << dump(j) << '\n';
}

void print_perception_text(const std::vector<PerceptionRow> &rows, std::ostream &out) {
    out << fmt::format("{:<10} {:<36} {:>5} {:>5} {:>5} {:>5} {:>9} {:>9} {:>9}  {}\n", "outcome", "stratum", "a",
                       "b", "c", "d", "OR", "CI low", "CI high", "flags");
    for (const auto &row : rows) {
        std::string flags;
        if (row.result.corrected) flags += "corrected";
        if (row.empty_stratum) flags += flags.empty() ? "empty" : ",empty";
        const auto &r = row.result;
        out << fmt::format("{:<10} {:<36} {:>5} {:>5} {:>5} {:>5} {:>9.2f} {:>9.2f} {:>9.2f}  {}\n",
                           outcome_name(row.outcome), row.stratum, r.a, r.b, r.c, r.d, r.odds_ratio, r.ci_low,
                           r.ci_high, flags);
    }
}

void print_perception_json(const std::vector<PerceptionRow> &rows, std::ostream &out) {
    for (const auto &row : rows) {
        const auto &r = row.result;
        ojson j{{"outcome", outcome_name(row.outcome)},
                {"stratum", row.stratum},
                {"a", r.a},
                {"b", r.b},
                {"c", r.c},
                {"d", r.d},
                {"odds_ratio", r.odds_ratio},
                {"ci_low", r.ci_low},
                {"ci_high", r.ci_high},
                {"corrected", r.corrected},
                {"empty_stratum", row.empty_stratum}};
        out << dump(j) << '\n';
    }
}

// ---------------------------------------------------------------------------

namespace {

/// Raised for problems with the data a command was pointed at.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DetectorFlags {
    double k = 3.0;
    std::size_t min_group_size = 10;
    bool useful_only = false;
    std::vector<std::string> types;
    std::size_t threads = 1;

    void attach(CLI::App *cmd) {
        cmd->add_option("--k", k, "Fence multiplier (values beyond k*IQR from the quartiles are flagged)")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--min-group-size", min_group_size, "Smallest context group that is evaluated")
            ->check(CLI::Range(std::size_t{2}, std::numeric_limits<std::size_t>::max()));
        cmd->add_flag("--useful-only", useful_only, "Only the six event types rated most useful");
        cmd->add_option("--types", types, "Comma-separated event types, e.g. commit/loc_added/project")
            ->delimiter(',');
        cmd->add_option("--threads", threads, "Worker threads for detection")->check(CLI::PositiveNumber);
    }

    DetectorConfig config() const {
        DetectorConfig c;
        c.k = k;
        c.min_group_size = min_group_size;
        c.useful_only = useful_only;
        c.threads = threads;
        for (const auto &t : types) {
            auto id = EventTypeId::parse(t);
            if (!id) throw CLI::ValidationError("--types", "unknown event type '" + t + "'");
            c.enabled_event_types.push_back(*id);
        }
        return c;
    }
};

RepoSnapshot load_for_cli(const std::string &path) {
    try {
        return load_snapshot(path);
    } catch (const ParseError &e) {
        throw DataError(fmt::format("{}: {}", path, e.what()));
    } catch (const SchemaVersionError &e) {
        throw DataError(fmt::format("{}: {}", path, e.what()));
    }
}

std::vector<Rating> load_ratings(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(fmt::format("cannot open ratings file '{}'", path));
    try {
        return read_ratings(in);
    } catch (const ParseError &e) {
        throw DataError(fmt::format("{}: malformed ratings: {}", path, e.what()));
    }
}

}  // namespace

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"Detect unusual commits, issues and pull requests in GitHub repositories", "unusual-events"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    // ingest
    auto *ingest = app.add_subcommand("ingest", "Fetch a repository from the GitHub API into the snapshot cache");
    std::string slug;
    std::string token;
    std::string cache_dir = ".";
    std::string api_url = "https://api.github.com";
    std::string since;
    std::size_t page_size = 100;
    std::size_t parallel = 4;
    std::size_t min_commits = 500;
    std::size_t min_issues_or_pulls = 100;
    ingest->add_option("repository", slug, "owner/name")->required();
    ingest->add_option("--token", token, "API token (overrides GITHUB_TOKEN)");
    ingest->add_option("--cache-dir", cache_dir, "Directory for snapshot files");
    ingest->add_option("--api-url", api_url, "API root URL");
    ingest->add_option("--since", since, "Only commits after this ISO-8601 instant");
    ingest->add_option("--page-size", page_size)->check(CLI::Range(1, 100));
    ingest->add_option("--parallel", parallel, "Concurrent requests")->check(CLI::PositiveNumber);
    ingest->add_option("--min-commits", min_commits);
    ingest->add_option("--min-issues-or-pulls", min_issues_or_pulls);

    // detect
    auto *detect = app.add_subcommand("detect", "Print unusual events as JSON lines");
    std::string snapshot_path;
    DetectorFlags detect_flags;
    detect->add_option("snapshot", snapshot_path)->required()->check(CLI::ExistingFile);
    detect_flags.attach(detect);

    // report
    auto *report = app.add_subcommand("report", "Frequency of every event type plus coverage");
    std::string report_format = "text";
    DetectorFlags report_flags;
    report->add_option("snapshot", snapshot_path)->required()->check(CLI::ExistingFile);
    report->add_option("--format", report_format)->check(CLI::IsMember({"text", "json"}));
    report_flags.attach(report);

    // feed
    auto *feed = app.add_subcommand("feed", "Unusual events grouped per artifact, rendered as notifications");
    std::string feed_format = "text";
    DetectorFlags feed_flags;
    feed->add_option("snapshot", snapshot_path)->required()->check(CLI::ExistingFile);
    feed->add_option("--format", feed_format)->check(CLI::IsMember({"text", "json"}));
    feed_flags.attach(feed);

    // survey
    auto *survey = app.add_subcommand("survey", "Sample up to 12 artifacts for one participant");
    std::string participant;
    std::uint64_t seed = 0;
    std::string survey_format = "text";
    DetectorFlags survey_flags;
    survey->add_option("snapshot", snapshot_path)->required()->check(CLI::ExistingFile);
    survey->add_option("--participant", participant)->required();
    survey->add_option("--seed", seed)->required();
    survey->add_option("--format", survey_format)->check(CLI::IsMember({"text", "json"}));
    survey_flags.attach(survey);

    // odds
    auto *odds = app.add_subcommand("odds", "Odds ratios of perceived difficulty and atypicality");
    std::string ratings_path;
    std::string odds_format = "text";
    odds->add_option("ratings", ratings_path)->required()->check(CLI::ExistingFile);
    odds->add_option("--format", odds_format)->check(CLI::IsMember({"text", "json"}));

    // rank
    auto *rank = app.add_subcommand("rank", "Event types rated useful at least half the time");
    std::int64_t min_votes = 6;
    rank->add_option("ratings", ratings_path)->required()->check(CLI::ExistingFile);
    rank->add_option("--min-votes", min_votes)->check(CLI::PositiveNumber);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (ingest->parsed()) {
            const auto slash = slug.find('/');
            if (slash == std::string::npos || slash == 0 || slash + 1 == slug.size()) {
                err << "error: repository must be given as owner/name\n";
                return kExitUsage;
            }
            IngestConfig config;
            config.auth_token = token.empty() ? token_from_environment() : std::optional<std::string>(token);
            config.cache_dir = cache_dir;
            config.api_base_url = api_url;
            config.page_size = page_size;
            config.max_parallel_requests = parallel;
            if (!since.empty()) {
                try {
                    config.since = parse_timestamp(since);
                } catch (const std::invalid_argument &e) {
                    err << "error: --since: " << e.what() << '\n';
                    return kExitUsage;
                }
            }
            const auto owner = slug.substr(0, slash);
            const auto name = slug.substr(slash + 1);
            RepoSnapshot snapshot;
            try {
                snapshot = fetch_repository(owner, name, config);
            } catch (const IncompleteFetch &e) {
                err << "error: " << e.what() << "\n  partial cache kept at " << e.partial_cache().string() << " ("
                    << e.cached_responses() << " responses); rerun to resume\n";
                return kExitData;
            } catch (const FetchError &e) {
                err << "error: " << e.what() << '\n';
                return kExitData;
            }
            const auto path = snapshot_cache_path(config.cache_dir, owner, name);
            save_snapshot(snapshot, path);
            const auto verdict = qualifies_for_sample(snapshot, min_commits, min_issues_or_pulls);
            out << fmt::format("{}: {} commits, {} issues, {} pull requests\n", path.string(), snapshot.commits.size(),
                               snapshot.issues.size(), snapshot.pulls.size());
            out << fmt::format("qualifies: {} ({})\n", verdict.qualifies ? "yes" : "no", verdict.reason);
            return kExitOk;
        }

        if (detect->parsed()) {
            const auto config = detect_flags.config();
            const auto snapshot = load_for_cli(snapshot_path);
            for (const auto &e : detect_all(snapshot, config)) out << event_to_json(e) << '\n';
            return kExitOk;
        }

        if (report->parsed()) {
            const auto config = report_flags.config();
            const auto snapshot = load_for_cli(snapshot_path);
            const auto events = detect_all(snapshot, config);
            const auto freq = frequency_report(events, snapshot);
            const auto cov = coverage_stats(events, snapshot);
            if (report_format == "json") {
                print_report_json(freq, cov, out);
            } else {
                print_report_text(freq, cov, out);
            }
            return kExitOk;
        }

        if (feed->parsed()) {
            const auto config = feed_flags.config();
            const auto snapshot = load_for_cli(snapshot_path);
            const auto entries = build_feed(detect_all(snapshot, config));
            if (feed_format == "json") {
                print_feed_json(entries, out);
            } else {
                print_feed_text(entries, out);
            }
            return kExitOk;
        }

        if (survey->parsed()) {
            const auto config = survey_flags.config();
            const auto snapshot = load_for_cli(snapshot_path);
            const auto events = detect_all(snapshot, config);
            SurveySample sample;
            try {
                sample = sample_survey_artifacts(snapshot, events, participant, seed);
            } catch (const UnknownParticipant &e) {
                throw DataError(e.what());
            }
            if (survey_format == "json") {
                for (const auto &item : sample.items) {
                    ojson j;
                    j["cell"] = {{"own", item.cell.own},
                                 {"unusual", item.cell.unusual},
                                 {"kind", artifact_name(item.cell.kind)}};
                    j["artifact"] = ref_json(item.artifact);
                    j["events"] = ojson::array();
                    for (const auto &e : item.presented) j["events"].push_back(event_json(e));
                    out << dump(j) << '\n';
                }
            } else {
                out << fmt::format("Survey for {} ({} artifacts)\n", sample.participant_id, sample.items.size());
                for (const auto &item : sample.items) {
                    out << fmt::format("[{}, {}] {}\n", item.cell.own ? "own" : "other",
                                       item.cell.unusual ? "unusual" : "regular", artifact_label(item.artifact));
                    for (const auto &e : item.presented) out << "  - " << render_event_message(e) << '\n';
                }
            }
            return kExitOk;
        }

        if (odds->parsed()) {
            const auto ratings = load_ratings(ratings_path);
            if (ratings.empty()) throw DataError(fmt::format("{}: no ratings", ratings_path));
            const auto rows = perception_analysis(ratings);
            if (odds_format == "json") {
                print_perception_json(rows, out);
            } else {
                print_perception_text(rows, out);
            }
            return kExitOk;
        }

        if (rank->parsed()) {
            const auto ratings = load_ratings(ratings_path);
            for (const auto &r : usefulness_ranking(votes_from_ratings(ratings), min_votes)) {
                out << fmt::format("{:<45} {:>4}/{:<4} {:>5.1f}%\n", r.type.to_string(), r.votes.positive,
                                   r.votes.positive + r.votes.negative, 100.0 * r.share);
            }
            return kExitOk;
        }
    } catch (const CLI::ValidationError &e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const DataError &e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}

}  // namespace unusual
