#include "unusual/analytics.hpp"

#include "unusual/ingest.hpp"
#include "unusual/outliers.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <unordered_map>

#include <fmt/format.h>

#include "json.hpp"

namespace unusual {

namespace {

/// Artifact identity without the file path of per-file observations.
ArtifactRef whole_artifact(const ArtifactRef &ref) { return {ref.kind, ref.id, std::nullopt}; }

std::map<ArtifactKind, std::size_t> artifact_totals(const RepoSnapshot &snapshot) {
    return {{ArtifactKind::commit, snapshot.commits.size()},
            {ArtifactKind::issue, snapshot.issues.size()},
            {ArtifactKind::pull, snapshot.pulls.size()}};
}

}  // namespace

const FrequencyRow &FrequencyReport::row(const EventTypeId &type) const {
    auto it = std::find_if(rows.begin(), rows.end(), [&](const FrequencyRow &r) { return r.type == type; });
    if (it == rows.end()) throw std::out_of_range("no frequency row for " + type.to_string());
    return *it;
}

FrequencyReport frequency_report(const std::vector<UnusualEvent> &events, const RepoSnapshot &snapshot) {
    std::map<EventTypeId, std::set<ArtifactRef, RefLess>> flagged;
    for (const auto &e : events) flagged[e.event_type].insert(whole_artifact(e.artifact_ref));

    FrequencyReport report;
    report.totals = artifact_totals(snapshot);
    for (const auto &type : all_event_types()) {
        FrequencyRow row;
        row.type = type;
        if (auto it = flagged.find(type); it != flagged.end()) row.count = it->second.size();
        const auto total = report.totals.at(type.artifact());
        if (total > 0) {
            row.fraction = static_cast<double>(row.count) / static_cast<double>(total);
            row.percentage = 100.0 * static_cast<double>(row.count) / static_cast<double>(total);
            row.percent_display = std::lround(row.percentage);
        }
        report.rows.push_back(row);
    }
    return report;
}

CoverageStats coverage_stats(const std::vector<UnusualEvent> &events, const RepoSnapshot &snapshot) {
    std::map<ArtifactRef, std::set<std::pair<EventTypeId, ContextKey>>, RefLess> ways;
    for (const auto &e : events) ways[whole_artifact(e.artifact_ref)].emplace(e.event_type, e.context);

    CoverageStats stats;
    for (const auto &[kind, total] : artifact_totals(snapshot)) stats.per_kind[kind].total = total;
    for (const auto &[ref, pairs] : ways) {
        auto &k = stats.per_kind[ref.kind];
        ++k.unusual;
        k.max_types_per_artifact = std::max(k.max_types_per_artifact, pairs.size());
        stats.max_types_per_artifact = std::max(stats.max_types_per_artifact, pairs.size());
    }
    for (auto &[kind, k] : stats.per_kind) {
        if (k.total > 0) k.fraction = static_cast<double>(k.unusual) / static_cast<double>(k.total);
    }
    return stats;
}

// ---------------------------------------------------------------------------

OddsRatioResult odds_ratio(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d) {
    if (a < 0 || b < 0 || c < 0 || d < 0) throw std::invalid_argument("odds_ratio: negative cell count");
    OddsRatioResult r{a, b, c, d};
    double fa = static_cast<double>(a), fb = static_cast<double>(b);
    double fc = static_cast<double>(c), fd = static_cast<double>(d);
    if (a == 0 || b == 0 || c == 0 || d == 0) {
        fa += 0.5;
        fb += 0.5;
        fc += 0.5;
        fd += 0.5;
        r.corrected = true;
    }
    constexpr double z = 1.959963984540054;  // 97.5th percentile of N(0, 1)
    r.odds_ratio = (fa * fd) / (fb * fc);
    const double se = std::sqrt(1.0 / fa + 1.0 / fb + 1.0 / fc + 1.0 / fd);
    const double log_or = std::log(r.odds_ratio);
    r.ci_low = std::exp(log_or - z * se);
    r.ci_high = std::exp(log_or + z * se);
    return r;
}

std::string_view outcome_name(PerceptionOutcome outcome) {
    return outcome == PerceptionOutcome::difficult ? "difficult" : "atypical";
}

namespace {

bool has_outcome(const Rating &r, PerceptionOutcome outcome) {
    return outcome == PerceptionOutcome::difficult ? r.perceived_difficult : !r.perceived_typical;
}

template <typename Include, typename Exposed>
PerceptionRow tabulate(const std::vector<Rating> &ratings, PerceptionOutcome outcome, std::string stratum,
                       Include include, Exposed exposed) {
    std::int64_t a = 0, b = 0, c = 0, d = 0;
    std::size_t n = 0;
    for (const auto &r : ratings) {
        if (!include(r)) continue;
        ++n;
        const bool e = exposed(r);
        const bool o = has_outcome(r, outcome);
        if (e && o) {
            ++a;
        } else if (e) {
            ++b;
        } else if (o) {
            ++c;
        } else {
            ++d;
        }
    }
    PerceptionRow row;
    row.outcome = outcome;
    row.stratum = std::move(stratum);
    row.result = odds_ratio(a, b, c, d);
    row.empty_stratum = n == 0;
    return row;
}

}  // namespace

std::vector<PerceptionRow> perception_analysis(const std::vector<Rating> &ratings) {
    if (ratings.empty()) throw std::invalid_argument("perception_analysis needs at least one rating");

    const auto unusual = [](const Rating &r) { return r.is_unusual; };
    std::vector<PerceptionRow> rows;
    for (auto outcome : {PerceptionOutcome::difficult, PerceptionOutcome::atypical}) {
        rows.push_back(tabulate(ratings, outcome, "all", [](const Rating &) { return true; }, unusual));
        rows.push_back(tabulate(ratings, outcome, "owned", [](const Rating &r) { return r.owned_by_rater; }, unusual));
        rows.push_back(
            tabulate(ratings, outcome, "not_owned", [](const Rating &r) { return !r.owned_by_rater; }, unusual));
        for (auto kind : {ArtifactKind::commit, ArtifactKind::issue, ArtifactKind::pull}) {
            rows.push_back(tabulate(ratings, outcome, std::string(artifact_name(kind)),
                                    [kind](const Rating &r) { return r.artifact_ref.kind == kind; }, unusual));
        }
    }

    // Per-type rows: project-context types only, compared within their kind.
    std::set<EventTypeId> seen;
    for (const auto &r : ratings) {
        for (const auto &t : r.flagged_types) {
            if (t.context() == ContextKind::project) seen.insert(t);
        }
    }
    for (auto outcome : {PerceptionOutcome::difficult, PerceptionOutcome::atypical}) {
        for (const auto &type : seen) {
            auto row = tabulate(
                ratings, outcome, type.to_string(),
                [&](const Rating &r) { return r.artifact_ref.kind == type.artifact(); },
                [&](const Rating &r) { return r.flagged_types.contains(type); });
            row.event_type = type;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------

std::vector<RankedType> usefulness_ranking(const std::map<EventTypeId, VoteCount> &votes, std::int64_t min_votes) {
    std::vector<RankedType> ranked;
    for (const auto &[type, v] : votes) {
        const auto total = v.positive + v.negative;
        if (total <= 0 || total < min_votes) continue;
        // positive / total >= 1/2 without rounding
        if (2 * v.positive < total) continue;
        ranked.push_back({type, v, static_cast<double>(v.positive) / static_cast<double>(total)});
    }
    std::sort(ranked.begin(), ranked.end(), [](const RankedType &x, const RankedType &y) {
        // Compare shares exactly via cross multiplication.
        const auto xt = x.votes.positive + x.votes.negative;
        const auto yt = y.votes.positive + y.votes.negative;
        const auto lhs = x.votes.positive * yt;
        const auto rhs = y.votes.positive * xt;
        if (lhs != rhs) return lhs > rhs;
        if (xt != yt) return xt > yt;
        return x.type < y.type;
    });
    return ranked;
}

std::map<EventTypeId, VoteCount> votes_from_ratings(const std::vector<Rating> &ratings) {
    std::map<EventTypeId, VoteCount> votes;
    for (const auto &r : ratings) {
        for (const auto &[type, useful] : r.per_type_useful) {
            auto &v = votes[type];
            (useful ? v.positive : v.negative) += 1;
        }
    }
    return votes;
}

// ---------------------------------------------------------------------------

SurveySample sample_survey_artifacts(const RepoSnapshot &snapshot, const std::vector<UnusualEvent> &events,
                                     const std::string &participant_id, std::uint64_t seed) {
    struct Candidate {
        ArtifactRef ref;
        bool own;
    };
    std::vector<Candidate> candidates;
    bool known = false;
    for (const auto &c : snapshot.commits) {
        const bool own = c.author_id == participant_id;
        known = known || own || c.committer_id == participant_id;
        candidates.push_back({{ArtifactKind::commit, c.sha, {}}, own});
    }
    for (const auto &i : snapshot.issues) {
        const bool own = i.creator_id == participant_id;
        known = known || own;
        candidates.push_back({{ArtifactKind::issue, std::to_string(i.number), {}}, own});
    }
    for (const auto &p : snapshot.pulls) {
        const bool own = p.creator_id == participant_id;
        known = known || own;
        candidates.push_back({{ArtifactKind::pull, std::to_string(p.number), {}}, own});
    }
    if (!known) throw UnknownParticipant(fmt::format("participant '{}' does not appear in the snapshot", participant_id));

    // Events grouped by artifact, then by type (first event of each type
    // in sorted order represents it).
    std::map<ArtifactRef, std::map<EventTypeId, UnusualEvent>, RefLess> by_artifact;
    for (const auto &e : events) by_artifact[whole_artifact(e.artifact_ref)].try_emplace(e.event_type, e);

    std::mt19937_64 rng(seed);
    SurveySample sample;
    sample.participant_id = participant_id;
    for (bool own : {true, false}) {
        for (bool unusual : {false, true}) {
            for (auto kind : {ArtifactKind::commit, ArtifactKind::issue, ArtifactKind::pull}) {
                std::vector<const Candidate *> pool;
                for (const auto &c : candidates) {
                    if (c.ref.kind == kind && c.own == own && by_artifact.contains(c.ref) == unusual) pool.push_back(&c);
                }
                if (pool.empty()) continue;
                std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
                SurveyItem item{{own, unusual, kind}, pool[pick(rng)]->ref, {}};
                if (unusual) {
                    std::vector<UnusualEvent> types;
                    for (const auto &[type, e] : by_artifact.at(item.artifact)) types.push_back(e);
                    if (types.size() > kMaxPresentedTypes) {
                        std::shuffle(types.begin(), types.end(), rng);
                        types.resize(kMaxPresentedTypes);
                        std::sort(types.begin(), types.end(), event_less);
                    }
                    item.presented = std::move(types);
                }
                sample.items.push_back(std::move(item));
            }
        }
    }
    std::shuffle(sample.items.begin(), sample.items.end(), rng);
    return sample;
}

// ---------------------------------------------------------------------------

namespace {

using json = nlohmann::ordered_json;

Rating rating_from(const json &j, std::size_t line) {
    auto fail = [line](const std::string &what) { return ParseError(line, what); };
    try {
        Rating r;
        const auto &ref = j.at("artifact_ref");
        const auto kind = artifact_from_name(ref.at("kind").get<std::string>());
        if (!kind) throw fail("unknown artifact kind");
        r.artifact_ref.kind = *kind;
        r.artifact_ref.id = ref.at("id").is_string() ? ref.at("id").get<std::string>()
                                                     : std::to_string(ref.at("id").get<std::int64_t>());
        if (ref.contains("path") && !ref["path"].is_null()) r.artifact_ref.path = ref["path"].get<std::string>();
        r.is_unusual = j.at("is_unusual").get<bool>();
        for (const auto &t : j.value("flagged_types", json::array())) {
            auto type = EventTypeId::parse(t.get<std::string>());
            if (!type) throw fail(fmt::format("unknown event type '{}'", t.get<std::string>()));
            r.flagged_types.insert(*type);
        }
        r.perceived_difficult = j.at("perceived_difficult").get<bool>();
        r.perceived_typical = j.at("perceived_typical").get<bool>();
        r.owned_by_rater = j.at("owned_by_rater").get<bool>();
        const auto useful_votes = j.value("per_type_useful", json::object());
        for (const auto &[name, useful] : useful_votes.items()) {
            auto type = EventTypeId::parse(name);
            if (!type) throw fail(fmt::format("unknown event type '{}'", name));
            r.per_type_useful[*type] = useful.get<bool>();
        }
        if (r.flagged_types.empty() == r.is_unusual) {
            throw fail("is_unusual must be true exactly when flagged_types is nonempty");
        }
        return r;
    } catch (const json::exception &e) {
        throw fail(e.what());
    }
}

}  // namespace

std::vector<Rating> read_ratings(std::istream &in) {
    std::vector<Rating> ratings;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(text);
        } catch (const json::parse_error &e) {
            throw ParseError(line, e.what());
        }
        ratings.push_back(rating_from(j, line));
    }
    return ratings;
}

void write_rating(const Rating &rating, std::ostream &out) {
    json j;
    json ref;
    ref["kind"] = artifact_name(rating.artifact_ref.kind);
    ref["id"] = rating.artifact_ref.id;
    if (rating.artifact_ref.path) ref["path"] = *rating.artifact_ref.path;
    j["artifact_ref"] = ref;
    j["is_unusual"] = rating.is_unusual;
    j["flagged_types"] = json::array();
    for (const auto &t : rating.flagged_types) j["flagged_types"].push_back(t.to_string());
    j["perceived_difficult"] = rating.perceived_difficult;
    j["perceived_typical"] = rating.perceived_typical;
    j["owned_by_rater"] = rating.owned_by_rater;
    j["per_type_useful"] = json::object();
    for (const auto &[t, useful] : rating.per_type_useful) j["per_type_useful"][t.to_string()] = useful;
    out << j.dump() << '\n';
}

}  // namespace unusual
