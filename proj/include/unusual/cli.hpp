#pragma once

#include "unusual/analytics.hpp"
#include "unusual/model.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace unusual {

/// Quartiles and medians always carry one decimal ("2.0", "13.0").
std::string format_statistic(double value);
/// Whole observed values print without decimals ("72"), others with one.
std::string format_observed(double value);

/// "This pull request is an outlier in terms of number of changed files with
/// a value of 72. Most pull requests with these characteristics have values
/// between 2.0 and 13.0 with a median of 6.0."
std::string render_event_message(const UnusualEvent &event);

/// One JSON object, stable field order, no trailing newline.
std::string event_to_json(const UnusualEvent &event);
/// Inverse of event_to_json; throws std::invalid_argument on bad input.
UnusualEvent event_from_json(const std::string &line);

struct FeedEntry {
    ArtifactRef artifact;
    std::vector<UnusualEvent> events;
    std::vector<std::string> messages;
};

/// One entry per artifact, ordered by artifact kind then identifier.
std::vector<FeedEntry> build_feed(const std::vector<UnusualEvent> &events);

void print_feed_text(const std::vector<FeedEntry> &feed, std::ostream &out);
void print_feed_json(const std::vector<FeedEntry> &feed, std::ostream &out);
void print_report_text(const FrequencyReport &report, const CoverageStats &coverage, std::ostream &out);
void print_report_json(const FrequencyReport &report, const CoverageStats &coverage, std::ostream &out);
void print_perception_text(const std::vector<PerceptionRow> &rows, std::ostream &out);
void print_perception_json(const std::vector<PerceptionRow> &rows, std::ostream &out);

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2 };

/// Entry point of the command-line tool. `args` excludes the program name.
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace unusual
