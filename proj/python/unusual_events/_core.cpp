#include "unusual/analytics.hpp"
#include "unusual/cli.hpp"
#include "unusual/ingest.hpp"
#include "unusual/outliers.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace unusual;

namespace {

std::vector<std::string> type_names(const std::vector<EventTypeId> &types) {
    std::vector<std::string> out;
    out.reserve(types.size());
    for (const auto &t : types) out.push_back(t.to_string());
    return out;
}

std::vector<UnusualEvent> detect(const RepoSnapshot &snapshot, double k, std::size_t min_group_size, bool useful_only,
                                 const std::vector<std::string> &types, std::size_t threads) {
    DetectorConfig config;
    config.k = k;
    config.min_group_size = min_group_size;
    config.useful_only = useful_only;
    config.threads = threads;
    for (const auto &name : types) {
        auto id = EventTypeId::parse(name);
        if (!id) throw py::value_error("unknown event type '" + name + "'");
        config.enabled_event_types.push_back(*id);
    }
    py::gil_scoped_release release;
    return detect_all(snapshot, config);
}

py::tuple cli(const std::vector<std::string> &args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Bindings for the unusual-events core library";
    m.attr("__version__") = "0.1.0";

    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<SchemaVersionError>(m, "SchemaVersionError", PyExc_ValueError);

    py::class_<RepoSnapshot>(m, "Snapshot")
        .def_readonly("owner", &RepoSnapshot::owner)
        .def_readonly("name", &RepoSnapshot::name)
        .def_readonly("default_branch", &RepoSnapshot::default_branch)
        .def_property_readonly("commit_count", [](const RepoSnapshot &s) { return s.commits.size(); })
        .def_property_readonly("issue_count", [](const RepoSnapshot &s) { return s.issues.size(); })
        .def_property_readonly("pull_count", [](const RepoSnapshot &s) { return s.pulls.size(); })
        .def("__repr__", [](const RepoSnapshot &s) {
            return "<Snapshot " + s.owner + "/" + s.name + " commits=" + std::to_string(s.commits.size()) + ">";
        });

    py::class_<DistributionSummary>(m, "Summary")
        .def_readonly("n", &DistributionSummary::n)
        .def_readonly("q1", &DistributionSummary::q1)
        .def_readonly("median", &DistributionSummary::median)
        .def_readonly("q3", &DistributionSummary::q3)
        .def_readonly("iqr", &DistributionSummary::iqr)
        .def_readonly("lower_fence", &DistributionSummary::lower_fence)
        .def_readonly("upper_fence", &DistributionSummary::upper_fence);

    py::class_<UnusualEvent>(m, "Event")
        .def_property_readonly("artifact_kind", [](const UnusualEvent &e) { return std::string(artifact_name(e.artifact_ref.kind)); })
        .def_property_readonly("artifact_id", [](const UnusualEvent &e) { return e.artifact_ref.id; })
        .def_property_readonly("path", [](const UnusualEvent &e) { return e.artifact_ref.path; })
        .def_property_readonly("event_type", [](const UnusualEvent &e) { return e.event_type.to_string(); })
        .def_property_readonly("context", [](const UnusualEvent &e) { return e.context.to_string(); })
        .def_readonly("value", &UnusualEvent::value)
        .def_readonly("summary", &UnusualEvent::summary)
        .def_property_readonly("direction", [](const UnusualEvent &e) { return e.direction == Direction::high ? "high" : "low"; })
        .def("message", &render_event_message)
        .def("to_json", &event_to_json)
        .def_static("from_json", [](const std::string &line) {
            try {
                return event_from_json(line);
            } catch (const std::invalid_argument &e) {
                throw py::value_error(e.what());
            }
        })
        .def("__eq__", [](const UnusualEvent &a, const UnusualEvent &b) { return a == b; })
        .def("__repr__", [](const UnusualEvent &e) {
            return "<Event " + e.event_type.to_string() + " " + e.artifact_ref.id + " value=" + format_observed(e.value) + ">";
        });

    py::class_<OddsRatioResult>(m, "OddsRatio")
        .def_readonly("a", &OddsRatioResult::a)
        .def_readonly("b", &OddsRatioResult::b)
        .def_readonly("c", &OddsRatioResult::c)
        .def_readonly("d", &OddsRatioResult::d)
        .def_readonly("odds_ratio", &OddsRatioResult::odds_ratio)
        .def_readonly("ci_low", &OddsRatioResult::ci_low)
        .def_readonly("ci_high", &OddsRatioResult::ci_high)
        .def_readonly("corrected", &OddsRatioResult::corrected);

    m.def("load_snapshot", &load_snapshot, py::arg("path"));
    m.def("detect", &detect, py::arg("snapshot"), py::kw_only(), py::arg("k") = 3.0, py::arg("min_group_size") = 10,
          py::arg("useful_only") = false, py::arg("types") = std::vector<std::string>{}, py::arg("threads") = 1,
          "Unusual events in a snapshot, sorted.");
    m.def(
        "summarize", [](std::vector<double> values, double k) { return summarize(values, k); }, py::arg("values"),
        py::arg("k") = 3.0);
    m.def("render_event_message", &render_event_message);
    m.def("odds_ratio", &odds_ratio, py::arg("a"), py::arg("b"), py::arg("c"), py::arg("d"));
    m.def("event_types", [] { return type_names(all_event_types()); });
    m.def("useful_event_types", [] { return type_names(useful_event_types()); });
    m.def(
        "qualifies_for_sample",
        [](std::size_t commits, std::size_t issues, std::size_t pulls) {
            const auto q = qualifies_for_sample(commits, issues, pulls);
            return py::make_tuple(q.qualifies, q.reason);
        },
        py::arg("commits"), py::arg("issues"), py::arg("pulls"));
    m.def(
        "frequency_report",
        [](const std::vector<UnusualEvent> &events, const RepoSnapshot &snapshot) {
            py::list rows;
            for (const auto &row : unusual::frequency_report(events, snapshot).rows) {
                py::dict d;
                d["event_type"] = row.type.to_string();
                d["count"] = row.count;
                d["percentage"] = row.percentage;
                rows.append(std::move(d));
            }
            return rows;
        },
        py::arg("events"), py::arg("snapshot"));
    m.def("run_cli", &cli, py::arg("args"), "Runs the command-line tool; returns (exit code, stdout, stderr).");
}
