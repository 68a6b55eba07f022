#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "coex/adapt.hpp"
#include "coex/cli.hpp"
#include "coex/config.hpp"
#include "coex/fim.hpp"
#include "coex/spectrum.hpp"

namespace py = pybind11;
using namespace coex;

namespace {

fim::ErrorHistogram to_histogram(const std::vector<std::int64_t>& counts) {
  if (counts.size() > static_cast<std::size_t>(fim::kMaxErrorLength)) {
    throw py::value_error("at most " + std::to_string(fim::kMaxErrorLength) + " bins (error lengths 1..)");
  }
  fim::ErrorHistogram h;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < 0) throw py::value_error("negative count");
    for (std::int64_t n = 0; n < counts[i]; ++n) h.add(static_cast<int>(i) + 1);
  }
  return h;
}

std::vector<std::int64_t> counts_of(const fim::ErrorHistogram& h) {
  std::vector<std::int64_t> out;
  for (int k = 1; k <= fim::kMaxErrorLength; ++k) out.push_back(h.count(k));
  return out;
}

py::dict report_dict(const RunReport& r) {
  py::dict d;
  d["scenario"] = r.scenario;
  d["seed"] = r.seed;
  d["sent"] = r.victim.sent;
  d["dropped"] = r.victim.dropped;
  d["corrupted"] = r.victim.corrupted;
  d["clean"] = r.victim.clean;
  d["loss_pct"] = r.loss_pct;
  d["verdict"] = r.capture.label();
  d["fim_verdict"] = r.fim.label();
  d["histogram"] = counts_of(r.capture_histogram);
  d["timeline"] = r.stats.timeline;
  d["detection_collisions"] = r.stats.detection_collisions;
  d["gain"] = r.stats.gain;
  d["warnings"] = r.warnings;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<TraceFormatError>(m, "TraceFormatError", PyExc_ValueError);

  py::class_<fim::Peak>(m, "Peak")
      .def_readonly("position", &fim::Peak::position)
      .def_readonly("density", &fim::Peak::density)
      .def_readonly("prominence", &fim::Peak::prominence)
      .def("__repr__", [](const fim::Peak& p) {
        std::ostringstream os;
        os << "Peak(position=" << p.position << ", density=" << p.density << ", prominence=" << p.prominence << ")";
        return os.str();
      });

  m.def(
      "run",
      [](const std::filesystem::path& config, std::uint64_t seed, const std::filesystem::path& out) {
        RunReport r;
        {
          py::gil_scoped_release nogil;
          r = cmd_run(config, seed, out);
        }
        return report_dict(r);
      },
      py::arg("config"), py::arg("seed"), py::arg("out"));

  m.def(
      "replay",
      [](const std::filesystem::path& trace, const std::filesystem::path& out) {
        return report_dict(cmd_replay(trace, out));
      },
      py::arg("trace"), py::arg("out"));

  m.def(
      "fixtures",
      [](const std::filesystem::path& out, std::optional<std::filesystem::path> dir) {
        py::list rows;
        for (const auto& row : cmd_fixtures(out, dir ? *dir : default_fixture_dir())) {
          py::dict d;
          d["name"] = row.name;
          d["pass"] = row.pass;
          d["expected"] = row.expected;
          d["observed"] = row.observed;
          rows.append(d);
        }
        return rows;
      },
      py::arg("out"), py::arg("fixture_dir") = py::none());

  m.def("fixture_names", &fixture_names);

  // counts[i] is the number of frames with i+1 corrupted bytes
  m.def(
      "classify",
      [](const std::vector<std::int64_t>& counts) { return fim::classify(to_histogram(counts)).label(); },
      py::arg("counts"));
  m.def(
      "detect_peaks",
      [](const std::vector<std::int64_t>& counts) { return fim::detect_peaks(to_histogram(counts)); },
      py::arg("counts"));

  m.def("first_overlap_free_channel", &first_overlap_free_channel, py::arg("wifi_channels"),
        py::arg("exclude") = 0);

  m.attr("MAX_ERROR_LENGTH") = fim::kMaxErrorLength;
}
