// Copyright 2026 The recallprobe Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Python bindings. Structured values cross the boundary as JSON text; the
// recallprobe package decodes them.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <filesystem>

#include "recallprobe/catalog.hpp"
#include "recallprobe/error.hpp"
#include "recallprobe/fixture.hpp"
#include "recallprobe/generation.hpp"
#include "recallprobe/metrics.hpp"
#include "recallprobe/oracle.hpp"
#include "recallprobe/pipeline.hpp"
#include "recallprobe/text.hpp"

namespace py = pybind11;
namespace rp = recallprobe;
namespace pl = recallprobe::pipeline;
using nlohmann::json;

namespace {

std::string evaluate_group(const std::string& target, const std::vector<std::string>& queries,
                           const std::vector<bool>& outcomes) {
  rp::QueryGroup g;
  g.target_shop_id = target;
  for (const auto& q : queries) g.queries.push_back({q, target});
  const auto ev = rp::evaluate_group(g, outcomes);
  return json{{"classification", std::string(rp::to_string(ev.verdict.classification))},
              {"findings", ev.findings}}
      .dump();
}

std::string metrics_from_counts(std::size_t reported, std::size_t confirmed, std::size_t total) {
  return rp::metrics_to_json(rp::metrics_from_counts(reported, confirmed, total)).dump();
}

std::string parse_catalog(const std::string& bytes, const std::string& format) {
  const auto r = rp::parse_catalog(bytes, rp::parse_catalog_format(format));
  json rejected = json::array();
  for (const auto& e : r.rejected) rejected.push_back({{"row", e.row}, {"reason", e.reason}});
  return json{{"shops", r.catalog.shops}, {"rejected", rejected}, {"rows_in", r.rows_in}}.dump();
}

std::string generate_template(const std::string& shop_json) {
  const auto shop = json::parse(shop_json).get<rp::Shop>();
  return json(rp::generate_template(shop)).dump();
}

std::pair<int, std::vector<std::string>> run_stage(const std::string& stage,
                                                   const std::string& config_path) {
  py::gil_scoped_release release;
  const auto config = pl::load_run_config(config_path);
  config.validate();
  pl::StageResult r;
  if (stage == "ingest") {
    r = pl::stage_ingest(config);
  } else if (stage == "generate") {
    r = pl::stage_generate(config);
  } else if (stage == "validate") {
    r = pl::stage_validate(config);
  } else if (stage == "run") {
    r = pl::stage_run(config);
  } else if (stage == "report") {
    r = pl::stage_report(config);
  } else {
    throw rp::ConfigError("unknown stage: " + stage);
  }
  return {r.exit_code, r.messages};
}

}  // namespace

PYBIND11_MODULE(_recallprobe, m) {
  m.doc() = "Missed-recall detection core";

  auto base = py::register_exception<rp::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<rp::ParseError>(m, "ParseError", base.ptr());
  py::register_exception<rp::ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<rp::ContractError>(m, "ContractError", base.ptr());
  py::register_exception<rp::IoError>(m, "IoError", base.ptr());

  m.def("normalize", &rp::text::normalize, py::arg("s"));
  m.def("fold_key", &rp::text::fold_key, py::arg("s"));
  m.def("format_fixed3", &rp::format_fixed3, py::arg("v"));
  m.def("evaluate_group", &evaluate_group, py::arg("target"), py::arg("queries"),
        py::arg("outcomes"));
  m.def("metrics_from_counts", &metrics_from_counts, py::arg("reported"), py::arg("confirmed"),
        py::arg("total"));
  m.def("parse_catalog", &parse_catalog, py::arg("data"), py::arg("format") = "csv");
  m.def("generate_template", &generate_template, py::arg("shop_json"));
  m.def(
      "write_fixture",
      [](const std::string& dir, std::uint64_t seed, int http_port) {
        rp::fixture::write_fixture_files(rp::fixture::make_seeded_fixture(seed), dir, http_port);
      },
      py::arg("dir"), py::arg("seed") = rp::fixture::kDefaultSeed, py::arg("http_port") = 8088);
  m.def("run_stage", &run_stage, py::arg("stage"), py::arg("config_path"));
}
