#pragma once

#include <string>

#include <json.hpp>

#include "flowcast/common.hpp"
#include "flowcast/evalharness.hpp"

namespace flowcast::cli {

/// Entry point used by the binary; returns the process exit code
/// (0 ok, 1 usage, 2 data error, 3 numerical failure).
int main_entry(int argc, const char* const* argv);

/// Dispatches a subcommand with a fully resolved config; writes primary
/// outputs plus a manifest next to them. Returns the manifest.
nlohmann::json dispatch(const std::string& subcommand,
                        const nlohmann::json& config);

// Individual runners (exposed for tests and manifest replay).
nlohmann::json run_synth(const nlohmann::json& cfg);
nlohmann::json run_filter(const nlohmann::json& cfg);
nlohmann::json run_fit_var(const nlohmann::json& cfg);
nlohmann::json run_fit_dl(const nlohmann::json& cfg);
nlohmann::json run_search(const nlohmann::json& cfg);
nlohmann::json run_eval(const nlohmann::json& cfg);
nlohmann::json run_diagnose(const nlohmann::json& cfg);

/// Re-executes the run recorded in a manifest; primary outputs are
/// byte-identical to the original run.
nlohmann::json rerun_manifest(const std::string& manifest_path);

/// Parses a Table-1-style pipeline spec (see README for the schema).
eval::PipelineSpec parse_pipeline_spec(const nlohmann::json& j,
                                       const data::SpeedField& field);
search::SearchSpace parse_search_space(const nlohmann::json& j);

}  // namespace flowcast::cli
