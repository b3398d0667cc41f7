#pragma once

// Experiment orchestration: computes every artifact in memory, then writes
// results.csv, manifest.json and summary.txt with temp-then-rename.

#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "mpa/config.hpp"

namespace mpa {

struct RunArtifacts {
  std::string csv;
  std::string summary;
  nlohmann::json manifest;  // without the timestamp
  std::optional<std::string> matrix;
};

/// Runs the configured experiment without touching the filesystem.
RunArtifacts execute(const ExperimentConfig& cfg);

/// Exit status for a failure: config and precondition 2, capacity 3, numeric 4, other 1.
int exit_code_for(const std::exception& e);

struct RunOutcome {
  int status = 0;
  std::string message;
};

/// execute() then atomic writes under cfg.out; never throws.
RunOutcome run(const ExperimentConfig& cfg);

/// Writes `path` via a sibling temp file and rename.
void atomic_write(const std::filesystem::path& path, std::string_view content);

/// Git blob id: SHA-1 of "blob <size>\0<content>", lowercase hex.
std::string git_blob_sha1(std::string_view content);

}  // namespace mpa
