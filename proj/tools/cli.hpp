#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "cellfclust/datagen.hpp"
#include "cellfclust/types.hpp"

namespace cellfclust {

void to_json(nlohmann::json& j, const FitConfig& c);
void from_json(const nlohmann::json& j, FitConfig& c);
void to_json(nlohmann::json& j, const SyntheticSpec& s);
void from_json(const nlohmann::json& j, SyntheticSpec& s);

}  // namespace cellfclust

namespace cellfclust::cli {

/// Process exit codes.
enum ExitCode : int { kSuccess = 0, kUsage = 1, kDataError = 2, kFitFailure = 3 };

/// Everything needed to reproduce a run. Written verbatim to manifest.json.
struct RunManifest {
  std::string command = "fit";
  std::vector<std::string> inputs;
  std::string na_token = "NA";
  char delimiter = ',';
  bool robust_standardize = false;
  double scale = 1.0;
  FitConfig config;
  std::string output_dir;
  std::string version;
  std::string timestamp;

  // tune only
  std::string mode = "curves";
  std::vector<int> K_list;
  std::vector<double> alpha_list;
  double wa_threshold = 0.9;
};

void to_json(nlohmann::json& j, const RunManifest& m);
void from_json(const nlohmann::json& j, RunManifest& m);

std::string tool_version();
std::string utc_timestamp();

/// Loads and preprocesses the manifest's input.
DataSet load_data(const RunManifest& manifest);

/// Fit bundle: result.json, membership.csv, indicator.csv, completed.csv,
/// outlier_summary.csv, cell_status.csv, weak_assignments.csv, manifest.json.
void run_fit(const RunManifest& manifest);

/// Tuning bundle per mode: curves.csv, knee.csv, stats.csv or delta.csv,
/// plus manifest.json.
void run_tune(const RunManifest& manifest);

/// Writes data.csv, labels.csv, outlier_mask.csv, clean.csv and spec.json.
void run_datagen(const SyntheticSpec& spec, const std::string& output_dir);

/// Full command-line entry point; returns the process exit code.
int main(int argc, char** argv);

}  // namespace cellfclust::cli
