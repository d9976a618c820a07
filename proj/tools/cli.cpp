#include "cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "cellfclust/error.hpp"
#include "cellfclust/estimation.hpp"
#include "cellfclust/io.hpp"
#include "cellfclust/tuning.hpp"

#ifndef CELLFCLUST_VERSION
#define CELLFCLUST_VERSION "dev"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace cellfclust {
namespace {

json matrix_json(const MatrixXd& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(const VectorXd& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

VectorXd vector_from(const json& j) {
  VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = j[i].get<double>();
  return v;
}

MatrixXd matrix_from(const json& j) {
  const auto rows = static_cast<Index>(j.size());
  const auto cols = rows ? static_cast<Index>(j[0].size()) : 0;
  MatrixXd m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    if (static_cast<Index>(j[static_cast<std::size_t>(r)].size()) != cols)
      throw SpecError("ragged matrix in JSON");
    for (Index c = 0; c < cols; ++c)
      m(r, c) = j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

}  // namespace

void to_json(json& j, const FitConfig& c) {
  j = json{{"K", c.K},          {"alpha", c.alpha},       {"c", c.c},
           {"m", c.m},          {"equal_weights", c.equal_weights},
           {"tol", c.tol},      {"max_iter", c.max_iter}, {"n_starts", c.n_starts},
           {"seed", c.seed},    {"threads", c.threads}};
}

void from_json(const json& j, FitConfig& c) {
  FitConfig d;
  c.K = j.value("K", d.K);
  c.alpha = j.value("alpha", d.alpha);
  c.c = j.value("c", d.c);
  c.m = j.value("m", d.m);
  c.equal_weights = j.value("equal_weights", d.equal_weights);
  c.tol = j.value("tol", d.tol);
  c.max_iter = j.value("max_iter", d.max_iter);
  c.n_starts = j.value("n_starts", d.n_starts);
  c.seed = j.value("seed", d.seed);
  c.threads = j.value("threads", d.threads);
}

void to_json(json& j, const SyntheticSpec& s) {
  json covs = json::array();
  for (const auto& c : s.covariances) {
    if (c.explicit_matrix)
      covs.push_back(json{{"matrix", matrix_json(*c.explicit_matrix)}});
    else
      covs.push_back(json{{"rho", c.rho}, {"variance", c.variance}});
  }
  json means = json::array();
  for (const auto& mu : s.means) means.push_back(vector_json(mu));
  json overrides = json::array();
  for (const auto& [i, v] : s.overrides) overrides.push_back(json::array({i, v}));
  j = json{{"name", s.name},
           {"n", s.n},
           {"J", s.J},
           {"K", s.K},
           {"proportions", s.proportions},
           {"means", means},
           {"covariances", covs},
           {"contamination_rate", s.contamination_rate},
           {"low", s.low},
           {"high", s.high},
           {"overrides", overrides},
           {"seed", s.seed}};
}

void from_json(const json& j, SyntheticSpec& s) {
  try {
    s.name = j.value("name", std::string("custom"));
    s.n = j.at("n").get<Index>();
    s.J = j.at("J").get<Index>();
    s.K = j.at("K").get<int>();
    s.proportions = j.at("proportions").get<std::vector<double>>();
    s.means.clear();
    for (const auto& mu : j.at("means")) s.means.push_back(vector_from(mu));
    s.covariances.clear();
    for (const auto& c : j.at("covariances")) {
      CovarianceSpec cs;
      if (c.contains("matrix")) {
        cs.explicit_matrix = matrix_from(c.at("matrix"));
      } else {
        cs.rho = c.value("rho", 0.0);
        cs.variance = c.value("variance", 1.0);
      }
      s.covariances.push_back(std::move(cs));
    }
    s.contamination_rate = j.at("contamination_rate").get<std::vector<double>>();
    s.low = j.value("low", -50.0);
    s.high = j.value("high", 50.0);
    s.overrides.clear();
    for (const auto& o : j.value("overrides", json::array()))
      s.overrides.emplace_back(o.at(0).get<Index>(), o.at(1).get<Index>());
    s.seed = j.value("seed", std::uint64_t{1});
  } catch (const json::exception& e) {
    throw SpecError(std::string("invalid synthetic spec: ") + e.what());
  }
}

}  // namespace cellfclust

namespace cellfclust::cli {
namespace {

class OutputError : public Error {
 public:
  using Error::Error;
};

std::ofstream open_output(const std::string& dir, const std::string& name) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  const fs::path path = fs::path(dir) / name;
  std::ofstream out(path);
  if (!out) throw OutputError("cannot write '" + path.string() + "'");
  return out;
}

void write_json(const std::string& dir, const std::string& name, const json& j) {
  auto out = open_output(dir, name);
  out << j.dump(2) << '\n';
  if (!out) throw OutputError("failed writing '" + name + "'");
}

std::string num(double v) { return format_double(v); }

std::vector<std::string> names_of(const DataSet& data) {
  if (static_cast<Index>(data.variable_names.size()) == data.J()) return data.variable_names;
  std::vector<std::string> out;
  for (Index j = 0; j < data.J(); ++j) out.push_back("X" + std::to_string(j + 1));
  return out;
}

template <typename Row>
void write_csv_row(std::ostream& out, const Row& fields) {
  bool first = true;
  for (const auto& f : fields) {
    if (!first) out << ',';
    out << f;
    first = false;
  }
  out << '\n';
}

json result_json(const FitResult& r, const DataSet& data) {
  json j;
  j["n"] = data.n();
  j["J"] = data.J();
  j["K"] = r.params.K();
  j["variables"] = names_of(data);
  j["config"] = r.config;
  j["objective"] = r.objective;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["start_index"] = r.start_index;
  json starts = json::array();
  for (const auto& s : r.start_objectives) starts.push_back(s ? json(*s) : json(nullptr));
  j["start_objectives"] = starts;
  j["objective_trace"] = r.objective_trace;
  j["weights"] = vector_json(r.params.weights);
  json means = json::array();
  json covs = json::array();
  for (Index k = 0; k < r.params.K(); ++k) {
    means.push_back(vector_json(r.params.means[static_cast<std::size_t>(k)]));
    covs.push_back(matrix_json(r.params.covariances[static_cast<std::size_t>(k)]));
  }
  j["means"] = means;
  j["covariances"] = covs;
  return j;
}

void write_fit_bundle(const FitResult& r, const DataSet& data, const RunManifest& manifest) {
  const std::string& dir = manifest.output_dir;
  const auto names = names_of(data);
  const Index K = r.params.K();

  write_json(dir, "result.json", result_json(r, data));

  {
    auto out = open_output(dir, "membership.csv");
    std::vector<std::string> header;
    for (Index k = 0; k < K; ++k) header.push_back("cluster_" + std::to_string(k + 1));
    write_csv_row(out, header);
    for (Index i = 0; i < data.n(); ++i) {
      std::vector<std::string> row;
      for (Index k = 0; k < K; ++k) row.push_back(num(r.membership.u(i, k)));
      write_csv_row(out, row);
    }
  }
  {
    auto out = open_output(dir, "indicator.csv");
    write_csv_row(out, names);
    for (Index i = 0; i < data.n(); ++i) {
      std::vector<int> row;
      for (Index j = 0; j < data.J(); ++j) row.push_back(r.indicator.w(i, j) ? 1 : 0);
      write_csv_row(out, row);
    }
  }
  {
    auto out = open_output(dir, "completed.csv");
    DataSet completed(r.completed, names);
    write_csv(out, completed, {manifest.na_token, ','});
  }

  const OutlierSummary summary = outlier_summary(r, data);
  {
    auto out = open_output(dir, "outlier_summary.csv");
    write_csv_row(out, std::vector<std::string>{"variable", "cluster", "proportion", "imputed_above",
                                                "imputed_below", "imputed_equal", "missing"});
    for (Index j = 0; j < data.J(); ++j) {
      Index missing = 0;
      for (Index i = 0; i < data.n(); ++i) missing += data.observed(i, j) ? 0 : 1;
      for (Index k = 0; k < K; ++k) {
        Index above = 0, below = 0, equal = 0;
        for (Index i = 0; i < data.n(); ++i) {
          if (r.membership.argmax(i) != k) continue;
          switch (summary.status[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) {
            case CellStatus::imputed_above: ++above; break;
            case CellStatus::imputed_below: ++below; break;
            case CellStatus::imputed_equal: ++equal; break;
            default: break;
          }
        }
        write_csv_row(out, std::vector<std::string>{
                               names[static_cast<std::size_t>(j)], std::to_string(k + 1),
                               num(summary.proportions(j, k)), std::to_string(above),
                               std::to_string(below), std::to_string(equal), std::to_string(missing)});
      }
    }
  }
  {
    auto out = open_output(dir, "cell_status.csv");
    write_csv_row(out, std::vector<std::string>{"unit", "variable", "cluster", "status", "original",
                                                "imputed"});
    for (Index i = 0; i < data.n(); ++i)
      for (Index j = 0; j < data.J(); ++j) {
        const CellStatus st = summary.status[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        if (st == CellStatus::reliable) continue;
        write_csv_row(out, std::vector<std::string>{
                               std::to_string(i + 1), names[static_cast<std::size_t>(j)],
                               std::to_string(r.membership.argmax(i) + 1), to_string(st),
                               data.observed(i, j) ? num(data.values(i, j)) : manifest.na_token,
                               num(r.completed(i, j))});
      }
  }
  {
    const AssignmentStats stats = assignment_stats(r.membership, manifest.wa_threshold);
    auto out = open_output(dir, "weak_assignments.csv");
    std::vector<std::string> header{"unit", "max_membership"};
    for (Index k = 0; k < K; ++k) header.push_back("cluster_" + std::to_string(k + 1));
    write_csv_row(out, header);
    for (const auto& weak : stats.weak) {
      std::vector<std::string> row{std::to_string(weak.unit + 1), num(weak.membership.maxCoeff())};
      for (Index k = 0; k < K; ++k) row.push_back(num(weak.membership(k)));
      write_csv_row(out, row);
    }
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

void to_json(json& j, const RunManifest& m) {
  j = json{{"command", m.command},
           {"inputs", m.inputs},
           {"na_token", m.na_token},
           {"delimiter", std::string(1, m.delimiter)},
           {"robust_standardize", m.robust_standardize},
           {"scale", m.scale},
           {"config", m.config},
           {"output_dir", m.output_dir},
           {"version", m.version},
           {"timestamp", m.timestamp},
           {"wa_threshold", m.wa_threshold}};
  if (m.command == "tune") {
    j["mode"] = m.mode;
    j["K_list"] = m.K_list;
    j["alpha_list"] = m.alpha_list;
  }
}

void from_json(const json& j, RunManifest& m) {
  RunManifest d;
  m.command = j.value("command", d.command);
  m.inputs = j.value("inputs", d.inputs);
  m.na_token = j.value("na_token", d.na_token);
  const std::string delim = j.value("delimiter", std::string(1, d.delimiter));
  if (delim.size() != 1) throw ConfigError("delimiter must be a single character");
  m.delimiter = delim[0];
  m.robust_standardize = j.value("robust_standardize", d.robust_standardize);
  m.scale = j.value("scale", d.scale);
  if (j.contains("config")) m.config = j.at("config").get<FitConfig>();
  m.output_dir = j.value("output_dir", d.output_dir);
  m.version = j.value("version", d.version);
  m.timestamp = j.value("timestamp", d.timestamp);
  m.wa_threshold = j.value("wa_threshold", d.wa_threshold);
  m.mode = j.value("mode", d.mode);
  m.K_list = j.value("K_list", d.K_list);
  m.alpha_list = j.value("alpha_list", d.alpha_list);
}

std::string tool_version() { return CELLFCLUST_VERSION; }

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

DataSet load_data(const RunManifest& manifest) {
  if (manifest.inputs.empty()) throw ConfigError("no input file given");
  const DataSet raw = ingest(manifest.inputs.front(), {manifest.na_token, manifest.delimiter});
  return preprocess(raw, manifest.robust_standardize, manifest.scale);
}

void run_fit(const RunManifest& manifest) {
  const DataSet data = load_data(manifest);
  const FitResult result = fit(data, manifest.config);
  write_json(manifest.output_dir, "manifest.json", manifest);
  write_fit_bundle(result, data, manifest);
}

void run_tune(const RunManifest& manifest) {
  if (manifest.K_list.empty() || manifest.alpha_list.empty())
    throw ConfigError("tune needs non-empty --k-list and --alpha-list");
  const DataSet data = load_data(manifest);
  const auto names = names_of(data);
  const std::string& dir = manifest.output_dir;

  if (manifest.mode == "knee" && manifest.K_list.size() != 1)
    throw ConfigError("knee mode takes exactly one K");
  if (manifest.mode != "curves" && manifest.mode != "knee" && manifest.mode != "ha_wa" &&
      manifest.mode != "delta")
    throw ConfigError("unknown tune mode '" + manifest.mode + "'");

  const TuningGridResult grid =
      objective_curves(data, manifest.K_list, manifest.alpha_list, manifest.config);
  for (const auto& f : grid.failures)
    std::cerr << "warning: fit failed for K=" << f.K << ", alpha=" << f.alpha << ": " << f.reason << '\n';
  write_json(dir, "manifest.json", manifest);

  if (manifest.mode == "curves") {
    auto out = open_output(dir, "curves.csv");
    write_csv_row(out, std::vector<std::string>{"K", "alpha", "objective"});
    for (const auto& row : grid.rows)
      write_csv_row(out, std::vector<std::string>{std::to_string(row.K), num(row.alpha), num(row.objective)});
  } else if (manifest.mode == "knee") {
    auto out = open_output(dir, "knee.csv");
    std::vector<std::string> header{"alpha", "median_diff", "mad_diff"};
    for (const auto& name : names) header.push_back("knee_" + name);
    write_csv_row(out, header);
    for (const auto& row : grid.rows) {
      const KneeRow knee = knee_row(row.fit, data);
      std::vector<std::string> fields{num(knee.alpha), num(knee.median_diff), num(knee.mad_diff)};
      for (const auto& k : knee.knees) fields.push_back(k ? num(*k) : std::string("NA"));
      write_csv_row(out, fields);
    }
  } else if (manifest.mode == "ha_wa") {
    auto out = open_output(dir, "stats.csv");
    write_csv_row(out, std::vector<std::string>{"K", "alpha", "pct_hard", "pct_weak"});
    for (const auto& row : grid.rows) {
      const AssignmentStats st = assignment_stats(row.fit.membership, manifest.wa_threshold);
      write_csv_row(out, std::vector<std::string>{std::to_string(row.K), num(row.alpha),
                                                  num(100.0 * st.pct_hard), num(100.0 * st.pct_weak)});
    }
  } else {
    auto out = open_output(dir, "delta.csv");
    write_csv_row(out, std::vector<std::string>{"K", "alpha", "variable", "rank", "proportion", "delta"});
    for (const auto& row : grid.rows)
      for (const auto& curve : delta_plot_data(row.fit, data))
        for (std::size_t r = 0; r < curve.delta.size(); ++r)
          write_csv_row(out, std::vector<std::string>{
                                 std::to_string(row.K), num(row.alpha),
                                 names[static_cast<std::size_t>(curve.variable)], std::to_string(r + 1),
                                 num(curve.proportion[r]), num(curve.delta[r])});
  }
}

void run_datagen(const SyntheticSpec& spec, const std::string& output_dir) {
  const SyntheticData sd = generate(spec);
  {
    auto out = open_output(output_dir, "data.csv");
    write_csv(out, sd.data);
  }
  {
    auto out = open_output(output_dir, "clean.csv");
    write_csv(out, DataSet(sd.clean_values, sd.data.variable_names));
  }
  {
    auto out = open_output(output_dir, "labels.csv");
    out << "label\n";
    for (Index label : sd.true_labels) out << label + 1 << '\n';
  }
  {
    auto out = open_output(output_dir, "outlier_mask.csv");
    write_csv_row(out, sd.data.variable_names);
    for (Index i = 0; i < sd.data.n(); ++i) {
      std::vector<int> row;
      for (Index j = 0; j < sd.data.J(); ++j) row.push_back(sd.true_outlier_mask(i, j) ? 1 : 0);
      write_csv_row(out, row);
    }
  }
  write_json(output_dir, "spec.json", spec);
}

int main(int argc, char** argv) {
  CLI::App app{"cellfclust: robust fuzzy clustering with cellwise outlier detection"};
  app.set_version_flag("--version", tool_version());
  app.require_subcommand(1);

  RunManifest manifest;
  manifest.version = tool_version();
  std::string input;
  std::string delimiter = ",";
  std::string manifest_path;
  std::string k_list;
  std::string alpha_list;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--input,-i", input, "Delimited data file with a header row");
    sub->add_option("--manifest", manifest_path, "Re-run from a manifest.json");
    sub->add_option("--na-token", manifest.na_token, "Token marking missing cells")->capture_default_str();
    sub->add_option("--delimiter", delimiter, "Field delimiter")->capture_default_str();
    sub->add_flag("--robust-standardize", manifest.robust_standardize,
                  "Center by median and divide by MAD per column");
    sub->add_option("--scale", manifest.scale, "Scale factor S (data are divided by S)")
        ->capture_default_str();
    sub->add_option("--k", manifest.config.K, "Number of clusters")->capture_default_str();
    sub->add_option("--alpha", manifest.config.alpha, "Contamination level")->capture_default_str();
    sub->add_option("--c", manifest.config.c, "Eigenvalue-ratio bound")->capture_default_str();
    sub->add_option("--m", manifest.config.m, "Fuzzifier")->capture_default_str();
    sub->add_flag("--equal-weights", manifest.config.equal_weights, "Fix cluster weights to 1/K");
    sub->add_option("--tol", manifest.config.tol, "Convergence tolerance")->capture_default_str();
    sub->add_option("--max-iter", manifest.config.max_iter, "Iteration cap")->capture_default_str();
    sub->add_option("--starts", manifest.config.n_starts, "Random starts")->capture_default_str();
    sub->add_option("--seed", manifest.config.seed, "Base seed")->capture_default_str();
    sub->add_option("--threads", manifest.config.threads, "Worker cap")->capture_default_str();
    sub->add_option("--wa-threshold", manifest.wa_threshold, "Weak-assignment threshold")
        ->capture_default_str();
    sub->add_option("--out,-o", manifest.output_dir, "Output directory");
  };

  CLI::App* fit_cmd = app.add_subcommand("fit", "Fit the model and write a result bundle");
  add_common(fit_cmd);

  CLI::App* tune_cmd = app.add_subcommand("tune", "Run a (K, alpha) grid and write diagnostics");
  add_common(tune_cmd);
  tune_cmd->add_option("--mode", manifest.mode, "curves | knee | ha_wa | delta")->capture_default_str();
  tune_cmd->add_option("--k-list", k_list, "Comma-separated K values");
  tune_cmd->add_option("--alpha-list", alpha_list, "Comma-separated alpha values");

  std::string preset_name;
  std::string spec_path;
  std::string datagen_out;
  std::optional<std::uint64_t> datagen_seed;
  CLI::App* gen_cmd = app.add_subcommand("datagen", "Generate a synthetic data set");
  gen_cmd->add_option("--preset", preset_name, "paper_design_1 | paper_design_2 | weights_demo");
  gen_cmd->add_option("--spec", spec_path, "JSON synthetic spec");
  gen_cmd->add_option("--seed", datagen_seed, "Override the spec seed");
  gen_cmd->add_option("--out,-o", datagen_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kSuccess : kUsage;
  }

  try {
    if (gen_cmd->parsed()) {
      if (preset_name.empty() == spec_path.empty())
        throw ConfigError("datagen needs exactly one of --preset or --spec");
      SyntheticSpec spec;
      if (!preset_name.empty()) {
        spec = preset(preset_name);
      } else {
        std::ifstream in(spec_path);
        if (!in) throw DataError("cannot open '" + spec_path + "'");
        json j;
        try {
          in >> j;
        } catch (const json::exception& e) {
          throw SpecError(std::string("spec is not valid JSON: ") + e.what());
        }
        spec = j.get<SyntheticSpec>();
      }
      if (datagen_seed) spec.seed = *datagen_seed;
      run_datagen(spec, datagen_out);
      return kSuccess;
    }

    CLI::App* sub = fit_cmd->parsed() ? fit_cmd : tune_cmd;
    if (!manifest_path.empty()) {
      std::ifstream in(manifest_path);
      if (!in) throw DataError("cannot open '" + manifest_path + "'");
      json j;
      try {
        in >> j;
      } catch (const json::exception& e) {
        throw ConfigError(std::string("manifest is not valid JSON: ") + e.what());
      }
      const std::string out_override = manifest.output_dir;
      manifest = j.get<RunManifest>();
      if (!out_override.empty()) manifest.output_dir = out_override;
      manifest.version = tool_version();
    } else {
      if (input.empty()) throw ConfigError("--input or --manifest is required");
      if (delimiter.size() != 1) throw ConfigError("--delimiter must be a single character");
      manifest.inputs = {input};
      manifest.delimiter = delimiter[0];
      manifest.command = sub == fit_cmd ? "fit" : "tune";
      if (sub == tune_cmd) {
        for (const auto& s : split_list(k_list)) manifest.K_list.push_back(std::stoi(s));
        for (const auto& s : split_list(alpha_list)) manifest.alpha_list.push_back(std::stod(s));
      }
    }
    if (manifest.output_dir.empty()) throw ConfigError("--out is required");
    manifest.timestamp = utc_timestamp();
    manifest.config.validate();
    if (!(manifest.scale > 0.0)) throw ConfigError("--scale must be positive");

    if (manifest.command == "fit")
      run_fit(manifest);
    else
      run_tune(manifest);
    return kSuccess;
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: bad number in list: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const SpecError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const OutputError& e) {
    std::cerr << "output error: " << e.what() << '\n';
    return kDataError;
  } catch (const DegenerateFitError& e) {
    std::cerr << "fit failure: " << e.what() << '\n';
    return kFitFailure;
  } catch (const NumericalDomainError& e) {
    std::cerr << "fit failure: " << e.what() << '\n';
    return kFitFailure;
  }
}

}  // namespace cellfclust::cli
