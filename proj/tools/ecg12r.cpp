#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ecg12r/error.hpp"
#include "ecg12r/gradcheck.hpp"
#include "ecg12r/harness.hpp"
#include "ecg12r/network.hpp"
#include "ecg12r/record.hpp"

namespace {

using namespace ecg12r;

std::filesystem::path data_root() {
  const char* env = std::getenv("ECG12R_DATA_DIR");
  return env ? std::filesystem::path(env) : std::filesystem::path();
}

std::filesystem::path default_manifest() {
  const auto root = data_root();
  return root.empty() ? std::filesystem::path() : root / "manifest.json";
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct RunOptions {
  std::filesystem::path manifest = default_manifest();
  std::string method = "lt";
  std::string profile;
  std::uint64_t seed = 0;
  std::filesystem::path out;
  bool grid_search = false;
  double ndtw_window_s = 2.0;
  long ndtw_band = 100;
  std::size_t workers = 1;
  bool paper_targets = false;
  bool r2_literal = false;
  std::size_t max_epochs = 0;
  std::vector<std::string> records;
};

harness::ExperimentConfig make_config(const RunOptions& o) {
  harness::ExperimentConfig config;
  config.method = *harness::parse_method(o.method);
  if (!o.profile.empty()) config.profile = nn::parse_profile(o.profile);
  config.seed = o.seed;
  if (o.max_epochs > 0 && config.method != harness::Method::LT) {
    nn::NetworkSpec spec = config.network_spec();
    spec.max_epochs = o.max_epochs;
    config.spec_override = spec;
  }
  config.record_filter = o.records;
  config.out_dir = o.out;
  config.grid_search = o.grid_search;
  config.workers = o.workers;
  config.metrics.r2_variant = o.r2_literal ? metrics::R2Variant::Literal : metrics::R2Variant::Standard;
  config.metrics.ndtw.window_seconds = o.ndtw_window_s;
  config.metrics.ndtw.band_radius =
      o.ndtw_band < 0 ? std::nullopt : std::optional<std::size_t>(static_cast<std::size_t>(o.ndtw_band));
  return config;
}

Manifest require_manifest(const std::filesystem::path& path) {
  if (path.empty()) throw Error(ErrorCode::IoError, "no manifest given and ECG12R_DATA_DIR is not set");
  return load_manifest(path);
}

int cmd_manifest_build(const std::filesystem::path& dir, const std::string& database, const std::filesystem::path& out) {
  if (dir.empty()) throw Error(ErrorCode::IoError, "no --data-dir given and ECG12R_DATA_DIR is not set");
  std::vector<std::string> skipped;
  const Manifest manifest = build_manifest(dir, *parse_database(database), &skipped);
  for (const auto& s : skipped) std::cerr << "skipped " << s << '\n';
  save_manifest(manifest, out);
  std::cout << manifest.entries.size() << " records written to " << out.string() << '\n';
  return manifest.entries.empty() ? 1 : 0;
}

int cmd_run(const RunOptions& o) {
  const Manifest manifest = require_manifest(o.manifest);
  const harness::ExperimentConfig config = make_config(o);
  std::filesystem::create_directories(o.out);

  std::ofstream log(o.out / "run.log", std::ios::binary);
  log << timestamp() << " start method=" << o.method << " seed=" << o.seed << " records=" << manifest.entries.size()
      << '\n';
  const auto result = harness::run_experiment(manifest, config, [&](std::string_view line) {
    log << timestamp() << ' ' << line << '\n';
    log.flush();
    std::cerr << line << '\n';
  });
  const auto summaries = harness::aggregate_groups(result.reports, manifest);
  harness::emit_report(summaries, result, manifest, config, o.out);
  log << timestamp() << " done reports=" << result.reports.size() << " failures=" << result.failures.size() << '\n';

  std::cout << harness::summary_csv(summaries);
  if (o.paper_targets && !manifest.entries.empty()) {
    std::cout << '\n' << harness::reference_comparison(summaries, manifest.entries.front().database, config.method);
  }
  return result.exit_code();
}

int cmd_plot(const RunOptions& o, const std::string& record, double seconds, const std::filesystem::path& out) {
  const Manifest manifest = require_manifest(o.manifest);
  const ManifestEntry* entry = manifest.find(record);
  if (!entry) throw Error(ErrorCode::UnknownRecord, "record " + record + " is not in the manifest");
  const auto config = make_config(o);
  config.validate();
  const auto rec = harness::reconstruct_entry(*entry, config);
  const auto panels = harness::panels_from(rec);
  std::ofstream svg(out, std::ios::binary);
  if (!svg) throw Error(ErrorCode::IoError, "cannot write " + out.string());
  svg << harness::render_waveform_svg(panels, rec.fs, seconds);
  return 0;
}

int cmd_gradcheck(std::uint64_t seed) {
  ad::GradCheckOptions ops;
  ad::GradCheckOptions model = ops;
  model.tolerance = 1e-3;
  std::vector<ad::GradCheckReport> reports = ad::check_all_ops(seed, ops);
  reports.push_back(nn::check_dense_layer(seed, ops));
  reports.push_back(nn::check_lstm_cell(seed, ops));
  reports.push_back(nn::check_small_model(nn::ModelKind::LSTM, seed, model));
  reports.push_back(nn::check_small_model(nn::ModelKind::LSTM_UNET, seed, model));
  bool ok = true;
  for (const auto& r : reports) {
    std::printf("%-20s %s max_rel_err=%.3e entries=%zu%s%s\n", r.label.c_str(), r.passed ? "PASS" : "FAIL",
                r.max_relative_error, r.entries_checked, r.worst_parameter.empty() ? "" : " worst=",
                r.worst_parameter.c_str());
    ok = ok && r.passed;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reconstruct 12-lead ECG from leads I, II and V2"};
  app.require_subcommand(1);

  auto* manifest_cmd = app.add_subcommand("manifest", "Index a WFDB database");
  manifest_cmd->require_subcommand(1);
  auto* build_cmd = manifest_cmd->add_subcommand("build", "Scan a directory of .hea files");
  std::filesystem::path data_dir = data_root();
  std::string database;
  std::filesystem::path manifest_out;
  build_cmd->add_option("--data-dir", data_dir, "Database root (default $ECG12R_DATA_DIR)");
  build_cmd->add_option("--database", database)->required()->check(CLI::IsMember({"ptbdb", "incartdb"}));
  build_cmd->add_option("--out", manifest_out)->required();

  RunOptions run;
  auto add_method_options = [&run](CLI::App* cmd) {
    cmd->add_option("--manifest", run.manifest, "Manifest JSON (default $ECG12R_DATA_DIR/manifest.json)");
    cmd->add_option("--method", run.method)->required()->check(CLI::IsMember({"lt", "lstm", "lstm-unet"}));
    cmd->add_option("--profile", run.profile, "Network size for lstm and lstm-unet")
        ->check(CLI::IsMember({"paper", "small"}));
    cmd->add_option("--seed", run.seed);
    cmd->add_flag("--grid-search", run.grid_search, "5-fold cross-validated grid search per record");
    cmd->add_option("--max-epochs", run.max_epochs, "Override the profile's epoch limit");
  };

  auto* run_cmd = app.add_subcommand("run", "Reconstruct and score every record in a manifest");
  add_method_options(run_cmd);
  run_cmd->add_option("--out", run.out)->required();
  run_cmd->add_option("--ndtw-window-s", run.ndtw_window_s, "NDTW window in seconds; <= 0 for whole signal");
  run_cmd->add_option("--ndtw-band", run.ndtw_band, "Sakoe-Chiba radius in samples; < 0 for unbanded");
  run_cmd->add_option("--workers", run.workers)->check(CLI::PositiveNumber);
  run_cmd->add_option("--records", run.records, "Only these record ids")->delimiter(',');
  run_cmd->add_flag("--paper-targets", run.paper_targets, "Print published reference values next to the means");
  run_cmd->add_flag("--r2-literal", run.r2_literal, "Score R2 with the alternative printed formula");

  auto* plot_cmd = app.add_subcommand("plot", "Render original and reconstructed leads of one record as SVG");
  add_method_options(plot_cmd);
  std::string plot_record;
  double plot_seconds = 2.0;
  std::filesystem::path plot_out;
  plot_cmd->add_option("--record", plot_record)->required();
  plot_cmd->add_option("--seconds", plot_seconds)->check(CLI::PositiveNumber);
  plot_cmd->add_option("--out", plot_out)->required();

  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every autodiff op and the small models");
  std::string grad_profile = "small";
  std::uint64_t grad_seed = 1;
  grad_cmd->add_option("--profile", grad_profile)->check(CLI::IsMember({"small"}));
  grad_cmd->add_option("--seed", grad_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*build_cmd) return cmd_manifest_build(data_dir, database, manifest_out);
    if (*run_cmd) return cmd_run(run);
    if (*plot_cmd) return cmd_plot(run, plot_record, plot_seconds, plot_out);
    if (*grad_cmd) return cmd_gradcheck(grad_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
