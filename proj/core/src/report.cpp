#include <fstream>
#include <map>
#include <sstream>

#include "ecg12r/error.hpp"
#include "ecg12r/harness.hpp"
#include "json.hpp"

namespace ecg12r::harness {
namespace {

using metrics::MetricMeans;

struct Accumulator {
  double sum = 0.0;
  std::size_t n = 0;

  void add(std::optional<double> v) {
    if (!v) return;
    sum += *v;
    ++n;
  }
  std::optional<double> mean() const {
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  }
};

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

}  // namespace

std::vector<GroupSummary> aggregate_groups(std::span<const metrics::MetricsReport> reports, const Manifest& manifest) {
  std::map<DiagnosticGroup, std::vector<const metrics::MetricsReport*>> by_group;
  for (const auto& report : reports) {
    const ManifestEntry* entry = manifest.find(report.record_id);
    if (!entry) throw Error(ErrorCode::UnknownRecord, "record " + report.record_id + " is not in the manifest");
    by_group[entry->group].push_back(&report);
  }

  std::vector<GroupSummary> out;
  for (DiagnosticGroup group : kGroupOrder) {
    const auto it = by_group.find(group);
    if (it == by_group.end()) continue;
    GroupSummary summary;
    summary.group = group;
    summary.n_records = it->second.size();
    Accumulator avg_r2, avg_rx, avg_ndtw;
    for (std::size_t c = 0; c < kOutputLeads.size(); ++c) {
      Accumulator r2, rx, nd;
      for (const auto* report : it->second) {
        const auto& lm = report->leads.at(c);
        r2.add(lm.r2);
        rx.add(lm.rx);
        nd.add(lm.ndtw);
      }
      LeadSummary lead{kOutputLeads[c], MetricMeans{r2.mean(), rx.mean(), nd.mean()}};
      avg_r2.add(lead.mean.r2);
      avg_rx.add(lead.mean.rx);
      avg_ndtw.add(lead.mean.ndtw);
      summary.leads.push_back(lead);
    }
    summary.avg = MetricMeans{avg_r2.mean(), avg_rx.mean(), avg_ndtw.mean()};
    out.push_back(std::move(summary));
  }
  return out;
}

std::string summary_csv(std::span<const GroupSummary> summaries) {
  using metrics::format_metric;
  std::ostringstream os;
  os << "group,lead,r2,rx,ndtw,n_records\n";
  for (const auto& s : summaries) {
    const auto group = to_string(s.group);
    for (const auto& lead : s.leads) {
      os << group << ',' << to_string(lead.lead) << ',' << format_metric(lead.mean.r2) << ','
         << format_metric(lead.mean.rx) << ',' << format_metric(lead.mean.ndtw) << ',' << s.n_records << '\n';
    }
    os << group << ",Avg," << format_metric(s.avg.r2) << ',' << format_metric(s.avg.rx) << ','
       << format_metric(s.avg.ndtw) << ',' << s.n_records << '\n';
  }
  return os.str();
}

std::string records_json(const ExperimentResult& result, const Manifest& manifest, const ExperimentConfig& config) {
  nlohmann::json doc;
  doc["weighting"] = "equal-per-record";
  doc["method"] = std::string(to_string(config.method));
  doc["profile"] = config.method == Method::LT
                       ? nlohmann::json(nullptr)
                       : nlohmann::json(std::string(nn::to_string(config.profile.value_or(nn::Profile::Small))));
  doc["seed"] = config.seed;
  doc["grid_search"] = config.grid_search;
  doc["train_seconds"] = config.train_seconds;
  doc["r2_variant"] = config.metrics.r2_variant == metrics::R2Variant::Standard ? "standard" : "literal";
  doc["ndtw"] = {{"window_seconds", config.metrics.ndtw.window_seconds},
                 {"band_radius", config.metrics.ndtw.band_radius ? nlohmann::json(*config.metrics.ndtw.band_radius)
                                                                  : nlohmann::json(nullptr)}};
  if (config.method != Method::LT) doc["network"] = nlohmann::json::parse(nn::spec_to_json(config.network_spec()));

  nlohmann::json records = nlohmann::json::array();
  for (const auto& report : result.reports) {
    nlohmann::json r = nlohmann::json::parse(metrics::report_to_json(report));
    const ManifestEntry* entry = manifest.find(report.record_id);
    r["group"] = entry ? nlohmann::json(std::string(to_string(entry->group))) : nlohmann::json(nullptr);
    r["database"] = entry ? nlohmann::json(std::string(to_string(entry->database))) : nlohmann::json(nullptr);
    records.push_back(std::move(r));
  }
  doc["records"] = std::move(records);

  nlohmann::json failures = nlohmann::json::array();
  for (const auto& f : result.failures) failures.push_back({{"record_id", f.record_id}, {"error", f.message}});
  doc["failures"] = std::move(failures);
  return doc.dump(2) + "\n";
}

void emit_report(std::span<const GroupSummary> summaries, const ExperimentResult& result, const Manifest& manifest,
                 const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + out_dir.string() + ": " + ec.message());
  write_file(out_dir / "summary.csv", summary_csv(summaries));
  write_file(out_dir / "records.json", records_json(result, manifest, config));
}

}  // namespace ecg12r::harness
