#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ecg12r/leads.hpp"
#include "ecg12r/matrix.hpp"
#include "ecg12r/wfdb.hpp"

namespace ecg12r {

struct ManifestEntry {
  std::string record_id;
  Database database = Database::PTBDB;
  DiagnosticGroup group = DiagnosticGroup::ND;
  std::filesystem::path header_path;
  std::vector<std::filesystem::path> data_paths;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct Manifest {
  std::vector<ManifestEntry> entries;

  const ManifestEntry* find(std::string_view record_id) const;
  friend bool operator==(const Manifest&, const Manifest&) = default;
};

/// Walks data_dir for *.hea files and indexes every header that parses.
/// Entries are ordered by record_id. Headers that fail to parse are listed in
/// `skipped` when it is non-null.
Manifest build_manifest(const std::filesystem::path& data_dir, Database database,
                        std::vector<std::string>* skipped = nullptr);

std::string manifest_to_json(const Manifest& manifest);
Manifest manifest_from_json(std::string_view json_text);
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);
Manifest load_manifest(const std::filesystem::path& path);

/// A multichannel ECG in millivolts.
struct Record {
  std::string record_id;
  wfdb::RecordHeader header;
  Matrix samples_mv;  // [n_samples x n_signals]
  std::array<std::optional<std::size_t>, kStandardLeadCount> lead_index{};
  DiagnosticGroup group = DiagnosticGroup::ND;

  double sampling_frequency() const noexcept { return header.sampling_frequency; }
  std::size_t n_samples() const noexcept { return samples_mv.rows(); }
  bool has_lead(LeadName lead) const noexcept {
    return lead_index[static_cast<std::size_t>(lead)].has_value();
  }
  /// Copy of one lead's samples. Throws Error{MissingLead} when absent.
  std::vector<double> lead(LeadName lead) const;
  std::size_t lead_count() const noexcept;
};

/// Builds lead_index from signal descriptions. Throws MissingLead when any of
/// I, II or V2 is absent.
void index_leads(Record& record);

Record load_record(const ManifestEntry& entry);

std::string read_text_file(const std::filesystem::path& path);
std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);

}  // namespace ecg12r
