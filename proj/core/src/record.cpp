#include <algorithm>

#include "ecg12r/error.hpp"
#include "ecg12r/record.hpp"

namespace ecg12r {
namespace fs = std::filesystem;

std::vector<double> Record::lead(LeadName which) const {
  const auto& col = lead_index[static_cast<std::size_t>(which)];
  if (!col) throw Error(ErrorCode::MissingLead, record_id + " has no lead " + std::string(to_string(which)));
  return samples_mv.column(*col);
}

std::size_t Record::lead_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(lead_index.begin(), lead_index.end(),
                                                [](const auto& c) { return c.has_value(); }));
}

void index_leads(Record& record) {
  record.lead_index.fill(std::nullopt);
  for (std::size_t c = 0; c < record.header.signals.size(); ++c) {
    const auto lead = parse_lead_name(record.header.signals[c].description);
    if (!lead) continue;
    auto& slot = record.lead_index[static_cast<std::size_t>(*lead)];
    if (!slot) slot = c;
  }
  for (LeadName required : kInputLeads) {
    if (!record.has_lead(required)) {
      throw Error(ErrorCode::MissingLead,
                  record.record_id + " is missing input lead " + std::string(to_string(required)));
    }
  }
}

Record load_record(const ManifestEntry& entry) {
  Record record;
  record.record_id = entry.record_id;
  record.group = entry.group;
  record.header = wfdb::parse_header(read_text_file(entry.header_path));
  const auto& header = record.header;

  auto resolve = [&](const std::string& file_name) {
    for (const auto& p : entry.data_paths) {
      if (p.filename() == file_name) return p;
    }
    return entry.header_path.parent_path() / file_name;
  };

  record.samples_mv = Matrix(header.n_samples, header.n_signals);
  std::vector<bool> done(header.n_signals, false);
  for (std::size_t first = 0; first < header.n_signals; ++first) {
    if (done[first]) continue;
    const std::string& file = header.signals[first].file_name;
    std::vector<std::size_t> columns;
    std::vector<wfdb::SignalSpec> specs;
    for (std::size_t c = first; c < header.n_signals; ++c) {
      if (header.signals[c].file_name != file) continue;
      if (header.signals[c].format != header.signals[first].format) {
        throw Error(ErrorCode::UnsupportedFormat, "mixed formats within " + file);
      }
      columns.push_back(c);
      specs.push_back(header.signals[c]);
      done[c] = true;
    }
    const auto bytes = read_binary_file(resolve(file));
    const auto adc = wfdb::decode_samples(bytes, specs.front().format, specs.size(), header.n_samples);
    const Matrix mv = wfdb::to_physical_units(adc, specs);
    for (std::size_t k = 0; k < columns.size(); ++k) record.samples_mv.set_column(columns[k], mv.column(k));
  }
  index_leads(record);
  return record;
}

}  // namespace ecg12r
