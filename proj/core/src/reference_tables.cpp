#include <cmath>
#include <cstdio>
#include <sstream>

#include "ecg12r/harness.hpp"

namespace ecg12r::harness {
namespace {

constexpr double kNA = kNotReported;

// Per lead: R2 {LT, LSTM, LSTM-UNet}, r_x {LT, LSTM, LSTM-UNet}, NDTW {LSTM, LSTM-UNet}.
// R2 and r_x are percentages.
const ReferenceTable kTables[] = {
    {Database::PTBDB,
     DiagnosticGroup::HC,
     {{{"III", {kNA, 95.37, 96.22, kNA, 96.53, 98.17, 0.0079, 0.0075}},
       {"aVR", {kNA, 99.25, 99.25, kNA, 99.48, 99.63, 0.0031, 0.0032}},
       {"aVL", {kNA, 96.37, 97.06, kNA, 96.45, 98.61, 0.009, 0.0068}},
       {"aVF", {kNA, 97.97, 98.35, kNA, 98.45, 99.2, 0.004, 0.004}},
       {"V1", {94.69, 97.65, 97.83, 97.3, 97.64, 98.94, 0.0063, 0.0093}},
       {"V3", {96.52, 97.64, 97.64, 98.3, 98.56, 98.87, 0.0066, 0.0056}},
       {"V4", {91.83, 96.29, 96.54, 95.9, 97.85, 98.35, 0.0071, 0.0086}},
       {"V5", {93.53, 95.38, 95.63, 96.8, 98.26, 97.96, 0.0061, 0.0065}},
       {"V6", {94.69, 97.15, 97.62, 97.3, 98.38, 99, 0.0077, 0.0038}},
       {"Avg", {94.25, 96.82, 97.05, 97.12, 98.14, 98.62, 0.0064, 0.0061}}}}},
    {Database::PTBDB,
     DiagnosticGroup::BB,
     {{{"III", {kNA, 90.70, 91.32, kNA, 95.79, 96.13, 0.0138, 0.0141}},
       {"aVR", {kNA, 93.58, 93.78, kNA, 96.77, 96.85, 0.0065, 0.0080}},
       {"aVL", {kNA, 95.97, 95.99, kNA, 98.02, 98.02, 0.0111, 0.0106}},
       {"aVF", {kNA, 96.19, 96.44, kNA, 98.21, 98.38, 0.0074, 0.0081}},
       {"V1", {90.40, 94.71, 95.33, 94.7, 97.34, 97.67, 0.0158, 0.0083}},
       {"V3", {95.78, 97.04, 97.31, 97.9, 98.56, 98.70, 0.0053, 0.0083}},
       {"V4", {87.39, 92.70, 93.80, 93.7, 96.55, 97.00, 0.0085, 0.0085}},
       {"V5", {88.47, 89.78, 89.96, 94.4, 95.26, 95.44, 0.0066, 0.0075}},
       {"V6", {92.41, 90.12, 90.19, 96.2, 95.89, 95.94, 0.0083, 0.0089}},
       {"Avg", {90.89, 92.87, 93.32, 95.38, 96.72, 96.95, 0.0093, 0.0091}}}}},
    {Database::PTBDB,
     DiagnosticGroup::HY,
     {{{"III", {kNA, 95.51, 96.11, kNA, 97.88, 98.10, 0.0098, 0.0089}},
       {"aVR", {kNA, 97.49, 98.01, kNA, 92.78, 93.60, 0.0072, 0.0057}},
       {"aVL", {kNA, 95.66, 96.58, kNA, 97.93, 98.30, 0.0082, 0.0097}},
       {"aVF", {kNA, 96.98, 97.42, kNA, 98.56, 98.74, 0.0098, 0.0058}},
       {"V1", {97.44, 96.81, 97.12, 98.7, 98.43, 98.59, 0.0076, 0.0073}},
       {"V3", {96.23, 97.09, 97.87, 98.1, 98.61, 98.98, 0.0066, 0.0085}},
       {"V4", {87.45, 92.41, 94.07, 93.4, 96.40, 97.11, 0.0119, 0.0090}},
       {"V5", {89.90, 91.64, 92.41, 94.5, 96.04, 96.44, 0.0094, 0.0076}},
       {"V6", {95.74, 93.65, 94.54, 97.8, 96.98, 97.47, 0.0078, 0.0075}},
       {"Avg", {93.35, 94.32, 95.20, 96.5, 97.29, 97.72, 0.0087, 0.0078}}}}},
    {Database::PTBDB,
     DiagnosticGroup::MI,
     {{{"III", {kNA, 91.45, 91.61, kNA, 95.97, 96.06, 0.0124, 0.0122}},
       {"aVR", {kNA, 97.39, 97.46, kNA, 98.70, 98.73, 0.0069, 0.006}},
       {"aVL", {kNA, 95.01, 95.04, kNA, 97.38, 97.86, 0.0078, 0.008}},
       {"aVF", {kNA, 94.19, 94.22, kNA, 97.18, 97.25, 0.0076, 0.0073}},
       {"V1", {94.34, 93.72, 94.60, 97.1, 96.90, 97.34, 0.0117, 0.0103}},
       {"V3", {95.92, 95.48, 95.87, 97.9, 97.80, 98.00, 0.0079, 0.0077}},
       {"V4", {89.52, 89.75, 90.44, 95.4, 95.55, 95.57, 0.0108, 0.0099}},
       {"V5", {89.22, 90.12, 90.20, 94.4, 95.16, 95.44, 0.0096, 0.0077}},
       {"V6", {91.52, 92.53, 92.97, 95.6, 95.66, 95.83, 0.0091, 0.013}},
       {"Avg", {92.10, 92.32, 92.82, 96.08, 96.21, 96.44, 0.0093, 0.0091}}}}},
    {Database::PTBDB,
     DiagnosticGroup::VA,
     {{{"III", {kNA, 92.67, 92.85, kNA, 95.74, 96.55, 0.0089, 0.0072}},
       {"aVR", {kNA, 98.96, 99.01, kNA, 99.62, 99.5, 0.0047, 0.0043}},
       {"aVL", {kNA, 93.09, 93.98, kNA, 98.21, 97.07, 0.0073, 0.0076}},
       {"aVF", {kNA, 96.04, 96.95, kNA, 99.00, 98.53, 0.0048, 0.0051}},
       {"V1", {93.73, 95.17, 95.87, 96.9, 98.83, 97.97, 0.0077, 0.0081}},
       {"V3", {94.25, 97.04, 97.53, 97.0, 98.68, 98.83, 0.0081, 0.0079}},
       {"V4", {89.97, 93.47, 95.46, 94.8, 98.19, 98.36, 0.0088, 0.0082}},
       {"V5", {91.89, 96.5, 97.04, 95.9, 96.06, 98.6, 0.006, 0.0064}},
       {"V6", {93.78, 96.75, 97.88, 96.8, 98.68, 98.57, 0.0074, 0.0069}},
       {"Avg", {92.72, 95.79, 96.56, 96.28, 98.09, 98.47, 0.0071, 0.0069}}}}},
    {Database::PTBDB,
     DiagnosticGroup::ND,
     {{{"III", {kNA, 90.19, 90.33, kNA, 95.05, 95.61, 0.0118, 0.0115}},
       {"aVR", {kNA, 95.43, 95.73, kNA, 98.25, 97.92, 0.0067, 0.0068}},
       {"aVL", {kNA, 94.99, 95.26, kNA, 97.50, 97.70, 0.0095, 0.0095}},
       {"aVF", {kNA, 95.05, 95.37, kNA, 97.56, 97.79, 0.0087, 0.008}},
       {"V1", {90.92, 92.69, 93.06, 94.9, 96.36, 96.60, 0.0097, 0.0091}},
       {"V3", {93.54, 94.02, 94.51, 96.7, 96.47, 97.35, 0.0093, 0.0099}},
       {"V4", {83.72, 89.05, 89.62, 91.0, 94.96, 95.10, 0.0128, 0.0119}},
       {"V5", {84.61, 86.79, 91.14, 91.6, 94.03, 95.78, 0.0108, 0.0104}},
       {"V6", {87.28, 85.66, 87.85, 92.0, 93.42, 94.35, 0.0099, 0.0095}},
       {"Avg", {88.01, 89.64, 91.24, 93.24, 95.05, 95.84, 0.0099, 0.0096}}}}},
    {Database::INCARTDB,
     DiagnosticGroup::UNGROUPED,
     {{{"III", {kNA, 95.09, 96.48, kNA, 97.64, 98.25, 0.0080, 0.0065}},
       {"aVR", {kNA, 96.61, 97.60, kNA, 98.35, 98.80, 0.0055, 0.0052}},
       {"aVL", {kNA, 91.51, 93.91, kNA, 95.85, 96.98, 0.0091, 0.0077}},
       {"aVF", {kNA, 97.28, 98.27, kNA, 98.64, 99.17, 0.0055, 0.0049}},
       {"V1", {86.38, 93.23, 94.92, 93.6, 96.73, 97.46, 0.0088, 0.0063}},
       {"V3", {86.91, 91.52, 94.30, 94.0, 96.20, 97.18, 0.0113, 0.0092}},
       {"V4", {83.61, 91.64, 93.85, 92.2, 96.04, 96.97, 0.0100, 0.0101}},
       {"V5", {83.74, 92.50, 92.88, 92.1, 96.36, 96.41, 0.0086, 0.0083}},
       {"V6", {78.11, 92.41, 93.61, 89.3, 96.24, 96.81, 0.0094, 0.0087}},
       {"Avg", {83.75, 92.26, 93.91, 92.24, 96.31, 96.97, 0.0085, 0.0074}}}}},
};

std::string cell(std::optional<double> v) {
  if (!v || std::isnan(*v)) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

}  // namespace

std::span<const ReferenceTable> reference_tables() { return kTables; }

const ReferenceTable* find_reference(Database database, DiagnosticGroup group) {
  for (const auto& t : kTables) {
    if (t.database == database && t.group == group) return &t;
  }
  return nullptr;
}

std::string reference_comparison(std::span<const GroupSummary> summaries, Database database, Method method) {
  const std::size_t col = method == Method::LT ? 0 : method == Method::LSTM ? 1 : 2;
  std::ostringstream os;
  for (const auto& s : summaries) {
    const ReferenceTable* ref = find_reference(database, s.group);
    os << to_string(s.group) << " (" << s.n_records << " records, reference " << to_string(method) << ")\n";
    os << "lead  r2 ours/ref  rx ours/ref  ndtw ours/ref\n";
    for (std::size_t r = 0; r <= s.leads.size(); ++r) {
      const bool avg = r == s.leads.size();
      const metrics::MetricMeans& m = avg ? s.avg : s.leads[r].mean;
      std::optional<double> ref_r2, ref_rx, ref_nd;
      if (ref) {
        const auto& row = ref->rows[r];
        ref_r2 = row.values[col] / 100.0;
        ref_rx = row.values[3 + col] / 100.0;
        if (col > 0) ref_nd = row.values[5 + col];
      }
      os << (avg ? std::string("Avg") : std::string(to_string(s.leads[r].lead))) << "  " << cell(m.r2) << '/'
         << cell(ref_r2) << "  " << cell(m.rx) << '/' << cell(ref_rx) << "  " << cell(m.ndtw)
         << '/' << cell(ref_nd) << '\n';
    }
  }
  return os.str();
}

}  // namespace ecg12r::harness
