#include "ecg12r/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace ecg12r::metrics {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_pair(std::span<const double> x, std::span<const double> y, std::size_t min_len) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::LengthMismatch,
                "series lengths differ: " + std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  }
  if (x.size() < min_len) {
    throw Error(ErrorCode::EmptySignal, "need at least " + std::to_string(min_len) + " samples");
  }
}

double mean(std::span<const double> v) {
  double s = 0.0;
  for (double a : v) s += a;
  return s / static_cast<double>(v.size());
}

void check_band(std::size_t n, std::size_t m, std::optional<std::size_t> band) {
  if (n == 0 || m == 0) throw Error(ErrorCode::EmptySignal, "dtw of an empty series");
  const std::size_t gap = n > m ? n - m : m - n;
  if (band && *band < gap) {
    throw Error(ErrorCode::BandTooNarrow,
                "band radius " + std::to_string(*band) + " is below the length difference " + std::to_string(gap));
  }
}

// Column range [lo, hi] of row i (zero-based) admitted by the band.
std::pair<std::size_t, std::size_t> band_columns(std::size_t i, std::size_t m, std::optional<std::size_t> band) {
  if (!band) return {0, m - 1};
  const std::size_t lo = i > *band ? i - *band : 0;
  const std::size_t hi = std::min(m - 1, i + *band);
  return {lo, hi};
}

std::optional<ErrorCode> parse_error_code(std::string_view text) {
  for (int k = 0; k <= static_cast<int>(ErrorCode::UnknownRecord); ++k) {
    const auto code = static_cast<ErrorCode>(k);
    if (to_string(code) == text) return code;
  }
  return std::nullopt;
}

nlohmann::json optional_number(std::optional<double> v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::optional<double> read_optional(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

bool is_constant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
}

}  // namespace

double r_squared(std::span<const double> x, std::span<const double> y, R2Variant variant) {
  require_pair(x, y, 2);
  if (variant == R2Variant::Literal) {
    const double my = mean(y);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      num += (x[i] - my) * (x[i] - my);
      den += (y[i] - my) * (y[i] - my);
    }
    if (is_constant(y)) throw Error(ErrorCode::ConstantSeries, "reconstruction is constant");
    return 1.0 - num / den;
  }
  const double mx = mean(x);
  double sse = 0.0, sst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sse += (x[i] - y[i]) * (x[i] - y[i]);
    sst += (x[i] - mx) * (x[i] - mx);
  }
  // Exact test: rounding in the mean leaves sst tiny but nonzero for constants.
  if (is_constant(x)) throw Error(ErrorCode::ConstantReference, "original series is constant");
  return 1.0 - sse / sst;
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
  require_pair(x, y, 2);
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (is_constant(x) || is_constant(y)) throw Error(ErrorCode::ConstantSeries, "correlation of a constant series");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

DtwResult dtw_align(std::span<const double> x, std::span<const double> y, std::optional<std::size_t> band_radius) {
  const std::size_t n = x.size(), m = y.size();
  check_band(n, m, band_radius);

  // D[(i+1)*(m+1) + (j+1)] is the cost of the best path ending at (i, j).
  const std::size_t stride = m + 1;
  std::vector<double> d((n + 1) * stride, kInf);
  d[0] = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto [lo, hi] = band_columns(i, m, band_radius);
    for (std::size_t j = lo; j <= hi; ++j) {
      const double c = (x[i] - y[j]) * (x[i] - y[j]);
      const double best = std::min({d[i * stride + j], d[i * stride + j + 1], d[(i + 1) * stride + j]});
      d[(i + 1) * stride + j + 1] = c + best;
    }
  }

  DtwResult result;
  result.cost = d[n * stride + m];
  std::size_t i = n, j = m;
  while (true) {
    result.path.emplace_back(i - 1, j - 1);
    if (i == 1 && j == 1) break;
    const double diag = d[(i - 1) * stride + j - 1];
    const double vert = d[(i - 1) * stride + j];
    const double horz = d[i * stride + j - 1];
    if (diag <= vert && diag <= horz) {
      --i;
      --j;
    } else if (vert <= horz) {
      --i;
    } else {
      --j;
    }
  }
  std::reverse(result.path.begin(), result.path.end());
  return result;
}

double dtw_cost(std::span<const double> x, std::span<const double> y, std::optional<std::size_t> band_radius) {
  const std::size_t n = x.size(), m = y.size();
  check_band(n, m, band_radius);
  std::vector<double> prev(m + 1, kInf), cur(m + 1, kInf);
  prev[0] = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto [lo, hi] = band_columns(i, m, band_radius);
    std::fill(cur.begin(), cur.end(), kInf);
    for (std::size_t j = lo; j <= hi; ++j) {
      const double c = (x[i] - y[j]) * (x[i] - y[j]);
      cur[j + 1] = c + std::min({prev[j], prev[j + 1], cur[j]});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

double ndtw(std::span<const double> x, std::span<const double> y, double fs, const NdtwSettings& settings) {
  require_pair(x, y, 1);
  const std::size_t n = x.size();
  std::size_t window = n;
  if (settings.window_seconds > 0.0) {
    window = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(settings.window_seconds * fs)));
  }
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t start = 0; start < n; start += window, ++count) {
    const std::size_t len = std::min(window, n - start);
    const auto xs = x.subspan(start, len), ys = y.subspan(start, len);
    double sse = 0.0;
    for (std::size_t i = 0; i < len; ++i) sse += (xs[i] - ys[i]) * (xs[i] - ys[i]);
    if (sse == 0.0) continue;
    total += dtw_cost(xs, ys, settings.band_radius) / std::sqrt(sse);
  }
  return total / static_cast<double>(count);
}

MetricsReport evaluate_record(const std::string& record_id, const Matrix& original, const Matrix& reconstructed,
                              const EvaluateOptions& options) {
  if (original.rows() != reconstructed.rows() || original.cols() != kOutputLeads.size() ||
      reconstructed.cols() != kOutputLeads.size()) {
    throw Error(ErrorCode::LengthMismatch, record_id + ": original and reconstruction must both be [n x 9]");
  }
  MetricsReport report;
  report.record_id = record_id;
  for (std::size_t c = 0; c < kOutputLeads.size(); ++c) {
    LeadMetrics lm;
    lm.lead = kOutputLeads[c];
    lm.n = original.rows();
    const auto x = original.column(c);
    const auto y = reconstructed.column(c);
    auto attempt = [&](auto&& fn, std::optional<double>& slot) {
      try {
        slot = fn();
      } catch (const Error& e) {
        if (!lm.flag) lm.flag = e.code();
      }
    };
    attempt([&] { return r_squared(x, y, options.r2_variant); }, lm.r2);
    attempt([&] { return pearson_r(x, y); }, lm.rx);
    attempt([&] { return ndtw(x, y, options.fs, options.ndtw); }, lm.ndtw);
    report.leads.push_back(lm);
  }
  auto mean_of = [&](std::optional<double> LeadMetrics::*field) -> std::optional<double> {
    double s = 0.0;
    std::size_t k = 0;
    for (const auto& lm : report.leads) {
      if (lm.*field) {
        s += *(lm.*field);
        ++k;
      }
    }
    if (k == 0) return std::nullopt;
    return s / static_cast<double>(k);
  };
  report.means = {mean_of(&LeadMetrics::r2), mean_of(&LeadMetrics::rx), mean_of(&LeadMetrics::ndtw)};
  return report;
}

std::string format_metric(std::optional<double> value) {
  if (!value) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", *value);
  // Avoid "-0.0000" so tiny negative values render like their neighbours.
  if (std::string_view(buf) == "-0.0000") return "0.0000";
  return buf;
}

std::string report_to_json(const MetricsReport& report) {
  nlohmann::json leads = nlohmann::json::array();
  for (const auto& lm : report.leads) {
    leads.push_back({{"lead", std::string(to_string(lm.lead))},
                     {"r2", optional_number(lm.r2)},
                     {"rx", optional_number(lm.rx)},
                     {"ndtw", optional_number(lm.ndtw)},
                     {"n", lm.n},
                     {"flag", lm.flag ? nlohmann::json(std::string(to_string(*lm.flag))) : nlohmann::json(nullptr)}});
  }
  nlohmann::json doc;
  doc["record_id"] = report.record_id;
  doc["leads"] = std::move(leads);
  doc["means"] = {{"r2", optional_number(report.means.r2)},
                  {"rx", optional_number(report.means.rx)},
                  {"ndtw", optional_number(report.means.ndtw)}};
  return doc.dump();
}

MetricsReport report_from_json(std::string_view text) {
  MetricsReport report;
  try {
    const auto doc = nlohmann::json::parse(text);
    report.record_id = doc.at("record_id").get<std::string>();
    for (const auto& j : doc.at("leads")) {
      LeadMetrics lm;
      const auto name = j.at("lead").get<std::string>();
      const auto lead = parse_lead_name(name);
      if (!lead) throw Error(ErrorCode::IoError, "unknown lead '" + name + "' in report");
      lm.lead = *lead;
      lm.r2 = read_optional(j, "r2");
      lm.rx = read_optional(j, "rx");
      lm.ndtw = read_optional(j, "ndtw");
      lm.n = j.at("n").get<std::size_t>();
      if (j.contains("flag") && !j.at("flag").is_null()) lm.flag = parse_error_code(j.at("flag").get<std::string>());
      report.leads.push_back(lm);
    }
    const auto& means = doc.at("means");
    report.means = {read_optional(means, "r2"), read_optional(means, "rx"), read_optional(means, "ndtw")};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IoError, std::string("invalid metrics report: ") + e.what());
  }
  return report;
}

std::string report_to_csv_rows(const MetricsReport& report) {
  std::ostringstream os;
  for (const auto& lm : report.leads) {
    os << report.record_id << ',' << to_string(lm.lead) << ',' << format_metric(lm.r2) << ','
       << format_metric(lm.rx) << ',' << format_metric(lm.ndtw) << ',' << lm.n << ','
       << (lm.flag ? to_string(*lm.flag) : std::string_view()) << '\n';
  }
  return os.str();
}

}  // namespace ecg12r::metrics
