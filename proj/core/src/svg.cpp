#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "ecg12r/harness.hpp"

namespace ecg12r::harness {
namespace {

constexpr double kWidth = 960.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 20.0;
constexpr double kPanelHeight = 90.0;
constexpr double kPanelGap = 14.0;
constexpr double kBottom = 40.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string render_waveform_svg(std::span<const WaveformPanel> panels, double fs, double duration_s) {
  const double plot_w = kWidth - kLeft - kRight;
  const double height = kTop + static_cast<double>(panels.size()) * (kPanelHeight + kPanelGap) + kBottom;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth) << "\" height=\"" << num(height)
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (std::size_t p = 0; p < panels.size(); ++p) {
    const WaveformPanel& panel = panels[p];
    const std::size_t available = panel.original.size();
    const std::size_t n = std::min(available, static_cast<std::size_t>(std::llround(duration_s * fs)));
    const bool missing = panel.reconstructed.size() < n || panel.reconstructed.empty();

    double lo = 0.0, hi = 0.0;
    bool first = true;
    auto widen = [&](std::span<const double> v) {
      for (std::size_t i = 0; i < n && i < v.size(); ++i) {
        if (first) {
          lo = hi = v[i];
          first = false;
        }
        lo = std::min(lo, v[i]);
        hi = std::max(hi, v[i]);
      }
    };
    widen(panel.original);
    if (!missing) widen(panel.reconstructed);
    if (hi - lo < 1e-9) {
      lo -= 0.5;
      hi += 0.5;
    }

    const double top = kTop + static_cast<double>(p) * (kPanelHeight + kPanelGap);
    const double bottom = top + kPanelHeight;
    auto x_at = [&](std::size_t i) { return kLeft + (n > 1 ? plot_w * static_cast<double>(i) / static_cast<double>(n - 1) : 0.0); };
    auto y_at = [&](double v) { return bottom - (v - lo) / (hi - lo) * kPanelHeight; };
    auto polyline = [&](std::span<const double> v, const char* style) {
      os << "<polyline fill=\"none\" " << style << " points=\"";
      for (std::size_t i = 0; i < n; ++i) os << (i ? " " : "") << num(x_at(i)) << ',' << num(y_at(v[i]));
      os << "\"/>\n";
    };

    os << "<g>\n";
    os << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(top) << "\" width=\"" << num(plot_w) << "\" height=\""
       << num(kPanelHeight) << "\" fill=\"none\" stroke=\"#bbbbbb\"/>\n";
    os << "<text x=\"8\" y=\"" << num(top + kPanelHeight / 2.0) << "\">" << to_string(panel.lead) << "</text>\n";
    os << "<text x=\"" << num(kLeft - 4) << "\" y=\"" << num(top + 10) << "\" text-anchor=\"end\">" << num(hi)
       << " mV</text>\n";
    os << "<text x=\"" << num(kLeft - 4) << "\" y=\"" << num(bottom) << "\" text-anchor=\"end\">" << num(lo)
       << " mV</text>\n";
    polyline(panel.original, "stroke=\"#1f3b73\" stroke-width=\"1\"");
    if (missing) {
      os << "<text x=\"" << num(kLeft + plot_w - 4) << "\" y=\"" << num(top + 12)
         << "\" text-anchor=\"end\" fill=\"#b00000\">missing</text>\n";
    } else {
      polyline(panel.reconstructed, "stroke=\"#d9480f\" stroke-width=\"1\" stroke-dasharray=\"4 2\"");
    }
    os << "</g>\n";
  }

  // Time axis under the last panel.
  const double axis_y = height - kBottom + 4.0;
  std::size_t longest = 0;
  for (const auto& panel : panels) longest = std::max(longest, panel.original.size());
  const double seconds = fs > 0.0 ? std::min(duration_s, static_cast<double>(longest) / fs) : 0.0;
  const int ticks = std::max(1, static_cast<int>(std::ceil(seconds)));
  for (int t = 0; t <= ticks; ++t) {
    const double frac = static_cast<double>(t) / static_cast<double>(ticks);
    const double x = kLeft + plot_w * frac;
    os << "<line x1=\"" << num(x) << "\" y1=\"" << num(axis_y - 4) << "\" x2=\"" << num(x) << "\" y2=\""
       << num(axis_y) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << num(x) << "\" y=\"" << num(axis_y + 12) << "\" text-anchor=\"middle\">"
       << num(seconds * frac) << "</text>\n";
  }
  os << "<text x=\"" << num(kLeft + plot_w / 2) << "\" y=\"" << num(axis_y + 28)
     << "\" text-anchor=\"middle\">time (s)</text>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace ecg12r::harness
