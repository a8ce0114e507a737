#include "synthetic.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

#include "ecg12r/random.hpp"

namespace ecg12r::testing {

std::vector<std::uint8_t> encode_fmt16(std::span<const std::int32_t> interleaved) {
  std::vector<std::uint8_t> out;
  out.reserve(2 * interleaved.size());
  for (std::int32_t v : interleaved) {
    const auto u = static_cast<std::uint16_t>(static_cast<std::int16_t>(v));
    out.push_back(static_cast<std::uint8_t>(u & 0xFF));
    out.push_back(static_cast<std::uint8_t>(u >> 8));
  }
  return out;
}

std::vector<std::uint8_t> encode_fmt212(std::span<const std::int32_t> interleaved) {
  std::vector<std::uint8_t> out;
  out.reserve(3 * (interleaved.size() + 1) / 2);
  for (std::size_t i = 0; i < interleaved.size(); i += 2) {
    const auto s0 = static_cast<std::uint16_t>(interleaved[i] & 0xFFF);
    out.push_back(static_cast<std::uint8_t>(s0 & 0xFF));
    if (i + 1 < interleaved.size()) {
      const auto s1 = static_cast<std::uint16_t>(interleaved[i + 1] & 0xFFF);
      out.push_back(static_cast<std::uint8_t>(((s0 >> 8) & 0x0F) | ((s1 >> 4) & 0xF0)));
      out.push_back(static_cast<std::uint8_t>(s1 & 0xFF));
    } else {
      out.push_back(static_cast<std::uint8_t>((s0 >> 8) & 0x0F));
    }
  }
  return out;
}

std::vector<std::uint8_t> encode(wfdb::Format format, std::span<const std::int32_t> interleaved) {
  return format == wfdb::Format::Fmt16 ? encode_fmt16(interleaved) : encode_fmt212(interleaved);
}

std::array<double, 5> nonlinear_precordial(double i, double ii, double v2) {
  return {
      0.2 * v2 + 1.5 * std::tanh(2.5 * v2) * std::tanh(2.5 * v2),    // V1
      0.2 * v2 + 3.0 * i * v2,                                        // V3
      0.2 * ii + 2.5 * (v2 * v2 - 0.6 * i * i),                       // V4
      0.1 * i + 0.8 * std::sin(6.0 * ii),                             // V5
      0.1 * i + 1.2 * std::tanh(4.0 * (i - ii)) * std::tanh(3.0 * v2),  // V6
  };
}

namespace {

struct Wave {
  double offset;  // seconds from the R peak
  double width;   // Gaussian sigma, seconds
  std::array<double, 3> amp;
};

// P, Q, R, S, T for the three source components.
constexpr std::array<Wave, 5> kWaves = {{
    {-0.20, 0.025, {0.10, 0.12, 0.06}},
    {-0.035, 0.010, {-0.10, 0.05, 0.25}},
    {0.0, 0.012, {0.90, 0.55, -0.45}},
    {0.035, 0.012, {-0.20, 0.20, 0.70}},
    {0.26, 0.050, {0.25, 0.20, -0.15}},
}};

}  // namespace

Matrix synthetic_leads(const SyntheticOptions& options) {
  RandomStream rng = RandomStream::derive(options.seed, "synthetic-ecg");
  const std::size_t n = static_cast<std::size_t>(std::llround(options.seconds * options.fs));

  // Per-record morphology and projection, so records differ.
  std::array<Wave, 5> waves = kWaves;
  for (auto& w : waves) {
    for (auto& a : w.amp) a *= rng.uniform(0.8, 1.2);
  }
  const double proj[3][3] = {
      {1.0 + rng.uniform(-0.1, 0.1), 0.15, 0.05},
      {0.55, 0.85 + rng.uniform(-0.1, 0.1), 0.10},
      {-0.25, 0.20, 0.95 + rng.uniform(-0.1, 0.1)},
  };

  std::vector<std::array<double, 3>> src(n, {0.0, 0.0, 0.0});
  const double rr_mean = 60.0 / options.heart_rate_bpm;
  double r_time = 0.35;
  std::size_t beat = 0;
  while (r_time < options.seconds + 0.5) {
    const double scale = rng.uniform(0.95, 1.05);
    for (const auto& w : waves) {
      const double centre = r_time + w.offset;
      const std::size_t lo = static_cast<std::size_t>(std::max(0.0, (centre - 5 * w.width) * options.fs));
      const std::size_t hi = std::min(n, static_cast<std::size_t>(std::max(0.0, (centre + 5 * w.width) * options.fs)));
      for (std::size_t k = lo; k < hi; ++k) {
        const double t = static_cast<double>(k) / options.fs;
        const double g = std::exp(-0.5 * (t - centre) * (t - centre) / (w.width * w.width));
        for (int c = 0; c < 3; ++c) src[k][c] += scale * w.amp[c] * g;
      }
    }
    r_time += rr_mean * (1.0 + 0.04 * std::sin(0.9 * static_cast<double>(beat)) + rng.uniform(-0.02, 0.02));
    ++beat;
  }

  Matrix out(n, 12);
  for (std::size_t k = 0; k < n; ++k) {
    double v[3];
    for (int r = 0; r < 3; ++r) {
      v[r] = proj[r][0] * src[k][0] + proj[r][1] * src[k][1] + proj[r][2] * src[k][2];
      if (options.noise_mv > 0.0) v[r] += options.noise_mv * rng.normal();
    }
    const double i = v[0], ii = v[1], v2 = v[2];
    out(k, 0) = i;
    out(k, 1) = ii;
    out(k, 2) = ii - i;
    out(k, 3) = -(i + ii) / 2.0;
    out(k, 4) = i - ii / 2.0;
    out(k, 5) = ii - i / 2.0;
    out(k, 7) = v2;
    std::array<double, 5> pre;
    if (options.nonlinear_precordial) {
      pre = nonlinear_precordial(i, ii, v2);
    } else {
      pre = {0.8 * v2 - 0.3 * i, 1.1 * v2 + 0.2 * ii, 0.6 * v2 + 0.7 * ii, 0.9 * i + 0.3 * ii - 0.2 * v2,
             0.8 * i + 0.2 * ii};
    }
    out(k, 6) = pre[0];
    for (int c = 0; c < 4; ++c) out(k, 8 + c) = pre[1 + c];
  }
  return out;
}

void write_record(const std::filesystem::path& dir, const std::string& name, const Matrix& leads, double fs,
                  const WriteOptions& options) {
  std::vector<std::string> names = options.descriptions;
  if (names.empty()) {
    for (LeadName lead : kStandardLeads) {
      std::string s(to_string(lead));
      for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
      names.push_back(s);
    }
    const char* extras[] = {"vx", "vy", "vz"};
    for (std::size_t e = 0; e < options.extra_channels; ++e) names.push_back(extras[e % 3]);
  }
  const std::size_t n_sig = names.size();
  const std::size_t n = leads.rows();

  std::vector<std::int32_t> adc(n * n_sig);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t c = 0; c < n_sig; ++c) {
      // Extra channels reuse the first columns; they only need to exist.
      const double mv = leads(k, c % leads.cols());
      adc[k * n_sig + c] = static_cast<std::int32_t>(std::lround(mv * options.gain + options.baseline));
    }
  }

  std::filesystem::create_directories(dir);
  const std::string dat = name + ".dat";
  {
    const auto bytes = encode(options.format, adc);
    std::ofstream out(dir / dat, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  std::ostringstream hea;
  hea << name << ' ' << n_sig << ' ' << fs << ' ' << n << '\n';
  const int fmt = static_cast<int>(options.format);
  const int res = options.format == wfdb::Format::Fmt16 ? 16 : 12;
  for (std::size_t c = 0; c < n_sig; ++c) {
    hea << dat << ' ' << fmt << ' ' << options.gain << '(' << options.baseline << ")/mV " << res << " 0 "
        << (n ? adc[c] : 0) << " 0 0 " << names[c] << '\n';
  }
  for (const auto& line : options.comments) hea << line << '\n';
  std::ofstream out(dir / (name + ".hea"), std::ios::binary);
  out << hea.str();
}

Record make_record(const std::string& record_id, const Matrix& leads12, double fs, DiagnosticGroup group) {
  Record rec;
  rec.record_id = record_id;
  rec.header.record_name = record_id;
  rec.header.n_signals = 12;
  rec.header.sampling_frequency = fs;
  rec.header.n_samples = leads12.rows();
  for (LeadName lead : kStandardLeads) {
    wfdb::SignalSpec spec;
    spec.file_name = record_id + ".dat";
    spec.description = std::string(to_string(lead));
    rec.header.signals.push_back(spec);
  }
  rec.samples_mv = leads12;
  rec.group = group;
  index_leads(rec);
  return rec;
}

Manifest write_synthetic_database(const std::filesystem::path& dir, std::size_t count, std::uint64_t seed,
                                  double seconds) {
  for (std::size_t r = 0; r < count; ++r) {
    SyntheticOptions opts;
    opts.seed = RandomStream::derive(seed, "record", r).key();
    opts.seconds = seconds;
    opts.heart_rate_bpm = 60.0 + 5.0 * static_cast<double>(r % 4);
    WriteOptions w;
    w.comments = {"# age: 50", "# sex: female", "# Reason for admission: Healthy control"};
    write_record(dir, "s" + std::to_string(r + 1), synthetic_leads(opts), opts.fs, w);
  }
  return build_manifest(dir, Database::PTBDB);
}

std::filesystem::path scratch_dir(const std::string& label) {
  static std::size_t counter = 0;
  const auto base = std::filesystem::temp_directory_path() /
                    ("ecg12r_" + label + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(base);
  std::filesystem::create_directories(base);
  return base;
}

}  // namespace ecg12r::testing
