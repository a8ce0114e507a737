#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "ecg12r/error.hpp"
#include "ecg12r/random.hpp"
#include "ecg12r/record.hpp"
#include "ecg12r/wfdb.hpp"
#include "synthetic.hpp"

using namespace ecg12r;
using namespace ecg12r::wfdb;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an ecg12r::Error");
  return ErrorCode::IoError;
}

const std::string kTwoSignal =
    "rec1 2 1000 8\n"
    "a.dat 16 2000(0)/mV 16 0 0 0 0 i\n"
    "a.dat 16 2000(0)/mV 16 0 0 0 0 ii\n";

}  // namespace

TEST_SUITE("wfdb") {
  TEST_CASE("header with full signal fields") {
    const RecordHeader h = parse_header(kTwoSignal);
    CHECK(h.record_name == "rec1");
    CHECK(h.n_signals == 2);
    CHECK(h.sampling_frequency == 1000.0);
    CHECK(h.n_samples == 8);
    REQUIRE(h.signals.size() == 2);
    for (const auto& s : h.signals) {
      CHECK(s.adc_gain == 2000.0);
      CHECK(s.adc_baseline == 0);
      CHECK(s.format == Format::Fmt16);
    }
    CHECK(h.signals[0].description == "i");
    CHECK(h.signals[1].description == "ii");
  }

  TEST_CASE("gain token without baseline or units takes the defaults") {
    const RecordHeader h = parse_header("rec1 2 1000 8\na.dat 16 200\na.dat 16 200\n");
    for (const auto& s : h.signals) {
      CHECK(s.adc_gain == 200.0);
      CHECK(s.adc_baseline == 0);
      CHECK(s.units_label == "mV");
      CHECK(s.adc_resolution == 16);
    }
  }

  TEST_CASE("format 212 defaults to 12-bit resolution") {
    const RecordHeader h = parse_header("r 1 257 4\nr.dat 212\n");
    CHECK(h.signals[0].format == Format::Fmt212);
    CHECK(h.signals[0].adc_resolution == 12);
    CHECK(h.signals[0].adc_gain == 200.0);
  }

  TEST_CASE("unsupported formats and multi-segment records") {
    CHECK(code_of([] { parse_header("rec1 2 1000 8\na.dat 8 200\na.dat 8 200\n"); }) ==
          ErrorCode::UnsupportedFormat);
    CHECK(code_of([] { parse_header("rec1/2 2 1000 8\na.dat 16\na.dat 16\n"); }) == ErrorCode::UnsupportedFormat);
  }

  TEST_CASE("comments are kept verbatim") {
    const RecordHeader h = parse_header(kTwoSignal + "# age: 81\n# Reason for admission: Healthy control\n");
    REQUIRE(h.comments.size() == 2);
    CHECK(h.comments[1] == "# Reason for admission: Healthy control");
  }

  TEST_CASE("generated valid headers parse and field count violations are malformed") {
    RandomStream rng(7);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n_sig = 1 + rng.below(15);
      const std::size_t n = 1 + rng.below(100000);
      const int fmt = rng.below(2) ? 16 : 212;
      std::string text = "r" + std::to_string(trial) + ' ' + std::to_string(n_sig) + " 1000 " + std::to_string(n);
      if (rng.below(2)) text += " 10:21:00";
      text += '\n';
      for (std::size_t s = 0; s < n_sig; ++s) {
        text += "r.dat " + std::to_string(fmt);
        const auto optional_fields = rng.below(8);
        if (optional_fields > 0) text += ' ' + std::to_string(1 + rng.below(5000)) + "(" +
                                         std::to_string(static_cast<int>(rng.below(200)) - 100) + ")/mV";
        if (optional_fields > 1) text += fmt == 16 ? " 16" : " 12";
        if (optional_fields > 2) text += " 0";
        if (optional_fields > 3) text += " -5";
        if (optional_fields > 4) text += " 1234";
        if (optional_fields > 5) text += " 0";
        if (optional_fields > 6) text += " lead name " + std::to_string(s);
        text += '\n';
      }
      const RecordHeader h = parse_header(text);
      CHECK(h.signals.size() == n_sig);

      // One signal line short, one too many, and a truncated record line.
      const auto last_line = text.rfind('\n', text.size() - 2);
      CHECK(code_of([&] { parse_header(text.substr(0, last_line + 1)); }) == ErrorCode::MalformedHeader);
      CHECK(code_of([&] { parse_header(text + "r.dat 16\n"); }) == ErrorCode::MalformedHeader);
      CHECK(code_of([&] { parse_header("r 1 1000\nr.dat 16\n"); }) == ErrorCode::MalformedHeader);
    }
    CHECK(code_of([] { parse_header(""); }) == ErrorCode::MalformedHeader);
    CHECK(code_of([] { parse_header("r 1 x 10\nr.dat 16\n"); }) == ErrorCode::MalformedHeader);
  }

  TEST_CASE("fmt16 decoding is little-endian two's complement") {
    const std::vector<std::uint8_t> bytes = {0xFF, 0xFF};
    const AdcMatrix adc = decode_samples(bytes, Format::Fmt16, 1, 1);
    CHECK(adc(0, 0) == -1);
  }

  TEST_CASE("fmt212 hand-decoded fixtures") {
    const std::vector<std::uint8_t> a = {0x34, 0x12, 0x56};
    const AdcMatrix adc = decode_samples(a, Format::Fmt212, 1, 2);
    CHECK(adc(0, 0) == 564);
    CHECK(adc(1, 0) == 342);

    const std::vector<std::uint8_t> b = {0x00, 0x08, 0x00};
    const AdcMatrix min = decode_samples(b, Format::Fmt212, 1, 2);
    CHECK(min(0, 0) == -2048);
    CHECK(min(1, 0) == 0);
  }

  TEST_CASE("fmt212 with two interleaved signals and an odd value count") {
    const std::vector<std::int32_t> values = {1, -1, 2047, -2048, 7};
    const auto bytes = testing::encode_fmt212(values);
    CHECK(bytes.size() == encoded_size(Format::Fmt212, values.size()));
    const AdcMatrix adc = decode_samples(bytes, Format::Fmt212, 5, 1);
    CHECK(adc.values == values);
  }

  TEST_CASE("round trips over the full sample range") {
    RandomStream rng(11);
    std::vector<std::int32_t> v16(10000), v212(10000);
    for (auto& v : v16) v = static_cast<std::int32_t>(rng.below(65536)) - 32768;
    for (auto& v : v212) v = static_cast<std::int32_t>(rng.below(4096)) - 2048;
    v16[0] = -32768, v16[1] = 32767, v212[0] = -2048, v212[1] = 2047;
    CHECK(decode_samples(testing::encode_fmt16(v16), Format::Fmt16, 2, 5000).values == v16);
    CHECK(decode_samples(testing::encode_fmt212(v212), Format::Fmt212, 2, 5000).values == v212);
  }

  TEST_CASE("short data is a truncated file") {
    const std::vector<std::uint8_t> bytes = {0x00, 0x01, 0x02};
    CHECK(code_of([&] { decode_samples(bytes, Format::Fmt16, 1, 2); }) == ErrorCode::TruncatedFile);
    CHECK(code_of([&] { decode_samples(bytes, Format::Fmt212, 1, 3); }) == ErrorCode::TruncatedFile);
  }

  TEST_CASE("physical units") {
    auto one = [](std::int32_t adc, double gain, int baseline) {
      AdcMatrix m{1, 1, {adc}};
      SignalSpec spec;
      spec.adc_gain = gain;
      spec.adc_baseline = baseline;
      return to_physical_units(m, std::span<const SignalSpec>(&spec, 1))(0, 0);
    };
    CHECK(one(2047, 2000, 0) == doctest::Approx(1.0235).epsilon(1e-12));
    CHECK(one(1024, 1024, 1024) == 0.0);
    CHECK(one(0, 200, -100) == doctest::Approx(0.5).epsilon(1e-12));
  }

  TEST_CASE("physical units invert exactly for integer-derived values") {
    RandomStream rng(3);
    std::vector<SignalSpec> specs(3);
    specs[0].adc_gain = 2000, specs[0].adc_baseline = 0;
    specs[1].adc_gain = 200, specs[1].adc_baseline = -100;
    specs[2].adc_gain = 1024, specs[2].adc_baseline = 1024;
    AdcMatrix adc{1000, 3, std::vector<std::int32_t>(3000)};
    for (auto& v : adc.values) v = static_cast<std::int32_t>(rng.below(65536)) - 32768;
    const Matrix mv = to_physical_units(adc, specs);
    for (std::size_t k = 0; k < 1000; ++k) {
      for (std::size_t c = 0; c < 3; ++c) {
        const auto back = std::lround(mv(k, c) * specs[c].adc_gain + specs[c].adc_baseline);
        REQUIRE(back == adc(k, c));
      }
    }
  }

  TEST_CASE("diagnosis keywords") {
    auto group = [](std::string line) { return classify_diagnosis(std::vector<std::string>{line}); };
    CHECK(group("# Reason for admission: Myocardial infarction") == DiagnosticGroup::MI);
    CHECK(group("# Reason for admission: Healthy control") == DiagnosticGroup::HC);
    CHECK(group("# Reason for admission: n/a") == DiagnosticGroup::ND);
    CHECK(group("# Reason for admission: Bundle branch block") == DiagnosticGroup::BB);
    CHECK(group("# Reason for admission: Cardiomyopathy") == DiagnosticGroup::HY);
    CHECK(group("# Reason for admission: Heart failure (NYHA 2)") == DiagnosticGroup::HY);
    CHECK(group("# Reason for admission: Valvular heart disease") == DiagnosticGroup::VA);
    CHECK(group("# Reason for admission: Unstable angina") == DiagnosticGroup::VA);
    CHECK(group("# Reason for admission: Palpitation") == DiagnosticGroup::VA);
    CHECK(classify_diagnosis(std::vector<std::string>{"# age: 81"}) == DiagnosticGroup::ND);
    CHECK(classify_diagnosis(std::vector<std::string>{}) == DiagnosticGroup::ND);
    CHECK_FALSE(diagnosis_rules().empty());
  }

  TEST_CASE("load_record requires I, II and V2") {
    const auto dir = testing::scratch_dir("wfdb_missing");
    Matrix two(20, 2, 0.25);
    testing::WriteOptions w;
    w.descriptions = {"i", "ii"};
    testing::write_record(dir, "r2", two, 1000, w);
    const Manifest m = build_manifest(dir, Database::PTBDB);
    REQUIRE(m.entries.size() == 1);
    CHECK(code_of([&] { load_record(m.entries[0]); }) == ErrorCode::MissingLead);
  }

  TEST_CASE("load_record indexes 12 standard leads and ignores extras") {
    const auto dir = testing::scratch_dir("wfdb_leads");
    testing::SyntheticOptions opts;
    opts.seconds = 1.0;
    const Matrix leads = testing::synthetic_leads(opts);
    testing::write_record(dir, "twelve", leads, 1000);
    testing::WriteOptions extra;
    extra.extra_channels = 3;
    extra.format = Format::Fmt212;
    extra.gain = 200;
    testing::write_record(dir, "fifteen", leads, 1000, extra);
    const Manifest m = build_manifest(dir, Database::PTBDB);
    REQUIRE(m.entries.size() == 2);

    const Record fifteen = load_record(m.entries[0]);
    CHECK(fifteen.header.n_signals == 15);
    CHECK(fifteen.lead_count() == 12);
    const Record twelve = load_record(m.entries[1]);
    CHECK(twelve.lead_count() == 12);
    CHECK(twelve.n_samples() == leads.rows());
    // Fmt16 at gain 1000 quantizes to 1 uV.
    const auto v2 = twelve.lead(LeadName::V2);
    for (std::size_t k = 0; k < v2.size(); ++k) REQUIRE(std::abs(v2[k] - leads(k, 7)) <= 0.5e-3 + 1e-12);
  }

  TEST_CASE("manifest groups, ordering and JSON round trip") {
    const auto dir = testing::scratch_dir("wfdb_manifest");
    Matrix leads(10, 12, 0.0);
    testing::WriteOptions mi;
    mi.comments = {"# Reason for admission: Myocardial infarction"};
    testing::write_record(dir / "patient002", "s0002", leads, 1000, mi);
    testing::write_record(dir / "patient001", "s0001", leads, 1000);
    std::ofstream(dir / "broken.hea") << "broken 2 1000\n";

    std::vector<std::string> skipped;
    const Manifest m = build_manifest(dir, Database::PTBDB, &skipped);
    REQUIRE(m.entries.size() == 2);
    CHECK(skipped.size() == 1);
    CHECK(m.entries[0].record_id == "patient001/s0001");
    CHECK(m.entries[0].group == DiagnosticGroup::ND);
    CHECK(m.entries[1].group == DiagnosticGroup::MI);
    CHECK(m.entries[1].data_paths.size() == 1);
    CHECK(manifest_from_json(manifest_to_json(m)) == m);

    const Manifest incart = build_manifest(dir, Database::INCARTDB);
    for (const auto& e : incart.entries) CHECK(e.group == DiagnosticGroup::UNGROUPED);
  }
}
