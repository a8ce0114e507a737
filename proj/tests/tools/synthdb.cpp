// Writes a synthetic WFDB database plus manifest.json for the CLI tests.
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "ecg12r/record.hpp"
#include "synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Synthetic 12-lead WFDB database"};
  std::filesystem::path out;
  std::size_t count = 3;
  std::uint64_t seed = 1;
  double seconds = 12.0;
  std::string truncate;
  app.add_option("--out", out)->required();
  app.add_option("--count", count);
  app.add_option("--seed", seed);
  app.add_option("--seconds", seconds);
  app.add_option("--truncate", truncate, "Record whose signal file is cut short");
  CLI11_PARSE(app, argc, argv);

  std::filesystem::remove_all(out);
  const auto manifest = ecg12r::testing::write_synthetic_database(out, count, seed, seconds);
  if (!truncate.empty()) {
    const auto* entry = manifest.find(truncate);
    if (!entry) {
      std::cerr << "no record " << truncate << '\n';
      return 1;
    }
    std::filesystem::resize_file(entry->data_paths.front(), 100);
  }
  ecg12r::save_manifest(manifest, out / "manifest.json");
  std::cout << manifest.entries.size() << " records in " << out.string() << '\n';
  return 0;
}
