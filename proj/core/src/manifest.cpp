#include <algorithm>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "ecg12r/error.hpp"
#include "ecg12r/record.hpp"
#include "json.hpp"

namespace ecg12r {
namespace fs = std::filesystem;
using nlohmann::json;

const ManifestEntry* Manifest::find(std::string_view record_id) const {
  for (const auto& e : entries) {
    if (e.record_id == record_id) return &e;
  }
  return nullptr;
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::uint8_t> read_binary_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

namespace {

std::vector<std::string> distinct_files(const wfdb::RecordHeader& header) {
  std::vector<std::string> files;
  for (const auto& s : header.signals) {
    if (std::find(files.begin(), files.end(), s.file_name) == files.end()) files.push_back(s.file_name);
  }
  return files;
}

}  // namespace

Manifest build_manifest(const fs::path& data_dir, Database database, std::vector<std::string>* skipped) {
  if (!fs::is_directory(data_dir)) throw Error(ErrorCode::IoError, "not a directory: " + data_dir.string());

  std::vector<fs::path> headers;
  for (const auto& item : fs::recursive_directory_iterator(data_dir)) {
    if (item.is_regular_file() && item.path().extension() == ".hea") headers.push_back(item.path());
  }
  std::sort(headers.begin(), headers.end());

  Manifest manifest;
  for (const auto& hea : headers) {
    wfdb::RecordHeader header;
    try {
      header = wfdb::parse_header(read_text_file(hea));
    } catch (const Error& e) {
      if (skipped) skipped->push_back(hea.string() + ": " + e.what());
      continue;
    }
    ManifestEntry entry;
    entry.record_id = fs::relative(hea, data_dir).replace_extension().generic_string();
    entry.database = database;
    entry.group = database == Database::PTBDB ? wfdb::classify_diagnosis(header.comments)
                                              : DiagnosticGroup::UNGROUPED;
    entry.header_path = hea;
    for (const auto& f : distinct_files(header)) entry.data_paths.push_back(hea.parent_path() / f);
    manifest.entries.push_back(std::move(entry));
  }
  std::sort(manifest.entries.begin(), manifest.entries.end(),
            [](const auto& a, const auto& b) { return a.record_id < b.record_id; });
  return manifest;
}

std::string manifest_to_json(const Manifest& manifest) {
  json arr = json::array();
  for (const auto& e : manifest.entries) {
    json paths = json::array();
    for (const auto& p : e.data_paths) paths.push_back(p.generic_string());
    arr.push_back({{"record_id", e.record_id},
                   {"database", std::string(to_string(e.database))},
                   {"group", std::string(to_string(e.group))},
                   {"header_path", e.header_path.generic_string()},
                   {"data_paths", paths}});
  }
  return arr.dump(2) + "\n";
}

Manifest manifest_from_json(std::string_view json_text) {
  Manifest manifest;
  try {
    const json arr = json::parse(json_text);
    if (!arr.is_array()) throw Error(ErrorCode::IoError, "manifest must be a JSON array");
    for (const auto& item : arr) {
      ManifestEntry e;
      e.record_id = item.at("record_id").get<std::string>();
      const auto db = parse_database(item.at("database").get<std::string>());
      const auto group = parse_group(item.at("group").get<std::string>());
      if (!db || !group) throw Error(ErrorCode::IoError, "bad database/group for " + e.record_id);
      e.database = *db;
      e.group = *group;
      e.header_path = item.at("header_path").get<std::string>();
      for (const auto& p : item.at("data_paths")) e.data_paths.emplace_back(p.get<std::string>());
      for (const auto& other : manifest.entries) {
        if (other.record_id == e.record_id && other.database == e.database) {
          throw Error(ErrorCode::IoError, "duplicate record_id " + e.record_id);
        }
      }
      manifest.entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::IoError, std::string("invalid manifest JSON: ") + e.what());
  }
  return manifest;
}

void save_manifest(const Manifest& manifest, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << manifest_to_json(manifest);
}

Manifest load_manifest(const fs::path& path) { return manifest_from_json(read_text_file(path)); }

}  // namespace ecg12r
