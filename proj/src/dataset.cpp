#include "canvolve/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>

#include "canvolve/volio.hpp"

namespace canvolve {

std::uint32_t file_crc32(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatErrorCode::io, "cannot open " + path.string());
  const std::string bytes{std::istreambuf_iterator<char>(in),
                          std::istreambuf_iterator<char>()};
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()),
            static_cast<uInt>(bytes.size())));
}

void write_dataset(const Dataset& data, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw FormatError(FormatErrorCode::io,
                      "cannot create " + dir.string() + ": " + ec.message());
  }
  std::ostringstream manifest;
  manifest << "# schema-version 1\n"
           << "case_id,image,labels,image_crc32,labels_crc32\n";
  for (const auto& s : data) {
    const auto image = s.id + "_image.vol3d";
    const auto labels = s.id + "_labels.vol3d";
    write_vol3d(s.volume, dir / image);
    write_vol3d(s.labels, dir / labels);
    manifest << s.id << ',' << image << ',' << labels << ',' << std::hex
             << std::setw(8) << std::setfill('0') << file_crc32(dir / image) << ','
             << std::setw(8) << file_crc32(dir / labels) << std::dec << '\n';
  }
  std::ofstream out(dir / kManifestName, std::ios::trunc);
  if (!out) throw FormatError(FormatErrorCode::io, "cannot write manifest in " + dir.string());
  out << manifest.str();
}

Dataset load_dataset(const std::filesystem::path& dir, int num_classes) {
  struct Entry {
    std::string id, image, labels, image_crc, labels_crc;
  };
  std::vector<Entry> entries;
  const auto manifest = dir / kManifestName;
  if (std::filesystem::exists(manifest)) {
    std::ifstream in(manifest);
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      if (!header) {
        header = true;
        continue;
      }
      std::istringstream row(line);
      Entry e;
      std::getline(row, e.id, ',');
      std::getline(row, e.image, ',');
      std::getline(row, e.labels, ',');
      std::getline(row, e.image_crc, ',');
      std::getline(row, e.labels_crc, ',');
      entries.push_back(e);
    }
  } else if (std::filesystem::is_directory(dir)) {
    const std::string suffix = "_image.vol3d";
    for (const auto& f : std::filesystem::directory_iterator(dir)) {
      const auto name = f.path().filename().string();
      if (name.size() > suffix.size() &&
          name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
        const auto id = name.substr(0, name.size() - suffix.size());
        entries.push_back({id, name, id + "_labels.vol3d", {}, {}});
      }
    }
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.id < b.id; });
  } else {
    throw FormatError(FormatErrorCode::io, "no dataset directory " + dir.string());
  }

  auto verify = [&](const std::string& file, const std::string& expected) {
    if (expected.empty()) return;
    std::ostringstream actual;
    actual << std::hex << std::setw(8) << std::setfill('0') << file_crc32(dir / file);
    if (actual.str() != expected) {
      throw FormatError(FormatErrorCode::checksum,
                        file + " has crc32 " + actual.str() + ", manifest says " + expected);
    }
  };
  Dataset data;
  for (const auto& e : entries) {
    verify(e.image, e.image_crc);
    verify(e.labels, e.labels_crc);
    Sample s{e.id, read_vol3d_volume(dir / e.image),
             read_vol3d_labels(dir / e.labels, num_classes)};
    require_same_grid(s.volume.extents, s.labels.extents(),
                      ("case " + e.id).c_str());
    data.push_back(std::move(s));
  }
  if (num_classes == 0) {
    int k = 0;
    for (const auto& s : data) k = std::max(k, s.labels.num_classes);
    for (auto& s : data) s.labels.num_classes = k;
  }
  return data;
}

}  // namespace canvolve
