#pragma once

// Line-delimited JSON detection records, one object per line:
//   {"image":"scene","label":"building","score":0.93,
//    "box":[x1,y1,x2,y2],"mask_rle":{"x":..,"y":..,"width":..,"height":..,
//    "runs":[..]}}
// mask_rle is null for box-only detections.

#include <filesystem>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rooftop/detection.hpp"
#include "rooftop/error.hpp"
#include "rooftop/io/atomic_file.hpp"
#include "rooftop/io/rle.hpp"

namespace rooftop::io {

struct DetectionRecord {
  std::string image;
  Detection detection;

  friend bool operator==(const DetectionRecord&, const DetectionRecord&) = default;
};

inline std::string to_json_line(const DetectionRecord& rec) {
  using nlohmann::ordered_json;
  const Detection& d = rec.detection;
  ordered_json j;
  j["image"] = rec.image;
  j["label"] = std::string(to_string(d.label));
  j["score"] = d.score;
  j["box"] = {d.box.x1(), d.box.y1(), d.box.x2(), d.box.y2()};
  if (d.mask) {
    const RleMask r = rle_encode(d.mask->mask);
    j["mask_rle"] = ordered_json{{"x", d.mask->x},
                                 {"y", d.mask->y},
                                 {"width", r.width},
                                 {"height", r.height},
                                 {"runs", r.runs}};
  } else {
    j["mask_rle"] = nullptr;
  }
  return j.dump();
}

inline DetectionRecord from_json_line(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw CorruptData(std::string("malformed detection record: ") + e.what());
  }
  try {
    DetectionRecord rec;
    rec.image = j.at("image").get<std::string>();
    Detection& d = rec.detection;
    d.label = label_from_string(j.at("label").get<std::string>());
    d.score = j.at("score").get<double>();
    const auto& b = j.at("box");
    if (!b.is_array() || b.size() != 4) {
      throw CorruptData("detection box must have 4 coordinates");
    }
    d.box = Box(b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                b[3].get<double>());
    const auto it = j.find("mask_rle");
    if (it != j.end() && !it->is_null()) {
      RleMask r;
      r.width = it->at("width").get<int>();
      r.height = it->at("height").get<int>();
      r.runs = it->at("runs").get<std::vector<std::uint64_t>>();
      d.mask = PlacedMask{it->at("x").get<int>(), it->at("y").get<int>(),
                          rle_decode(r)};
    }
    validate(d);
    return rec;
  } catch (const nlohmann::json::exception& e) {
    throw CorruptData(std::string("malformed detection record: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw CorruptData(std::string("invalid detection record: ") + e.what());
  }
}

inline void write_records(std::ostream& os,
                          std::span<const DetectionRecord> records) {
  for (const auto& r : records) os << to_json_line(r) << '\n';
}

inline void write_records(const std::filesystem::path& path,
                          std::span<const DetectionRecord> records) {
  write_atomically(path, [&](std::ostream& os) { write_records(os, records); });
}

inline std::vector<DetectionRecord> read_records(std::istream& is) {
  std::vector<DetectionRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(from_json_line(line));
    } catch (const CorruptData& e) {
      throw CorruptData("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<DetectionRecord> read_records(
    const std::filesystem::path& path) {
  std::istringstream is(read_text_file(path));
  try {
    return read_records(is);
  } catch (const CorruptData& e) {
    throw CorruptData(path.string() + ": " + e.what());
  }
}

}  // namespace rooftop::io
