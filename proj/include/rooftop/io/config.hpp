#pragma once

// Flat "key = value" pipeline configuration. Blank lines and '#' comments
// are ignored; unknown or repeated keys are errors.
//
//   anchor.scales = 64,128,256
//   anchor.ratios = 0.5,1,2
//   anchor.stride = 16
//   proposal.score_threshold = 0.05
//   proposal.pre_nms_top_k = 6000
//   proposal.nms_iou = 0.7
//   proposal.post_nms_top_n = 300
//   roi.box_output_size = 7
//   roi.mask_output_size = 14
//   roi.sampling_points = 2
//   detection.score_threshold = 0.7
//   detection.nms_iou = 0.5
//   mask.size = 28
//   mask.threshold = 0.5
//   stitch.nms_iou = 0.5

#include <array>
#include <charconv>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include "rooftop/error.hpp"
#include "rooftop/heads.hpp"
#include "rooftop/io/atomic_file.hpp"

namespace rooftop::io {

struct DetectConfig {
  PipelineConfig pipeline;
  double stitch_nms_iou = 0.5;

  void validate() const {
    pipeline.validate();
    if (!(stitch_nms_iou >= 0.0 && stitch_nms_iou <= 1.0)) {
      throw InvalidArgument("stitch.nms_iou must lie in [0, 1]");
    }
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  text = trim(text);
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw InvalidArgument("config key '" + std::string(key) +
                          "': cannot parse '" + std::string(text) + "'");
  }
  return v;
}

inline std::array<double, 3> parse_triple(std::string_view key,
                                          std::string_view text) {
  std::array<double, 3> out{};
  std::size_t n = 0;
  while (true) {
    const auto comma = text.find(',');
    if (n == 3) {
      throw InvalidArgument("config key '" + std::string(key) +
                            "' needs exactly 3 values");
    }
    out[n++] = parse_number<double>(key, text.substr(0, comma));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (n != 3) {
    throw InvalidArgument("config key '" + std::string(key) +
                          "' needs exactly 3 values");
  }
  return out;
}

using Setter = std::function<void(DetectConfig&, std::string_view)>;

inline const std::map<std::string, Setter, std::less<>>& config_setters() {
  static const std::map<std::string, Setter, std::less<>> setters = {
      {"anchor.scales",
       [](DetectConfig& c, std::string_view v) {
         c.pipeline.anchors.scales = parse_triple("anchor.scales", v);
       }},
      {"anchor.ratios",
       [](DetectConfig& c, std::string_view v) {
         c.pipeline.anchors.ratios = parse_triple("anchor.ratios", v);
       }},
      {"anchor.stride",
       [](DetectConfig& c, std::string_view v) {
         c.pipeline.anchors.stride = parse_number<double>("anchor.stride", v);
       }},
      {"proposal.score_threshold",
       [](DetectConfig& c, std::string_view v) {
         c.pipeline.proposal.score_threshold =
             parse_number<double>("proposal.score_threshold", v);
       }},
      {"proposal.pre_nms_top_k",
       [](DetectConfig& c, std::string_view v) {
         c.pipeline.proposal.pre_nms_top_k =
             parse_number<std::size_t>("proposal.pre_nms_top_k", v);
       }},
      {"proposal.nms_iou",
       [](DetectConfig& c, std::string_view v) {
         c.pipeline.proposal.nms_iou = parse_number<double>("proposal.nms_iou", v);
       }},
      {"proposal.post_nms_top_n",
       [](DetectConfig& c, std::string_view v) {
         c.pipeline.proposal.post_nms_top_n =
             parse_number<std::size_t>("proposal.post_nms_top_n", v);
       }},
      {"roi.box_output_size",
       [](DetectConfig& c, std::string_view v) {
         c.pipeline.box_roi.output_size = parse_number<int>("roi.box_output_size", v);
       }},
      {"roi.mask_output_size",
       [](DetectConfig& c, std::string_view v) {
         c.pipeline.mask_roi.output_size =
             parse_number<int>("roi.mask_output_size", v);
       }},
      {"roi.sampling_points",
       [](DetectConfig& c, std::string_view v) {
         const int n = parse_number<int>("roi.sampling_points", v);
         c.pipeline.box_roi.sampling_points = n;
         c.pipeline.mask_roi.sampling_points = n;
       }},
      {"detection.score_threshold",
       [](DetectConfig& c, std::string_view v) {
         c.pipeline.detection_score_threshold =
             parse_number<double>("detection.score_threshold", v);
       }},
      {"detection.nms_iou",
       [](DetectConfig& c, std::string_view v) {
         c.pipeline.detection_nms_iou = parse_number<double>("detection.nms_iou", v);
       }},
      {"mask.size",
       [](DetectConfig& c, std::string_view v) {
         c.pipeline.mask_size = parse_number<int>("mask.size", v);
       }},
      {"mask.threshold",
       [](DetectConfig& c, std::string_view v) {
         c.pipeline.mask_binarize_threshold =
             parse_number<double>("mask.threshold", v);
       }},
      {"stitch.nms_iou",
       [](DetectConfig& c, std::string_view v) {
         c.stitch_nms_iou = parse_number<double>("stitch.nms_iou", v);
       }},
  };
  return setters;
}

}  // namespace detail

inline DetectConfig parse_config(std::istream& is) {
  DetectConfig cfg;
  std::set<std::string, std::less<>> seen;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw InvalidArgument("config line " + std::to_string(lineno) +
                            ": expected 'key = value'");
    }
    const auto key = detail::trim(line.substr(0, eq));
    const auto value = detail::trim(line.substr(eq + 1));
    const auto& setters = detail::config_setters();
    const auto it = setters.find(key);
    if (it == setters.end()) {
      throw InvalidArgument("config line " + std::to_string(lineno) +
                            ": unknown key '" + std::string(key) + "'");
    }
    if (!seen.insert(std::string(key)).second) {
      throw InvalidArgument("config line " + std::to_string(lineno) +
                            ": duplicate key '" + std::string(key) + "'");
    }
    it->second(cfg, value);
  }
  cfg.validate();
  return cfg;
}

inline DetectConfig read_config(const std::filesystem::path& path) {
  std::istringstream is(read_text_file(path));
  try {
    return parse_config(is);
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

namespace detail {

// Shortest text that parses back to the same double.
inline std::string shortest(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace detail

inline void write_config(std::ostream& os, const DetectConfig& c) {
  using detail::shortest;
  const auto& p = c.pipeline;
  auto triple = [](const std::array<double, 3>& a) {
    return shortest(a[0]) + ',' + shortest(a[1]) + ',' + shortest(a[2]);
  };
  os << "anchor.scales = " << triple(p.anchors.scales) << '\n'
     << "anchor.ratios = " << triple(p.anchors.ratios) << '\n'
     << "anchor.stride = " << shortest(p.anchors.stride) << '\n'
     << "proposal.score_threshold = " << shortest(p.proposal.score_threshold) << '\n'
     << "proposal.pre_nms_top_k = " << p.proposal.pre_nms_top_k << '\n'
     << "proposal.nms_iou = " << shortest(p.proposal.nms_iou) << '\n'
     << "proposal.post_nms_top_n = " << p.proposal.post_nms_top_n << '\n'
     << "roi.box_output_size = " << p.box_roi.output_size << '\n'
     << "roi.mask_output_size = " << p.mask_roi.output_size << '\n'
     << "roi.sampling_points = " << p.box_roi.sampling_points << '\n'
     << "detection.score_threshold = " << shortest(p.detection_score_threshold) << '\n'
     << "detection.nms_iou = " << shortest(p.detection_nms_iou) << '\n'
     << "mask.size = " << p.mask_size << '\n'
     << "mask.threshold = " << shortest(p.mask_binarize_threshold) << '\n'
     << "stitch.nms_iou = " << shortest(c.stitch_nms_iou) << '\n';
}

}  // namespace rooftop::io
