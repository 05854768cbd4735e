// rooftop: command-line front end for tiling, detection, evaluation and
// overlay rendering. Every failure exits with status 1 and a single
// "rooftop: error: ..." line on stderr.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rooftop/evaluation.hpp"
#include "rooftop/fixtures.hpp"
#include "rooftop/heads.hpp"
#include "rooftop/io/atomic_file.hpp"
#include "rooftop/io/config.hpp"
#include "rooftop/io/manifest.hpp"
#include "rooftop/io/pnm.hpp"
#include "rooftop/io/records.hpp"
#include "rooftop/io/rle.hpp"
#include "rooftop/render.hpp"
#include "rooftop/tiling.hpp"

namespace fs = std::filesystem;
using namespace rooftop;

namespace {

constexpr const char* kManifestName = "manifest.txt";

// ---------------------------------------------------------------- tile

struct TileArgs {
  std::string input;
  int size = 512;
  int overlap = 0;
  std::string out_dir;
};

int run_tile(const TileArgs& a) {
  const ImagePatch image = io::read_pnm(a.input);
  const TileGrid grid(image.width(), image.height(), a.size, a.overlap);
  const fs::path in(a.input);
  const std::string ext = image.channels() == 3 ? "ppm" : "pgm";
  const auto manifest = io::make_manifest(in.stem().string(), ext, grid);

  fs::create_directories(a.out_dir);
  for (const auto& e : manifest.tiles) {
    io::write_pnm(fs::path(a.out_dir) / e.file,
                  extract_tile(image, grid, e.tile.row, e.tile.col));
  }
  io::write_manifest(fs::path(a.out_dir) / kManifestName, manifest);
  std::cout << "wrote " << manifest.tiles.size() << " tiles (" << grid.rows()
            << "x" << grid.cols() << ") to " << a.out_dir << "\n";
  return 0;
}

// ---------------------------------------------------------------- split

struct SplitArgs {
  std::string manifest;
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  std::string out_dir;
};

int run_split(const SplitArgs& a) {
  const auto m = io::read_manifest(a.manifest);
  std::vector<std::string> files;
  for (const auto& e : m.tiles) files.push_back(e.file);
  const auto [train, test] = split_dataset(files, a.train_fraction, a.seed);

  const fs::path dir =
      a.out_dir.empty() ? fs::path(a.manifest).parent_path() : fs::path(a.out_dir);
  if (!dir.empty()) fs::create_directories(dir);
  auto write_list = [](const fs::path& p, const std::vector<std::string>& v) {
    io::write_atomically(p, [&](std::ostream& os) {
      for (const auto& s : v) os << s << '\n';
    });
  };
  write_list(dir / "train.txt", train);
  write_list(dir / "test.txt", test);
  std::cout << "train " << train.size() << ", test " << test.size() << "\n";
  return 0;
}

// ---------------------------------------------------------------- detect

struct DetectArgs {
  std::string input;
  std::string config;
  std::string out;
  std::string oracle_gt;
  std::string image_id;
  unsigned threads = 1;
};

std::vector<Box> instance_boxes(const BinaryMask& truth) {
  std::vector<Box> boxes;
  for (const auto& g : connected_components(truth)) boxes.push_back(g.box);
  return boxes;
}

// Global ground-truth boxes seen from one tile, clipped to its valid region.
std::vector<Box> boxes_in_tile(const std::vector<Box>& global, const Tile& t) {
  const Box region(t.x_offset, t.y_offset, t.x_offset + t.valid_width,
                   t.y_offset + t.valid_height);
  std::vector<Box> out;
  for (const Box& b : global) {
    if (intersection_area(b, region) <= 0.0) continue;
    const Box c(std::max(b.x1(), region.x1()), std::max(b.y1(), region.y1()),
                std::min(b.x2(), region.x2()), std::min(b.y2(), region.y2()));
    out.push_back(c.translated(-t.x_offset, -t.y_offset));
  }
  return out;
}

std::vector<Detection> detect_patch(const ImagePatch& patch,
                                    const PipelineConfig& cfg,
                                    const std::optional<std::vector<Box>>& truth) {
  const ToyBackbone backbone;
  if (truth) {
    const OracleRpnScorer scorer(*truth);
    const OracleHead head(*truth, cfg.mask_size);
    return run_patch_pipeline(patch, backbone, scorer, head, cfg);
  }
  const ToyRpnScorer scorer;
  const ToyHead head(0.5, 10.0, cfg.mask_size);
  return run_patch_pipeline(patch, backbone, scorer, head, cfg);
}

int run_detect(const DetectArgs& a) {
  const io::DetectConfig cfg =
      a.config.empty() ? io::DetectConfig{} : io::read_config(a.config);
  cfg.validate();

  std::optional<std::vector<Box>> truth;
  if (!a.oracle_gt.empty()) truth = instance_boxes(io::read_mask(a.oracle_gt));

  std::vector<io::DetectionRecord> records;
  const fs::path in(a.input);
  if (fs::is_directory(in)) {
    const auto m = io::read_manifest(in / kManifestName);
    if (truth) {
      const BinaryMask gt = io::read_mask(a.oracle_gt);
      if (gt.width() != m.grid.image_width() ||
          gt.height() != m.grid.image_height()) {
        throw InvalidArgument("oracle ground truth size does not match the tiled image");
      }
    }
    std::vector<TileDetections> per_tile(m.tiles.size());
    std::vector<std::exception_ptr> errors(m.tiles.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < m.tiles.size(); i = next++) {
        try {
          const auto& e = m.tiles[i];
          const ImagePatch patch = io::read_pnm(in / e.file);
          std::optional<std::vector<Box>> local;
          if (truth) local = boxes_in_tile(*truth, e.tile);
          per_tile[i] = {e.tile, detect_patch(patch, cfg.pipeline, local)};
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    };
    const unsigned n = std::max(1u, a.threads);
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    pool.clear();
    for (const auto& ep : errors) {
      if (ep) std::rethrow_exception(ep);
    }
    const std::string id = a.image_id.empty() ? m.source : a.image_id;
    for (auto& d : stitch(per_tile, cfg.stitch_nms_iou)) {
      records.push_back({id, std::move(d)});
    }
  } else {
    const ImagePatch patch = io::read_pnm(in);
    const std::string id = a.image_id.empty() ? in.stem().string() : a.image_id;
    for (auto& d : detect_patch(patch, cfg.pipeline, truth)) {
      records.push_back({id, std::move(d)});
    }
  }

  io::write_records(a.out, records);
  std::cout << "wrote " << records.size() << " detections to " << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string pred;
  std::string gt;
  double iou = 0.5;
  std::string kind = "mask";
  std::string out;
};

int run_eval(const EvalArgs& a) {
  if (!(a.iou >= 0.0 && a.iou <= 1.0)) {
    throw InvalidArgument("--iou must lie in [0, 1]");
  }
  const IouKind kind = iou_kind_from_string(a.kind);
  const auto records = io::read_records(a.pred);

  std::map<std::string, std::vector<Detection>> preds;
  for (const auto& r : records) preds[r.image].push_back(r.detection);

  std::map<std::string, fs::path> gt_files;
  const fs::path gt(a.gt);
  if (fs::is_directory(gt)) {
    for (const auto& entry : fs::directory_iterator(gt)) {
      if (entry.is_regular_file() && entry.path().extension() == ".pgm") {
        gt_files[entry.path().stem().string()] = entry.path();
      }
    }
    for (const auto& [image, _] : preds) {
      if (!gt_files.count(image)) {
        throw InvalidArgument("no ground truth mask for image '" + image +
                              "' in " + a.gt);
      }
    }
  } else {
    if (preds.size() > 1) {
      throw InvalidArgument("single ground-truth file given but predictions "
                            "cover several images");
    }
    const std::string id =
        preds.empty() ? gt.stem().string() : preds.begin()->first;
    gt_files[id] = gt;
  }

  std::vector<EvalReport> reports;
  PixelConfusion pixels;
  nlohmann::ordered_json per_image = nlohmann::ordered_json::object();
  for (const auto& [image, path] : gt_files) {
    const BinaryMask truth = io::read_mask(path);
    const auto instances = connected_components(truth);
    const auto& p = preds[image];
    for (const auto& d : p) {
      const bool box_ok = d.box.x2() <= truth.width() && d.box.y2() <= truth.height() &&
                          d.box.x1() >= 0.0 && d.box.y1() >= 0.0;
      const bool mask_ok =
          !d.mask || (d.mask->x >= 0 && d.mask->y >= 0 &&
                      d.mask->x + d.mask->mask.width() <= truth.width() &&
                      d.mask->y + d.mask->mask.height() <= truth.height());
      if (!box_ok || !mask_ok) {
        throw InvalidArgument("detection for '" + image + "' lies outside the " +
                              std::to_string(truth.width()) + "x" +
                              std::to_string(truth.height()) + " ground truth");
      }
    }
    const EvalReport r = evaluate_image(p, instances, a.iou, kind);
    reports.push_back(r);

    BinaryMask predicted(truth.width(), truth.height());
    for (const auto& d : p) {
      if (!d.mask) continue;
      const auto& pm = *d.mask;
      for (int y = 0; y < pm.mask.height(); ++y) {
        for (int x = 0; x < pm.mask.width(); ++x) {
          const int gx = pm.x + x, gy = pm.y + y;
          if (pm.mask.at(x, y) && gx >= 0 && gy >= 0 && gx < truth.width() &&
              gy < truth.height()) {
            predicted.set(gx, gy);
          }
        }
      }
    }
    const PixelConfusion c = pixel_confusion(predicted, truth);
    pixels.tp += c.tp;
    pixels.tn += c.tn;
    pixels.fp += c.fp;
    pixels.fn += c.fn;
    per_image[image] = {{"tp", r.tp}, {"fp", r.fp}, {"fn", r.fn}};
  }
  const EvalReport total = reports.empty()
                               ? precision_recall_f1(0, 0, 0, a.iou, kind)
                               : aggregate(reports);

  nlohmann::ordered_json j;
  j["iou_threshold"] = total.iou_threshold;
  j["iou_kind"] = std::string(to_string(total.iou_kind));
  j["tp"] = total.tp;
  j["fp"] = total.fp;
  j["fn"] = total.fn;
  j["precision"] = total.precision;
  j["recall"] = total.recall;
  j["f1"] = total.f1;
  j["undefined_ratio_value"] = 0.0;
  j["pixels"] = {{"tp", pixels.tp}, {"tn", pixels.tn}, {"fp", pixels.fp},
                 {"fn", pixels.fn}};
  j["images"] = per_image;
  const std::string text = j.dump(2) + "\n";
  if (!a.out.empty()) {
    io::write_atomically(a.out, [&](std::ostream& os) { os << text; });
  }
  std::cout << text;
  return 0;
}

// ---------------------------------------------------------------- overlay

struct OverlayArgs {
  std::string image;
  std::string pred;
  std::string out;
  std::string image_id;
};

int run_overlay(const OverlayArgs& a) {
  const ImagePatch image = io::read_pnm(a.image);
  const auto records = io::read_records(a.pred);
  const std::string id =
      a.image_id.empty() ? fs::path(a.image).stem().string() : a.image_id;
  std::vector<Detection> dets;
  for (const auto& r : records) {
    if (r.image == id) dets.push_back(r.detection);
  }
  io::write_pnm(a.out, render_overlay(image, dets));
  std::cout << "rendered " << dets.size() << " detections to " << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------- rle

struct RleArgs {
  std::string input;
  std::string out;
};

int run_rle_encode(const RleArgs& a) {
  const auto r = io::rle_encode(io::read_mask(a.input));
  const nlohmann::ordered_json j{
      {"width", r.width}, {"height", r.height}, {"runs", r.runs}};
  io::write_atomically(a.out, [&](std::ostream& os) { os << j.dump() << '\n'; });
  return 0;
}

int run_rle_decode(const RleArgs& a) {
  io::RleMask r;
  try {
    const auto j = nlohmann::json::parse(io::read_text_file(a.input));
    r.width = j.at("width").get<int>();
    r.height = j.at("height").get<int>();
    r.runs = j.at("runs").get<std::vector<std::uint64_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw CorruptData(a.input + ": malformed RLE: " + e.what());
  }
  io::write_mask(a.out, io::rle_decode(r));
  return 0;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::uint64_t seed = 0;
  SceneOptions scene;
  std::string out_image;
  std::string out_mask;
};

int run_synth(const SynthArgs& a) {
  const auto s = make_synthetic_scene(a.seed, a.scene);
  io::write_pnm(a.out_image, s.image);
  io::write_mask(a.out_mask, s.truth);
  std::cout << "scene with " << s.buildings.size() << " buildings\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rooftop detection toolkit: tiling, detection, evaluation"};
  app.require_subcommand(1);

  TileArgs tile;
  auto* tile_cmd = app.add_subcommand("tile", "Cut a raster into fixed-size tiles");
  tile_cmd->add_option("--input", tile.input, "Source PPM/PGM raster")->required();
  tile_cmd->add_option("--size", tile.size, "Tile side in pixels")->capture_default_str();
  tile_cmd->add_option("--overlap", tile.overlap, "Tile overlap in pixels")->capture_default_str();
  tile_cmd->add_option("--out-dir", tile.out_dir, "Output directory")->required();

  SplitArgs split;
  auto* split_cmd = app.add_subcommand("split", "Seeded train/test split of a tile manifest");
  split_cmd->add_option("--manifest", split.manifest, "Grid manifest")->required();
  split_cmd->add_option("--train-fraction", split.train_fraction)->capture_default_str();
  split_cmd->add_option("--seed", split.seed)->capture_default_str();
  split_cmd->add_option("--out-dir", split.out_dir, "Defaults to the manifest directory");

  DetectArgs detect;
  auto* detect_cmd = app.add_subcommand("detect", "Run the detection pipeline");
  detect_cmd->add_option("--input", detect.input, "Patch raster or tile directory")->required();
  detect_cmd->add_option("--config", detect.config, "Pipeline config (defaults if omitted)");
  detect_cmd->add_option("--out", detect.out, "Detection records (JSON lines)")->required();
  detect_cmd->add_option("--oracle-gt", detect.oracle_gt,
                         "Ground-truth mask driving the oracle scorer/head fixtures");
  detect_cmd->add_option("--image-id", detect.image_id, "Image identifier for records");
  detect_cmd->add_option("--threads", detect.threads, "Worker threads for tiles")->capture_default_str();

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score detections against ground truth");
  eval_cmd->add_option("--pred", eval.pred, "Detection records")->required();
  eval_cmd->add_option("--gt", eval.gt, "Ground-truth mask PGM or directory of <image>.pgm")->required();
  eval_cmd->add_option("--iou", eval.iou)->capture_default_str();
  eval_cmd->add_option("--kind", eval.kind, "box or mask")->capture_default_str();
  eval_cmd->add_option("--out", eval.out, "Also write the report here");

  OverlayArgs overlay;
  auto* overlay_cmd = app.add_subcommand("overlay", "Draw masks and boxes over an image");
  overlay_cmd->add_option("--image", overlay.image)->required();
  overlay_cmd->add_option("--pred", overlay.pred)->required();
  overlay_cmd->add_option("--out", overlay.out)->required();
  overlay_cmd->add_option("--image-id", overlay.image_id, "Defaults to the image file stem");

  RleArgs rle;
  auto* rle_cmd = app.add_subcommand("rle", "Mask format conversion");
  rle_cmd->require_subcommand(1);
  auto* rle_enc = rle_cmd->add_subcommand("encode", "PGM mask to RLE JSON");
  rle_enc->add_option("--input", rle.input)->required();
  rle_enc->add_option("--out", rle.out)->required();
  auto* rle_dec = rle_cmd->add_subcommand("decode", "RLE JSON to PGM mask");
  rle_dec->add_option("--input", rle.input)->required();
  rle_dec->add_option("--out", rle.out)->required();

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic rooftop scene");
  synth_cmd->add_option("--seed", synth.seed)->capture_default_str();
  synth_cmd->add_option("--width", synth.scene.width)->capture_default_str();
  synth_cmd->add_option("--height", synth.scene.height)->capture_default_str();
  synth_cmd->add_option("--min-buildings", synth.scene.min_buildings)->capture_default_str();
  synth_cmd->add_option("--max-buildings", synth.scene.max_buildings)->capture_default_str();
  synth_cmd->add_option("--out-image", synth.out_image)->required();
  synth_cmd->add_option("--out-mask", synth.out_mask)->required();

  auto* config_cmd = app.add_subcommand("config", "Print the default pipeline config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "rooftop: error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (*tile_cmd) return run_tile(tile);
    if (*split_cmd) return run_split(split);
    if (*detect_cmd) return run_detect(detect);
    if (*eval_cmd) return run_eval(eval);
    if (*overlay_cmd) return run_overlay(overlay);
    if (*rle_enc) return run_rle_encode(rle);
    if (*rle_dec) return run_rle_decode(rle);
    if (*synth_cmd) return run_synth(synth);
    if (*config_cmd) {
      io::write_config(std::cout, io::DetectConfig{});
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "rooftop: error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
