#include "relumo/evaluate.hpp"

#include <cstdio>
#include <map>
#include <set>

#include "relumo/camera.hpp"
#include "relumo/error.hpp"
#include "relumo/image_io.hpp"

namespace relumo {

std::string relit_output_stem(const std::filesystem::path& source_image,
                              int target_condition) {
  return source_image.stem().string() + "_to_" + std::to_string(target_condition);
}

EvalTable evaluate_cross_relighting(const std::filesystem::path& cameras_json,
                                    const std::filesystem::path& outputs_dir) {
  const std::vector<CameraRecord> records = load_camera_records(cameras_json);
  if (records.empty()) throw Error("evaluate: scene has no views");
  std::vector<Image> images;
  std::vector<CameraView> cams;
  std::vector<Mask> masks;
  std::set<int> conditions;
  for (const auto& r : records) {
    if (!r.condition)
      throw IoError("evaluate: view '" + r.image.string() + "' has no condition");
    conditions.insert(*r.condition);
    images.push_back(load_image(r.image));
    cams.push_back(load_camera(r));
    masks.push_back(r.mask.empty() ? full_mask(images.back()) : load_mask(r.mask));
  }

  EvalTable table;
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (int k : conditions) {
      if (k == *records[i].condition) continue;
      EvalCell cell{i, *records[i].condition, k, std::nullopt};
      const std::string stem = relit_output_stem(records[i].image, k);
      std::filesystem::path out = outputs_dir / (stem + ".pfm");
      if (!std::filesystem::exists(out)) out = outputs_dir / (stem + ".png");
      if (!std::filesystem::exists(out)) {
        table.missing.push_back((outputs_dir / (stem + ".pfm")).string());
        table.cells.push_back(cell);
        continue;
      }
      std::vector<std::pair<Image, CameraView>> targets;
      for (std::size_t j = 0; j < records.size(); ++j)
        if (*records[j].condition == k) targets.emplace_back(images[j], cams[j]);
      const GroundTruth gt = make_gt_relit(targets, cams[i]);
      const Mask mask = gt.mask & masks[i];
      Image estimate = load_image(out);
      require_same_size(estimate, gt.image, "evaluate output");
      if (mask.count() > 0)
        cell.report = evaluate_pair(estimate, gt.image, mask);
      else
        table.missing.push_back(out.string() + " (no overlap)");
      table.cells.push_back(cell);
    }
  }

  for (int c : conditions) {
    EvalRow row{c, std::nullopt, std::nullopt, 0, 0};
    double l1 = 0.0, s = 0.0;
    for (const auto& cell : table.cells) {
      if (cell.source_condition != c) continue;
      if (!cell.report) {
        ++row.missing;
        continue;
      }
      l1 += cell.report->l1;
      s += cell.report->ssim;
      ++row.cells;
    }
    if (row.cells > 0) {
      row.l1 = l1 / row.cells;
      row.ssim = s / row.cells;
    }
    table.rows.push_back(row);
  }
  return table;
}

std::string to_csv(const EvalTable& table) {
  std::string out = "condition,l1,ssim\n";
  char buf[64];
  for (const auto& row : table.rows) {
    out += std::to_string(row.condition);
    for (const auto& v : {row.l1, row.ssim}) {
      if (v) {
        std::snprintf(buf, sizeof buf, ",%.6f", *v);
        out += buf;
      } else {
        out += ",NA";
      }
    }
    out += "\n";
  }
  return out;
}

}  // namespace relumo
