#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "relumo/metrics.hpp"

namespace relumo {

// Relit outputs are looked up as <outputs>/<source stem>_to_<k>.pfm, then .png.
std::string relit_output_stem(const std::filesystem::path& source_image,
                              int target_condition);

struct EvalCell {
  std::size_t source_view = 0;
  int source_condition = 0;
  int target_condition = 0;
  std::optional<EvalReport> report;  // empty when the output is missing
};

struct EvalRow {
  int condition = 0;
  std::optional<double> l1;    // mean over this source condition's cells
  std::optional<double> ssim;
  int cells = 0;
  int missing = 0;
};

struct EvalTable {
  std::vector<EvalRow> rows;  // ascending condition
  std::vector<EvalCell> cells;
  std::vector<std::string> missing;  // expected output files not found
};

// For every view of the scene (cameras.json with a "condition" per view) and
// every other lighting condition k, scores the method's relit output against
// the mean cross-projection of all condition-k photographs into that view.
EvalTable evaluate_cross_relighting(const std::filesystem::path& cameras_json,
                                    const std::filesystem::path& outputs_dir);

// condition,l1,ssim with NA for rows that have no scored cell.
std::string to_csv(const EvalTable& table);

}  // namespace relumo
