#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cseg/labels.hpp"

namespace cseg {

/// One case of the dataset: four modalities and, when present, the reference labels.
struct Case {
  ModalityStack images;
  std::optional<LabelMap> truth;
};

/// `<root>/<case_id>/<case_id>_<suffix>.nii.gz`
std::filesystem::path case_file(const std::filesystem::path& root, const std::string& case_id,
                                std::string_view suffix);

/// Sorted ids of subdirectories of `root` holding a flair volume.
std::vector<std::string> list_cases(const std::filesystem::path& root);

Case load_case(const std::filesystem::path& root, const std::string& case_id, bool require_truth);

/// Writes images (float32) and optional labels (uint8) in the dataset layout.
void save_case(const std::filesystem::path& root, const ModalityStack& images,
               const LabelMap* truth);

}  // namespace cseg
