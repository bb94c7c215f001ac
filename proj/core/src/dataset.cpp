#include "cseg/dataset.hpp"

#include <algorithm>

#include "cseg/nifti.hpp"

namespace cseg {

namespace fs = std::filesystem;

fs::path case_file(const fs::path& root, const std::string& case_id, std::string_view suffix) {
  return root / case_id / (case_id + "_" + std::string(suffix) + ".nii.gz");
}

std::vector<std::string> list_cases(const fs::path& root) {
  if (!fs::is_directory(root)) throw Error("dataset: not a directory: " + root.string());
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    const std::string id = entry.path().filename().string();
    if (fs::exists(case_file(root, id, "flair"))) ids.push_back(id);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

Case load_case(const fs::path& root, const std::string& case_id, bool require_truth) {
  Case c;
  c.images.case_id = case_id;
  for (Modality m : kModalities) {
    NiftiImage img = read_nifti(case_file(root, case_id, modality_name(m)));
    if (m == Modality::Flair) c.images.spacing = img.spacing;
    c.images[m] = std::move(img.data);
  }
  c.images.validate();

  const fs::path seg = case_file(root, case_id, "seg");
  if (fs::exists(seg)) {
    LabelMap lm;
    lm.labels = read_nifti_labels(seg, &lm.spacing);
    require_same_shape(lm.shape(), c.images.shape(), ("case " + case_id).c_str());
    if (!validate_hierarchy(lm).valid) {
      throw Error("dataset: labels outside {0,1,2,4} in " + seg.string());
    }
    c.truth = std::move(lm);
  } else if (require_truth) {
    throw Error("dataset: missing segmentation " + seg.string());
  }
  return c;
}

void save_case(const fs::path& root, const ModalityStack& images, const LabelMap* truth) {
  images.validate();
  fs::create_directories(root / images.case_id);
  for (Modality m : kModalities) {
    write_nifti(case_file(root, images.case_id, modality_name(m)), images[m], images.spacing,
                NiftiType::Float32);
  }
  if (truth) {
    write_nifti_labels(case_file(root, images.case_id, "seg"), truth->labels, truth->spacing);
  }
}

}  // namespace cseg
