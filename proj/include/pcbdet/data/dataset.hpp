#pragma once

#include <string>
#include <vector>

#include "pcbdet/data/image.hpp"
#include "pcbdet/geometry.hpp"

namespace pcbdet::data {

struct Annotation {
  Box box;
  int class_id = 0;
};

enum class BoardRole { kTrainVal, kTest, kExcluded };

std::string role_name(BoardRole r);
BoardRole role_from_name(const std::string& s);

// One source board: an image plus its component annotations and its split
// role (test boards form the strict holdout).
struct BoardRecord {
  std::string board_id;
  std::string image_path;
  int width = 0, height = 0;
  std::vector<Annotation> annotations;
  BoardRole role = BoardRole::kTrainVal;
};

enum class Split { kTrain, kVal, kTest };

std::string split_name(Split s);
Split split_from_name(const std::string& s);

// One square patch cut from a board; annotations are in patch coordinates.
struct PatchRecord {
  std::string patch_id;
  std::string board_id;
  int x0 = 0, y0 = 0;
  int size = 0;
  std::vector<Annotation> annotations;
  Split split = Split::kTrain;
};

// Line-delimited annotation records:
//   image_id width height [x_min y_min x_max y_max class_id]*
// Pixel coordinates, origin top-left, half-open boxes.
struct AnnotationRecord {
  std::string image_id;
  int width = 0, height = 0;
  std::vector<Annotation> annotations;
};

std::vector<AnnotationRecord> read_annotation_file(const std::string& path);
void write_annotation_file(const std::string& path,
                           const std::vector<AnnotationRecord>& records);

// Board roles file: one "board_id role" line per board
// (role in {train_val, test, excluded}; boards absent default to train_val).
std::vector<std::pair<std::string, BoardRole>> read_roles_file(
    const std::string& path);
void write_roles_file(
    const std::string& path,
    const std::vector<std::pair<std::string, BoardRole>>& roles);

}  // namespace pcbdet::data
