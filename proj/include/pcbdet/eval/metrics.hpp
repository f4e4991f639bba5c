#pragma once

#include <map>
#include <string>
#include <vector>

#include "pcbdet/geometry.hpp"

namespace pcbdet::eval {

// Ground truth / prediction carriers for evaluation. `image_id` keys match
// detections to the right scene.
struct GtBox {
  std::string image_id;
  Box box;
  int class_id = 0;
};

struct PredBox {
  std::string image_id;
  Box box;
  int class_id = 0;
  double score = 0.0;
};

// intersection / union, in [0,1]; contract error on degenerate boxes.
double iou(const Box& a, const Box& b);

// Average precision for one class at one IoU threshold, 101-point
// interpolated (COCO convention). Predictions are ranked by descending score
// with ties kept in input order; each is greedily matched to the
// highest-IoU unmatched ground truth of the same class in its image
// (IoU ties -> lowest gt index).
double average_precision(const std::vector<PredBox>& predictions,
                         const std::vector<GtBox>& gt, int class_id,
                         double iou_thresh);

inline std::vector<double> coco_iou_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back(0.50 + 0.05 * i);
  return t;
}

struct EvalReport {
  std::vector<int> class_ids;              // classes with ground truth
  std::vector<double> thresholds;          // the 10 COCO thresholds
  // ap[c][t] for class_ids[c] at thresholds[t]
  std::vector<std::vector<double>> ap;
  double map = 0.0;                        // mAP@[0.5:0.95]
  double map50 = 0.0;                      // AP at IoU 0.50, class-mean
  long long n_images = 0;
  long long n_gt = 0;
  long long n_predictions = 0;
  std::vector<std::pair<std::string, std::string>> config_echo;

  std::string to_text() const;             // structured, parseable
  std::string to_table() const;            // aligned human-readable
};

// Parses the structured text emitted by EvalReport::to_text (used by
// cmd_bench to pull mAP values for NetScore).
EvalReport parse_eval_report(const std::string& text);

// COCO mAP over thresholds 0.50..0.95 step 0.05. Classes absent from the
// ground truth are excluded from the mean. Throws ConfigError when gt is
// empty.
EvalReport coco_map(const std::vector<PredBox>& predictions,
                    const std::vector<GtBox>& gt, int num_classes);

// NetScore with fixed exponents alpha=2, beta=1, gamma=1 and measured
// inference seconds standing in for the MAC term:
//   (100 * map)^2 / (mparams * inference_seconds)
struct NetScoreInputs {
  double map = 0.0;                // in [0,1]
  double mparams = 0.0;            // > 0
  double inference_seconds = 0.0;  // > 0
};

double netscore(const NetScoreInputs& in);

}  // namespace pcbdet::eval
