#include "pcbdet/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

namespace pcbdet::eval {

double iou(const Box& a, const Box& b) {
  if (!a.valid() || !b.valid())
    throw ConfigError("iou: degenerate box " +
                      (a.valid() ? b.str() : a.str()));
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  return inter / uni;
}

double average_precision(const std::vector<PredBox>& predictions,
                         const std::vector<GtBox>& gt, int class_id,
                         double iou_thresh) {
  // Ground truth of this class, grouped by image; index within `cls_gt`
  // is the tie-break identity.
  std::vector<const GtBox*> cls_gt;
  std::map<std::string, std::vector<int>> gt_by_image;
  for (const auto& g : gt)
    if (g.class_id == class_id) {
      gt_by_image[g.image_id].push_back(static_cast<int>(cls_gt.size()));
      cls_gt.push_back(&g);
    }
  if (cls_gt.empty()) return 0.0;

  std::vector<int> order;
  for (int i = 0; i < static_cast<int>(predictions.size()); ++i)
    if (predictions[i].class_id == class_id) order.push_back(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return predictions[a].score > predictions[b].score;
  });

  std::vector<char> matched(cls_gt.size(), 0);
  std::vector<char> is_tp(order.size(), 0);
  for (std::size_t r = 0; r < order.size(); ++r) {
    const PredBox& p = predictions[order[r]];
    auto it = gt_by_image.find(p.image_id);
    if (it == gt_by_image.end()) continue;
    int best = -1;
    double best_iou = 0.0;
    for (int gi : it->second) {
      if (matched[gi]) continue;
      const double v = iou(p.box, cls_gt[gi]->box);
      if (v >= iou_thresh && v > best_iou) {
        best_iou = v;
        best = gi;
      }
    }
    if (best >= 0) {
      matched[best] = 1;
      is_tp[r] = 1;
    }
  }

  // Precision/recall points in rank order, then the 101-point interpolated
  // area (running max of precision from high recall down).
  const double n_gt = static_cast<double>(cls_gt.size());
  std::vector<double> precision(order.size()), recall(order.size());
  int tp = 0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    tp += is_tp[r];
    precision[r] = static_cast<double>(tp) / static_cast<double>(r + 1);
    recall[r] = static_cast<double>(tp) / n_gt;
  }

  // recall is non-decreasing in rank, so one sweep from the tail maintains
  // interp[g] = max precision over points with recall >= g/100.
  std::vector<double> interp(101, 0.0);
  {
    double running = 0.0;
    int r = static_cast<int>(order.size()) - 1;
    for (int g = 100; g >= 0; --g) {
      const double target = g / 100.0;
      while (r >= 0 && recall[r] >= target) {
        running = std::max(running, precision[r]);
        --r;
      }
      interp[g] = running;
    }
  }
  double ap = 0.0;
  for (int g = 0; g <= 100; ++g) ap += interp[g];
  return ap / 101.0;
}

EvalReport coco_map(const std::vector<PredBox>& predictions,
                    const std::vector<GtBox>& gt, int num_classes) {
  if (gt.empty())
    throw ConfigError("coco_map: no ground truth boxes in this split");
  EvalReport rep;
  rep.thresholds = coco_iou_thresholds();

  std::set<int> gt_classes;
  std::set<std::string> images;
  for (const auto& g : gt) {
    gt_classes.insert(g.class_id);
    images.insert(g.image_id);
  }
  for (const auto& p : predictions) images.insert(p.image_id);
  for (int c = 0; c < num_classes; ++c)
    if (gt_classes.count(c)) rep.class_ids.push_back(c);

  rep.ap.assign(rep.class_ids.size(),
                std::vector<double>(rep.thresholds.size(), 0.0));
  for (std::size_t ci = 0; ci < rep.class_ids.size(); ++ci)
    for (std::size_t ti = 0; ti < rep.thresholds.size(); ++ti)
      rep.ap[ci][ti] = average_precision(predictions, gt, rep.class_ids[ci],
                                         rep.thresholds[ti]);

  // mean over classes per threshold, then mean over thresholds
  double total = 0.0;
  for (std::size_t ti = 0; ti < rep.thresholds.size(); ++ti) {
    double cls_mean = 0.0;
    for (std::size_t ci = 0; ci < rep.class_ids.size(); ++ci)
      cls_mean += rep.ap[ci][ti];
    cls_mean /= static_cast<double>(rep.class_ids.size());
    if (ti == 0) rep.map50 = cls_mean;
    total += cls_mean;
  }
  rep.map = total / static_cast<double>(rep.thresholds.size());

  rep.n_images = static_cast<long long>(images.size());
  rep.n_gt = static_cast<long long>(gt.size());
  rep.n_predictions = static_cast<long long>(predictions.size());
  return rep;
}

double netscore(const NetScoreInputs& in) {
  if (in.map < 0.0 || in.map > 1.0)
    throw ConfigError("netscore: map must be in [0,1]");
  if (in.mparams <= 0.0 || in.inference_seconds <= 0.0)
    throw ConfigError("netscore: mparams and inference_seconds must be > 0");
  const double acc = 100.0 * in.map;
  return acc * acc / (in.mparams * in.inference_seconds);
}

namespace {
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace

std::string EvalReport::to_text() const {
  std::ostringstream os;
  os << "pcbdet-eval-report v1\n";
  os << "map " << fmt(map) << "\n";
  os << "map50 " << fmt(map50) << "\n";
  os << "images " << n_images << "\n";
  os << "gt_boxes " << n_gt << "\n";
  os << "predictions " << n_predictions << "\n";
  for (const auto& [k, v] : config_echo) os << "config " << k << " " << v << "\n";
  for (std::size_t ci = 0; ci < class_ids.size(); ++ci) {
    os << "ap class " << class_ids[ci];
    for (std::size_t ti = 0; ti < thresholds.size(); ++ti)
      os << " " << fmt(ap[ci][ti]);
    os << "\n";
  }
  return os.str();
}

std::string EvalReport::to_table() const {
  std::ostringstream os;
  char line[256];
  os << "class      ";
  for (double t : thresholds) {
    std::snprintf(line, sizeof(line), "AP@%.2f  ", t);
    os << line;
  }
  os << "mean\n";
  for (std::size_t ci = 0; ci < class_ids.size(); ++ci) {
    std::snprintf(line, sizeof(line), "%-10d ", class_ids[ci]);
    os << line;
    double mean = 0.0;
    for (std::size_t ti = 0; ti < thresholds.size(); ++ti) {
      std::snprintf(line, sizeof(line), "%7.4f  ", ap[ci][ti]);
      os << line;
      mean += ap[ci][ti];
    }
    std::snprintf(line, sizeof(line), "%7.4f\n",
                  mean / static_cast<double>(thresholds.size()));
    os << line;
  }
  std::snprintf(line, sizeof(line),
                "mAP@[0.5:0.95] = %.4f   mAP@0.5 = %.4f   (images=%lld, "
                "gt=%lld, preds=%lld)\n",
                map, map50, n_images, n_gt, n_predictions);
  os << line;
  return os.str();
}

EvalReport parse_eval_report(const std::string& text) {
  EvalReport rep;
  rep.thresholds = coco_iou_thresholds();
  std::istringstream is(text);
  std::string line;
  bool header_ok = false;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "pcbdet-eval-report") {
      header_ok = true;
    } else if (key == "map") {
      ls >> rep.map;
    } else if (key == "map50") {
      ls >> rep.map50;
    } else if (key == "images") {
      ls >> rep.n_images;
    } else if (key == "gt_boxes") {
      ls >> rep.n_gt;
    } else if (key == "predictions") {
      ls >> rep.n_predictions;
    } else if (key == "ap") {
      std::string sub;
      int cls = 0;
      ls >> sub >> cls;
      rep.class_ids.push_back(cls);
      std::vector<double> row;
      double v;
      while (ls >> v) row.push_back(v);
      rep.ap.push_back(row);
    } else if (key == "config") {
      std::string k, v;
      ls >> k;
      std::getline(ls, v);
      rep.config_echo.emplace_back(k, v);
    }
  }
  if (!header_ok)
    throw ConfigError("parse_eval_report: missing 'pcbdet-eval-report' header");
  return rep;
}

}  // namespace pcbdet::eval
