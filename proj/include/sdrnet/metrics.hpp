#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdrnet/class_map.hpp"
#include "sdrnet/image.hpp"

namespace sdrnet {

// Rows are ground truth, columns predictions. Pixels whose ground truth is
// the ignore value are tallied separately and never enter the counts.
struct ConfusionMatrix {
  ClassMap class_map;
  std::vector<int64_t> counts;  // K x K, row major
  int64_t ignored_pixels = 0;

  int num_classes() const { return class_map.num_classes(); }
  int64_t& at(int gt, int pred) {
    return counts[static_cast<size_t>(gt) * num_classes() + pred];
  }
  int64_t at(int gt, int pred) const {
    return counts[static_cast<size_t>(gt) * num_classes() + pred];
  }
  int64_t counted() const {
    int64_t n = 0;
    for (int64_t v : counts) n += v;
    return n;
  }
  int64_t row_sum(int k) const {
    int64_t n = 0;
    for (int j = 0; j < num_classes(); ++j) n += at(k, j);
    return n;
  }
  int64_t col_sum(int k) const {
    int64_t n = 0;
    for (int i = 0; i < num_classes(); ++i) n += at(i, k);
    return n;
  }
};

inline ConfusionMatrix make_confusion(const ClassMap& map) {
  validate_class_map(map);
  ConfusionMatrix c;
  c.class_map = map;
  c.counts.assign(static_cast<size_t>(map.num_classes()) *
                      static_cast<size_t>(map.num_classes()),
                  0);
  return c;
}

inline void accumulate(ConfusionMatrix& conf, const IndexMask& pred,
                       const IndexMask& gt) {
  check(pred.height == gt.height && pred.width == gt.width, ErrorKind::Data,
        strf("prediction is %lldx%lld but ground truth is %lldx%lld",
             static_cast<long long>(pred.height),
             static_cast<long long>(pred.width),
             static_cast<long long>(gt.height),
             static_cast<long long>(gt.width)));
  int k = conf.num_classes();
  for (int64_t i = 0; i < gt.numel(); ++i) {
    int32_t g = gt.values[static_cast<size_t>(i)];
    if (g == conf.class_map.ignore_index) {
      ++conf.ignored_pixels;
      continue;
    }
    check(g >= 0 && g < k, ErrorKind::Data,
          strf("ground-truth value %d out of range [0, %d)", g, k));
    int32_t p = pred.values[static_cast<size_t>(i)];
    check(p >= 0 && p < k, ErrorKind::Data,
          strf("predicted value %d out of range [0, %d)", p, k));
    ++conf.at(g, p);
  }
}

inline void merge(ConfusionMatrix& into, const ConfusionMatrix& from) {
  check(into.num_classes() == from.num_classes(), ErrorKind::Data,
        "cannot merge confusion matrices of different sizes");
  for (size_t i = 0; i < into.counts.size(); ++i)
    into.counts[i] += from.counts[i];
  into.ignored_pixels += from.ignored_pixels;
}

struct MetricsReport {
  std::vector<std::string> class_names;
  std::vector<double> precision, recall, specificity, f1;
  // True where a zero denominator forced the metrics to 0 by convention.
  std::vector<bool> absent;
  std::vector<int> included;  // classes entering OA and mean F1
  double oa = 0.0;
  double mean_f1 = 0.0;
};

// Per-class scores over all classes; OA and mean F1 over non-excluded
// classes only. `lenient_oa_denominator` counts excluded-class pixels in
// the OA denominator as well, for sensitivity checks.
inline MetricsReport metrics(const ConfusionMatrix& conf,
                             const std::vector<int>& excluded,
                             bool lenient_oa_denominator = false) {
  int k = conf.num_classes();
  check(conf.counted() > 0, ErrorKind::Data,
        "confusion matrix has no counted pixels");
  auto is_excluded = [&](int c) {
    for (int e : excluded)
      if (e == c) return true;
    return false;
  };

  MetricsReport r;
  r.precision.assign(static_cast<size_t>(k), 0.0);
  r.recall.assign(static_cast<size_t>(k), 0.0);
  r.specificity.assign(static_cast<size_t>(k), 0.0);
  r.f1.assign(static_cast<size_t>(k), 0.0);
  r.absent.assign(static_cast<size_t>(k), false);
  int64_t total = conf.counted();
  for (int c = 0; c < k; ++c) {
    r.class_names.push_back(conf.class_map.entry(c).name);
    int64_t tp = conf.at(c, c);
    int64_t fp = conf.col_sum(c) - tp;
    int64_t fn = conf.row_sum(c) - tp;
    int64_t tn = total - tp - fp - fn;
    size_t i = static_cast<size_t>(c);
    if (tp + fp > 0)
      r.precision[i] = static_cast<double>(tp) / static_cast<double>(tp + fp);
    else
      r.absent[i] = true;
    if (tp + fn > 0)
      r.recall[i] = static_cast<double>(tp) / static_cast<double>(tp + fn);
    else
      r.absent[i] = true;
    if (tn + fp > 0)
      r.specificity[i] = static_cast<double>(tn) / static_cast<double>(tn + fp);
    else
      r.absent[i] = true;
    if (r.precision[i] + r.recall[i] > 0.0)
      r.f1[i] = 2.0 * r.precision[i] * r.recall[i] /
                (r.precision[i] + r.recall[i]);
  }

  int64_t correct = 0, denom = 0;
  double f1_sum = 0.0;
  for (int c = 0; c < k; ++c) {
    if (is_excluded(c)) continue;
    r.included.push_back(c);
    correct += conf.at(c, c);
    denom += conf.row_sum(c);
    f1_sum += r.f1[static_cast<size_t>(c)];
  }
  check(!r.included.empty(), ErrorKind::Config,
        "every class is excluded from the summary metrics");
  if (lenient_oa_denominator) denom = total;
  r.oa = denom > 0 ? static_cast<double>(correct) / static_cast<double>(denom)
                   : 0.0;
  r.mean_f1 = f1_sum / static_cast<double>(r.included.size());
  return r;
}

inline MetricsReport metrics(const ConfusionMatrix& conf) {
  return metrics(conf, conf.class_map.excluded_from_oa);
}

// Fixed-column per-class table: one row per score, one column per class
// plus the mean over included classes, percentages to two decimals.
inline std::string report_table(const MetricsReport& r) {
  size_t k = r.class_names.size();
  size_t w = 10;
  for (const std::string& n : r.class_names) w = std::max(w, n.size() + 2);

  auto row = [&](const char* label, const std::vector<double>& v) {
    std::string line = strf("%-12s", label);
    double sum = 0.0;
    for (size_t c = 0; c < k; ++c)
      line += strf("%*.2f", static_cast<int>(w), v[c] * 100.0);
    for (int c : r.included) sum += v[static_cast<size_t>(c)];
    line += strf("%*.2f\n", static_cast<int>(w),
                 100.0 * sum / static_cast<double>(r.included.size()));
    return line;
  };

  std::string out = strf("%-12s", "");
  for (size_t c = 0; c < k; ++c)
    out += strf("%*s", static_cast<int>(w), r.class_names[c].c_str());
  out += strf("%*s\n", static_cast<int>(w), "Mean");
  out += row("Specificity", r.specificity);
  out += row("Precision", r.precision);
  out += row("Recall", r.recall);
  out += row("F1 score", r.f1);
  out += strf("OA %.2f   mean F1 %.2f\n", r.oa * 100.0, r.mean_f1 * 100.0);
  return out;
}

inline std::string metrics_csv(const ConfusionMatrix& conf,
                               const MetricsReport& r) {
  std::string out = "class,tp,fp,tn,fn,precision,recall,specificity,f1\n";
  int64_t total = conf.counted();
  for (int c = 0; c < conf.num_classes(); ++c) {
    int64_t tp = conf.at(c, c);
    int64_t fp = conf.col_sum(c) - tp;
    int64_t fn = conf.row_sum(c) - tp;
    int64_t tn = total - tp - fp - fn;
    size_t i = static_cast<size_t>(c);
    out += strf("%s,%lld,%lld,%lld,%lld,%.6f,%.6f,%.6f,%.6f\n",
                r.class_names[i].c_str(), static_cast<long long>(tp),
                static_cast<long long>(fp), static_cast<long long>(tn),
                static_cast<long long>(fn), r.precision[i], r.recall[i],
                r.specificity[i], r.f1[i]);
  }
  out += strf("oa,%.6f\n", r.oa);
  out += strf("mean_f1,%.6f\n", r.mean_f1);
  return out;
}

}  // namespace sdrnet
