#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fedecg/error.hpp"

namespace fedecg::eval {

// Row-major confusion counts: rows are true classes, columns predictions.
// Class order for the 4-class task is SINUS, AFIB, OTHER, NOISE.
class ConfusionMatrix {
  public:
    explicit ConfusionMatrix(int num_classes = 4)
        : num_classes_(num_classes),
          counts_(static_cast<std::size_t>(num_classes) * num_classes, 0) {}

    int num_classes() const { return num_classes_; }
    std::int64_t& at(int truth, int pred) { return counts_[index(truth, pred)]; }
    std::int64_t at(int truth, int pred) const { return counts_[index(truth, pred)]; }

    std::int64_t total() const {
        std::int64_t t = 0;
        for (const auto v : counts_) t += v;
        return t;
    }

    void add(const ConfusionMatrix& other) {
        if (other.num_classes_ != num_classes_)
            throw ShapeError("ConfusionMatrix::add: class count mismatch");
        for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    }

  private:
    std::size_t index(int truth, int pred) const {
        if (truth < 0 || truth >= num_classes_ || pred < 0 || pred >= num_classes_)
            throw ValueError("ConfusionMatrix: class id out of range");
        return static_cast<std::size_t>(truth) * num_classes_ + pred;
    }

    int num_classes_;
    std::vector<std::int64_t> counts_;
};

ConfusionMatrix confusion(const std::vector<int>& preds, const std::vector<int>& labels,
                          int num_classes = 4);

struct F1Result {
    std::vector<double> per_class;
    double macro = 0;
};

// Per class: precision TP/(TP+FP), recall TP/(TP+FN), F1 = 2PR/(P+R); any 0/0
// resolves to 0. macro is the unweighted mean over all classes.
F1Result f1_scores(const ConfusionMatrix& cm);

// Unweighted mean of a class subset (e.g. excluding NOISE).
double macro_over(const F1Result& f1, const std::vector<int>& classes);

double accuracy(const ConfusionMatrix& cm);

struct MetricsRow {
    int round = 0;
    std::string scenario;   // local | central | federated
    std::string client_id;  // c0..c7, "global", or "mean"
    std::string split;      // train | val | test
    double loss = 0;
    double accuracy = 0;
    double f1_macro = 0;
    std::array<double, 4> f1_per_class = {0, 0, 0, 0};
    double lr = 0;
};

// UTF-8 CSV with a fixed header; values printed with 6 decimal places in
// append order, so equal rows always produce byte-identical files.
void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path);

extern const char* const kMetricsCsvHeader;

// Human-readable confusion dump with per-class F1 and accuracy.
std::string format_confusion(const ConfusionMatrix& cm, const std::vector<std::string>& names);
void write_confusion_txt(const ConfusionMatrix& cm, const std::string& path);

}  // namespace fedecg::eval
