#include "fedecg/eval/metrics.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace fedecg::eval {

ConfusionMatrix confusion(const std::vector<int>& preds, const std::vector<int>& labels,
                          int num_classes) {
    if (preds.size() != labels.size())
        throw ShapeError("confusion: preds and labels must have equal length");
    ConfusionMatrix cm(num_classes);
    for (std::size_t i = 0; i < preds.size(); ++i) cm.at(labels[i], preds[i]) += 1;
    return cm;
}

F1Result f1_scores(const ConfusionMatrix& cm) {
    const int n = cm.num_classes();
    F1Result result;
    result.per_class.resize(n, 0.0);
    double sum = 0;
    for (int c = 0; c < n; ++c) {
        std::int64_t tp = cm.at(c, c), fp = 0, fn = 0;
        for (int o = 0; o < n; ++o) {
            if (o == c) continue;
            fp += cm.at(o, c);
            fn += cm.at(c, o);
        }
        const double precision = (tp + fp) == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp);
        const double recall = (tp + fn) == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn);
        const double f1 =
            (precision + recall) == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
        result.per_class[c] = f1;
        sum += f1;
    }
    result.macro = sum / n;
    return result;
}

double macro_over(const F1Result& f1, const std::vector<int>& classes) {
    if (classes.empty()) throw ValueError("macro_over: empty class subset");
    double sum = 0;
    for (const int c : classes) sum += f1.per_class.at(static_cast<std::size_t>(c));
    return sum / static_cast<double>(classes.size());
}

double accuracy(const ConfusionMatrix& cm) {
    const std::int64_t total = cm.total();
    if (total == 0) throw ValueError("accuracy: empty confusion matrix");
    std::int64_t correct = 0;
    for (int c = 0; c < cm.num_classes(); ++c) correct += cm.at(c, c);
    return static_cast<double>(correct) / static_cast<double>(total);
}

const char* const kMetricsCsvHeader =
    "round,scenario,client_id,split,loss,accuracy,f1_macro,f1_sinus,f1_afib,f1_other,f1_noise,lr";

namespace {
std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}
}  // namespace

void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << kMetricsCsvHeader << "\n";
    for (const auto& r : rows) {
        out << r.round << ',' << r.scenario << ',' << r.client_id << ',' << r.split << ','
            << fmt6(r.loss) << ',' << fmt6(r.accuracy) << ',' << fmt6(r.f1_macro);
        for (const double f : r.f1_per_class) out << ',' << fmt6(f);
        out << ',' << fmt6(r.lr) << "\n";
    }
    if (!out) throw IoError("short write to '" + path + "'");
}

std::string format_confusion(const ConfusionMatrix& cm, const std::vector<std::string>& names) {
    std::ostringstream os;
    os << "rows: true class, cols: predicted\n";
    os << "          ";
    for (int c = 0; c < cm.num_classes(); ++c) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%10s", names.at(c).c_str());
        os << buf;
    }
    os << "\n";
    for (int t = 0; t < cm.num_classes(); ++t) {
        char head[32];
        std::snprintf(head, sizeof(head), "%-10s", names.at(t).c_str());
        os << head;
        for (int p = 0; p < cm.num_classes(); ++p) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%10lld", static_cast<long long>(cm.at(t, p)));
            os << buf;
        }
        os << "\n";
    }
    const F1Result f1 = f1_scores(cm);
    os << "\nper-class F1:";
    for (int c = 0; c < cm.num_classes(); ++c) os << ' ' << names.at(c) << '=' << fmt6(f1.per_class[c]);
    os << "\nmacro-F1: " << fmt6(f1.macro);
    os << "\naccuracy: " << fmt6(cm.total() == 0 ? 0.0 : accuracy(cm)) << "\n";
    return os.str();
}

void write_confusion_txt(const ConfusionMatrix& cm, const std::string& path) {
    static const std::vector<std::string> names = {"SINUS", "AFIB", "OTHER", "NOISE"};
    std::vector<std::string> use = names;
    if (cm.num_classes() != 4) {
        use.clear();
        for (int c = 0; c < cm.num_classes(); ++c) use.push_back("class" + std::to_string(c));
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << format_confusion(cm, use);
}

}  // namespace fedecg::eval
