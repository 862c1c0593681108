#include "dcys/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "dcys/errors.hpp"

namespace dcys {

std::vector<FoldSplit> stratified_kfold(const std::vector<int>& labels_per_patient, int k,
                                        std::uint64_t seed) {
    if (k < 2) throw UsageError("stratified_kfold: k must be >= 2");
    const int n = static_cast<int>(labels_per_patient.size());
    if (n < k) throw UsageError("stratified_kfold: fewer patients than folds");

    std::array<std::vector<int>, kNumClasses> by_class;
    for (int i = 0; i < n; ++i) {
        const int y = labels_per_patient[i];
        if (y < 0 || y >= kNumClasses) throw DataError("stratified_kfold: label out of range");
        by_class[y].push_back(i);
    }

    Rng root(seed);
    std::vector<int> fold_of(n, -1);
    int start = 0;  // cumulative offset keeps fold sizes balanced across classes
    for (int c = 0; c < kNumClasses; ++c) {
        Rng rng = root.split(static_cast<std::uint64_t>(c) + 1);
        rng.shuffle(by_class[c]);
        for (std::size_t j = 0; j < by_class[c].size(); ++j)
            fold_of[by_class[c][j]] = (start + static_cast<int>(j)) % k;
        start = (start + static_cast<int>(by_class[c].size())) % k;
    }

    std::vector<FoldSplit> folds(k);
    for (int f = 0; f < k; ++f) folds[f].fold = f;
    for (int i = 0; i < n; ++i)
        for (int f = 0; f < k; ++f)
            (f == fold_of[i] ? folds[f].test_patients : folds[f].train_patients).push_back(i);
    return folds;
}

std::array<std::array<double, kNumClasses>, kNumClasses> ConfusionMatrix::normalized() const {
    std::array<std::array<double, kNumClasses>, kNumClasses> out{};
    for (int r = 0; r < kNumClasses; ++r) {
        double row_sum = 0.0;
        for (int c = 0; c < kNumClasses; ++c) row_sum += counts[r][c];
        if (row_sum > 0.0)
            for (int c = 0; c < kNumClasses; ++c) out[r][c] = counts[r][c] / row_sum;
        // zero-support rows stay zero and are flagged via row_support
    }
    return out;
}

std::pair<ConfusionMatrix, double> confusion_and_accuracy(
    const std::vector<PatientPrediction>& predictions,
    const std::vector<std::pair<std::string, int>>& truths) {
    std::map<std::string, int> truth_of;
    for (const auto& [id, y] : truths) truth_of[id] = y;

    ConfusionMatrix cm;
    std::size_t correct = 0;
    for (const auto& p : predictions) {
        auto it = truth_of.find(p.patient_id);
        if (it == truth_of.end())
            throw DataError("confusion_and_accuracy: unknown patient id " + p.patient_id);
        cm.counts[it->second][p.predicted] += 1.0;
        cm.row_support[it->second] = true;
        if (p.predicted == it->second) ++correct;
    }
    const double acc =
        predictions.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(predictions.size());
    return {cm, acc};
}

CVReport run_cv(const std::vector<Volume>& dataset, const DenseNetSpec& spec,
                const TrainConfig& train_config, const CVConfig& cv_config) {
    std::vector<int> labels(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) labels[i] = dataset[i].label;
    {
        std::set<std::string> ids;
        for (const auto& v : dataset)
            if (!ids.insert(v.patient_id).second)
                throw DataError("run_cv: duplicate patient id " + v.patient_id);
    }

    // Slice extraction is deterministic; do it once up front.
    std::vector<std::vector<SliceSample>> slices_of(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i)
        slices_of[i] = extract_slices(dataset[i], cv_config.slice_side, cv_config.overlap_threshold);

    const auto folds = stratified_kfold(labels, cv_config.k, cv_config.seed);
    Rng root(cv_config.seed);

    CVReport report;
    std::size_t total = 0, total_correct = 0;
    for (const auto& split : folds) {
        // hard leakage assertion
        std::set<int> train_set(split.train_patients.begin(), split.train_patients.end());
        for (int p : split.test_patients)
            if (train_set.count(p))
                throw DataError("run_cv: patient leakage between train and test in fold " +
                                std::to_string(split.fold));

        LayerGraph graph = cv_config.model == "densenet" ? build_densenet(spec)
                           : cv_config.model == "cnn-baseline"
                               ? build_baseline_cnn(spec)
                               : throw ConfigError("run_cv: unknown model " + cv_config.model);
        Rng fold_rng = root.split(0xF01D0000ULL + static_cast<std::uint64_t>(split.fold));
        init_parameters(graph, fold_rng.next_u64());

        std::vector<SliceSample> train_slices;
        for (int p : split.train_patients)
            train_slices.insert(train_slices.end(), slices_of[p].begin(), slices_of[p].end());

        TrainConfig fold_cfg = train_config;
        fold_cfg.seed = fold_rng.next_u64();
        train(graph, train_slices, fold_cfg);

        FoldReport fr;
        fr.fold = split.fold;
        std::vector<std::pair<std::string, int>> truths;
        for (int p : split.test_patients) {
            fr.predictions.push_back(
                predict_patient(graph, slices_of[p], dataset[p].patient_id));
            truths.emplace_back(dataset[p].patient_id, dataset[p].label);
        }
        auto [cm, acc] = confusion_and_accuracy(fr.predictions, truths);
        fr.confusion = cm;
        fr.accuracy = acc;
        total += fr.predictions.size();
        for (std::size_t i = 0; i < fr.predictions.size(); ++i)
            if (fr.predictions[i].predicted == truths[i].second) ++total_correct;
        report.folds.push_back(std::move(fr));
    }

    // aggregate: average per-fold normalized rows over folds with support
    std::array<std::array<double, kNumClasses>, kNumClasses> pooled_counts{};
    for (int r = 0; r < kNumClasses; ++r) {
        int support_folds = 0;
        std::array<double, kNumClasses> acc_row{};
        for (const auto& fr : report.folds) {
            if (!fr.confusion.row_support[r]) continue;
            ++support_folds;
            const auto norm = fr.confusion.normalized();
            for (int c = 0; c < kNumClasses; ++c) acc_row[c] += norm[r][c];
        }
        if (support_folds > 0)
            for (int c = 0; c < kNumClasses; ++c)
                report.aggregate_normalized[r][c] = acc_row[c] / support_folds;
        for (const auto& fr : report.folds)
            for (int c = 0; c < kNumClasses; ++c) pooled_counts[r][c] += fr.confusion.counts[r][c];
    }
    for (int r = 0; r < kNumClasses; ++r) {
        double row_sum = 0.0;
        for (int c = 0; c < kNumClasses; ++c) row_sum += pooled_counts[r][c];
        if (row_sum > 0.0)
            for (int c = 0; c < kNumClasses; ++c)
                report.pooled_normalized[r][c] = pooled_counts[r][c] / row_sum;
    }
    report.overall_accuracy =
        total > 0 ? static_cast<double>(total_correct) / static_cast<double>(total) : 0.0;
    return report;
}

std::string cv_report_csv(const CVReport& report) {
    std::ostringstream os;
    os << "fold,class,IPMN,MCN,SCN,SPT,fold_accuracy\n";
    char buf[192];
    for (const auto& fr : report.folds) {
        const auto norm = fr.confusion.normalized();
        for (int r = 0; r < kNumClasses; ++r) {
            std::snprintf(buf, sizeof buf, "%d,%s,%.6f,%.6f,%.6f,%.6f,%.6f\n", fr.fold,
                          kClassNames[r], norm[r][0], norm[r][1], norm[r][2], norm[r][3],
                          fr.accuracy);
            os << buf;
        }
    }
    for (int r = 0; r < kNumClasses; ++r) {
        std::snprintf(buf, sizeof buf, "aggregate,%s,%.6f,%.6f,%.6f,%.6f,%.6f\n", kClassNames[r],
                      report.aggregate_normalized[r][0], report.aggregate_normalized[r][1],
                      report.aggregate_normalized[r][2], report.aggregate_normalized[r][3],
                      report.overall_accuracy);
        os << buf;
    }
    return os.str();
}

std::string cv_report_table(const CVReport& report) {
    std::ostringstream os;
    os << "Normalized averaged confusion matrix (rows = truth, columns = prediction)\n";
    os << "        ";
    for (int c = 0; c < kNumClasses; ++c) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%8s", kClassNames[c]);
        os << buf;
    }
    os << "\n";
    for (int r = 0; r < kNumClasses; ++r) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%-8s", kClassNames[r]);
        os << buf;
        for (int c = 0; c < kNumClasses; ++c) {
            std::snprintf(buf, sizeof buf, "%7.2f%%", 100.0 * report.aggregate_normalized[r][c]);
            os << buf;
        }
        os << "\n";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "Overall accuracy: %.1f%%\n", 100.0 * report.overall_accuracy);
    os << buf;
    return os.str();
}

}  // namespace dcys
