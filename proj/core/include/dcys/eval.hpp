#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dcys/data.hpp"
#include "dcys/model.hpp"
#include "dcys/train.hpp"

namespace dcys {

struct FoldSplit {
    int fold = 0;
    std::vector<int> train_patients;  // indices into the patient list
    std::vector<int> test_patients;
};

// Patient-level stratified k-fold: within each class, patients are shuffled
// (seeded) and dealt round-robin, with a cumulative start offset per class so
// fold sizes stay balanced. Splitting is by patient, never by slice.
std::vector<FoldSplit> stratified_kfold(const std::vector<int>& labels_per_patient, int k,
                                        std::uint64_t seed);

struct ConfusionMatrix {
    std::array<std::array<double, kNumClasses>, kNumClasses> counts{};  // rows = truth
    std::array<bool, kNumClasses> row_support{};                        // false -> no samples of class

    std::array<std::array<double, kNumClasses>, kNumClasses> normalized() const;
};

std::pair<ConfusionMatrix, double> confusion_and_accuracy(
    const std::vector<PatientPrediction>& predictions,
    const std::vector<std::pair<std::string, int>>& truths);

struct FoldReport {
    int fold = 0;
    std::vector<PatientPrediction> predictions;
    ConfusionMatrix confusion;
    double accuracy = 0.0;
};

struct CVReport {
    std::vector<FoldReport> folds;
    // Average of per-fold row-normalized matrices; rows absent from a fold are
    // excluded from that row's average. The alternative (sum raw counts, then
    // normalize once) is available via `pooled`.
    std::array<std::array<double, kNumClasses>, kNumClasses> aggregate_normalized{};
    std::array<std::array<double, kNumClasses>, kNumClasses> pooled_normalized{};
    double overall_accuracy = 0.0;  // over all patients across folds
};

struct CVConfig {
    int k = 10;
    std::uint64_t seed = 1;
    int slice_side = 144;
    double overlap_threshold = 0.10;
    std::string model = "densenet";  // or "cnn-baseline"
};

CVReport run_cv(const std::vector<Volume>& dataset, const DenseNetSpec& spec,
                const TrainConfig& train_config, const CVConfig& cv_config);

std::string cv_report_csv(const CVReport& report);
std::string cv_report_table(const CVReport& report);

}  // namespace dcys
