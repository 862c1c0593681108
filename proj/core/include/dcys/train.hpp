#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "dcys/data.hpp"
#include "dcys/graph.hpp"
#include "dcys/tensor.hpp"

namespace dcys {

struct TrainConfig {
    int batch_size = 40;
    double learning_rate = 0.0005;
    int epochs = 100;
    std::uint64_t seed = 1;
    // Empty -> inverse-frequency "auto" weights from the training labels.
    std::vector<double> class_weights;
    std::optional<AugmentParams> augment;  // online per-epoch augmentation
    double momentum = 0.0;      // off unless explicitly requested
    double weight_decay = 0.0;  // off unless explicitly requested

    void validate() const {
        if (batch_size < 2) throw ConfigError("train: batch_size must be >= 2 (batchnorm)");
        if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be positive");
        if (epochs < 0) throw ConfigError("train: epochs must be >= 0");
    }
};

struct EpochStats {
    int epoch = 0;
    double mean_loss = 0.0;
    double slice_accuracy = 0.0;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
};

void write_train_report_csv(const TrainReport& report, const std::string& path);

struct PatientPrediction {
    std::string patient_id;
    std::array<double, kNumClasses> probs{};
    int predicted = 0;
    int n_slices_used = 0;
};

// w_c = N / (C * N_c); the sample-weighted mean of the weights is 1, keeping
// the effective learning rate comparable to unweighted training.
std::vector<double> class_weights_auto(const std::vector<int>& labels);

// Class-balanced cross-entropy on softmax outputs, gradient fused through the
// softmax: d/dlogits = w_y * (p - onehot(y)) / N. Probabilities are clamped at
// 1e-12 before the log.
template <class T>
double weighted_cross_entropy(const TensorT<T>& probs, const std::vector<int>& labels,
                              const std::vector<double>& weights, TensorT<T>* grad_logits) {
    if (probs.rank() != 2) throw ShapeError("cross_entropy: expected [N,K] probabilities");
    const int n = probs.dim(0), k = probs.dim(1);
    if (static_cast<int>(labels.size()) != n)
        throw ShapeError("cross_entropy: labels size does not match batch");
    if (static_cast<int>(weights.size()) != k)
        throw ShapeError("cross_entropy: weights size does not match class count");

    if (grad_logits) *grad_logits = TensorT<T>(probs.shape);
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
        const int y = labels[i];
        if (y < 0 || y >= k) throw DataError("cross_entropy: label out of range");
        const double w = weights[static_cast<std::size_t>(y)];
        const double p = std::max(static_cast<double>(probs.at2(i, y)), 1e-12);
        loss += w * -std::log(p);
        if (grad_logits) {
            for (int j = 0; j < k; ++j) {
                const double onehot = j == y ? 1.0 : 0.0;
                grad_logits->at2(i, j) =
                    static_cast<T>(w * (static_cast<double>(probs.at2(i, j)) - onehot) / n);
            }
        }
    }
    return loss / n;
}

// theta <- theta - lr * g
template <class T>
void sgd_step(std::vector<T>& params, const std::vector<T>& grads, double lr) {
    if (params.size() != grads.size()) throw ShapeError("sgd_step: size mismatch");
    for (std::size_t i = 0; i < params.size(); ++i)
        params[i] -= static_cast<T>(lr * static_cast<double>(grads[i]));
}

// Applies one SGD step to every parameter tensor of the graph, then clears
// the gradients. Optional momentum/weight decay default to off.
void sgd_update(LayerGraph& graph, const TrainConfig& config,
                std::vector<std::vector<float>>* momentum_buffers = nullptr);

TrainReport train(LayerGraph& graph, const std::vector<SliceSample>& slices,
                  const TrainConfig& config,
                  const std::function<void(const EpochStats&)>& progress = {});

// Eq.-style slice-probability averaging; argmax ties break to the lowest
// class index. Throws DataError naming the patient when the list is empty.
PatientPrediction aggregate_patient(const std::vector<std::array<double, kNumClasses>>& slice_probs,
                                    const std::string& patient_id);

// Eval-mode slice probabilities for one patient's slices, then aggregation.
PatientPrediction predict_patient(LayerGraph& graph, const std::vector<SliceSample>& slices,
                                  const std::string& patient_id);

}  // namespace dcys
