#include "dcys/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "dcys/errors.hpp"

namespace dcys {

std::vector<double> class_weights_auto(const std::vector<int>& labels) {
    std::array<std::size_t, kNumClasses> counts{};
    for (int y : labels) {
        if (y < 0 || y >= kNumClasses) throw DataError("class_weights_auto: label out of range");
        ++counts[static_cast<std::size_t>(y)];
    }
    for (int c = 0; c < kNumClasses; ++c) {
        if (counts[c] == 0) {
            throw ConfigError(std::string("class_weights_auto: class ") + kClassNames[c] +
                              " absent from the training labels; pass explicit weights");
        }
    }
    const double n = static_cast<double>(labels.size());
    std::vector<double> w(kNumClasses);
    for (int c = 0; c < kNumClasses; ++c) w[c] = n / (kNumClasses * static_cast<double>(counts[c]));
    return w;
}

void write_train_report_csv(const TrainReport& report, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot open train report for writing: " + path);
    os << "epoch,mean_loss,slice_accuracy\n";
    char buf[96];
    for (const auto& e : report.epochs) {
        std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g\n", e.epoch, e.mean_loss, e.slice_accuracy);
        os << buf;
    }
    if (!os) throw DataError("train report write failed: " + path);
}

void sgd_update(LayerGraph& graph, const TrainConfig& config,
                std::vector<std::vector<float>>* momentum_buffers) {
    const bool use_momentum = config.momentum != 0.0;
    if (use_momentum && momentum_buffers && momentum_buffers->empty())
        momentum_buffers->resize(graph.nodes.size() * 3);

    auto step = [&](std::vector<float>& params, std::vector<float>& grads, std::size_t slot) {
        if (grads.empty()) return;
        if (config.weight_decay != 0.0)
            for (std::size_t i = 0; i < params.size(); ++i)
                grads[i] += static_cast<float>(config.weight_decay) * params[i];
        if (use_momentum && momentum_buffers) {
            auto& vel = (*momentum_buffers)[slot];
            if (vel.size() != params.size()) vel.assign(params.size(), 0.0f);
            for (std::size_t i = 0; i < params.size(); ++i) {
                vel[i] = static_cast<float>(config.momentum) * vel[i] + grads[i];
                params[i] -= static_cast<float>(config.learning_rate) * vel[i];
            }
        } else {
            sgd_step(params, grads, config.learning_rate);
        }
        std::fill(grads.begin(), grads.end(), 0.0f);
    };

    for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
        auto& node = graph.nodes[i];
        step(node.weight.data, node.weight.grad, 3 * i);
        step(node.bn.gamma, node.bn.gamma_grad, 3 * i + 1);
        step(node.bn.beta, node.bn.beta_grad, 3 * i + 2);
    }
}

TrainReport train(LayerGraph& graph, const std::vector<SliceSample>& slices,
                  const TrainConfig& config, const std::function<void(const EpochStats&)>& progress) {
    config.validate();
    TrainReport report;
    if (config.epochs == 0) return report;
    if (static_cast<int>(slices.size()) < config.batch_size)
        throw DataError("train: need at least batch_size slices (" +
                        std::to_string(config.batch_size) + "), got " + std::to_string(slices.size()));
    const int side = graph.input_size;
    for (const auto& s : slices)
        if (s.side != side)
            throw ShapeError("train: slice side " + std::to_string(s.side) +
                             " does not match network input size " + std::to_string(side));

    std::vector<int> labels(slices.size());
    for (std::size_t i = 0; i < slices.size(); ++i) labels[i] = slices[i].label;
    const std::vector<double> weights =
        config.class_weights.empty() ? class_weights_auto(labels) : config.class_weights;

    const Rng root(config.seed);
    std::vector<std::vector<float>> momentum_buffers;
    std::vector<std::size_t> order(slices.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    const int batch = config.batch_size;
    Tensor input({batch, 1, side, side});
    ForwardCacheT<float> cache;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        Rng shuffle_rng = root.split(static_cast<std::uint64_t>(epoch) + 1);
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        std::size_t correct = 0, seen = 0;
        const int n_batches = static_cast<int>(order.size()) / batch;  // remainder dropped
        for (int b = 0; b < n_batches; ++b) {
            std::vector<int> batch_labels(batch);
            for (int j = 0; j < batch; ++j) {
                const std::size_t idx = order[static_cast<std::size_t>(b) * batch + j];
                const SliceSample* s = &slices[idx];
                SliceSample augmented;
                if (config.augment) {
                    Rng arng = root.split(0xA0000000ULL + static_cast<std::uint64_t>(epoch))
                                   .split(static_cast<std::uint64_t>(idx));
                    augmented = augment(*s, *config.augment, arng);
                    s = &augmented;
                }
                std::copy(s->image.begin(), s->image.end(),
                          input.data.begin() + static_cast<std::size_t>(j) * side * side);
                batch_labels[j] = s->label;
            }

            const Tensor probs = graph_forward(graph, input, Mode::Train, &cache);
            Tensor grad_logits;
            const double loss = weighted_cross_entropy(probs, batch_labels, weights, &grad_logits);
            if (!std::isfinite(loss))
                throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                   " batch " + std::to_string(b));
            loss_sum += loss;
            for (int j = 0; j < batch; ++j) {
                int am = 0;
                for (int k = 1; k < probs.dim(1); ++k)
                    if (probs.at2(j, k) > probs.at2(j, am)) am = k;
                if (am == batch_labels[j]) ++correct;
                ++seen;
            }

            graph.zero_grad();
            graph_backward(graph, cache, input, graph.logits_node, grad_logits);
            sgd_update(graph, config, &momentum_buffers);
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.mean_loss = n_batches > 0 ? loss_sum / n_batches : 0.0;
        stats.slice_accuracy = seen > 0 ? static_cast<double>(correct) / static_cast<double>(seen) : 0.0;
        report.epochs.push_back(stats);
        if (progress) progress(stats);
    }
    return report;
}

PatientPrediction aggregate_patient(const std::vector<std::array<double, kNumClasses>>& slice_probs,
                                    const std::string& patient_id) {
    if (slice_probs.empty())
        throw DataError("aggregate_patient: no slices for patient " + patient_id +
                        " (all slices filtered out)");
    PatientPrediction p;
    p.patient_id = patient_id;
    p.n_slices_used = static_cast<int>(slice_probs.size());
    for (const auto& sp : slice_probs) {
        double sum = 0.0;
        for (double v : sp) sum += v;
        if (std::abs(sum - 1.0) > 1e-6)
            throw DataError("aggregate_patient: slice probabilities for " + patient_id +
                            " do not sum to 1");
        for (int c = 0; c < kNumClasses; ++c) p.probs[c] += sp[c];
    }
    for (auto& v : p.probs) v /= slice_probs.size();
    p.predicted = 0;  // argmax, ties to the lowest class index
    for (int c = 1; c < kNumClasses; ++c)
        if (p.probs[c] > p.probs[p.predicted]) p.predicted = c;
    return p;
}

PatientPrediction predict_patient(LayerGraph& graph, const std::vector<SliceSample>& slices,
                                  const std::string& patient_id) {
    if (slices.empty())
        throw DataError("predict_patient: no surviving slices for patient " + patient_id);
    const int side = graph.input_size;
    Tensor input({static_cast<int>(slices.size()), 1, side, side});
    for (std::size_t i = 0; i < slices.size(); ++i) {
        if (slices[i].side != side)
            throw ShapeError("predict_patient: slice side mismatch for " + patient_id);
        std::copy(slices[i].image.begin(), slices[i].image.end(),
                  input.data.begin() + i * static_cast<std::size_t>(side) * side);
    }
    const Tensor probs = graph_forward(graph, input, Mode::Eval);
    std::vector<std::array<double, kNumClasses>> rows(slices.size());
    for (std::size_t i = 0; i < slices.size(); ++i)
        for (int c = 0; c < kNumClasses; ++c) rows[i][c] = probs.at2(static_cast<int>(i), c);
    // renormalize float rounding so the aggregation precondition holds exactly
    for (auto& r : rows) {
        double s = r[0] + r[1] + r[2] + r[3];
        for (auto& v : r) v /= s;
    }
    return aggregate_patient(rows, patient_id);
}

}  // namespace dcys
