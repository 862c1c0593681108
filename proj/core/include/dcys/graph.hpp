#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dcys/ops.hpp"
#include "dcys/tensor.hpp"

namespace dcys {

enum class OpKind {
    Conv2d,
    BatchNorm,
    Relu,
    MaxPool,
    AvgPool,
    GlobalAvgPool,
    Concat,
    Linear,
    Softmax,
};

inline const char* op_kind_name(OpKind k) {
    switch (k) {
        case OpKind::Conv2d: return "conv2d";
        case OpKind::BatchNorm: return "batchnorm";
        case OpKind::Relu: return "relu";
        case OpKind::MaxPool: return "maxpool";
        case OpKind::AvgPool: return "avgpool";
        case OpKind::GlobalAvgPool: return "globalavgpool";
        case OpKind::Concat: return "concat";
        case OpKind::Linear: return "linear";
        case OpKind::Softmax: return "softmax";
    }
    return "?";
}

// Input id -1 refers to the graph input tensor.
constexpr int kGraphInput = -1;

template <class T>
struct NodeT {
    OpKind kind;
    std::vector<int> inputs;
    int stride = 1;
    int pad = 0;
    TensorT<T> weight;        // Conv2d [O,I,Kh,Kw], Linear [O,F]
    BatchNormStateT<T> bn;    // BatchNorm only
    std::string name;
};

enum class Mode { Train, Eval };

template <class T>
struct ForwardCacheT {
    std::vector<TensorT<T>> acts;             // per-node outputs
    std::vector<std::vector<int>> pool_argmax;
    std::vector<BatchNormCache<T>> bn;
    Mode mode = Mode::Eval;
};

// Topologically ordered op list plus parameter/statistics stores embedded in
// the nodes. Immutable in structure after build; parameters and BN stats are
// single-writer during training.
template <class T>
struct LayerGraphT {
    std::vector<NodeT<T>> nodes;
    int logits_node = -1;  // pre-softmax linear output
    int input_channels = 1;
    int input_size = 0;
    int num_classes = 0;
    std::string arch;  // "densenet" | "cnn-baseline"

    int add(NodeT<T> node) {
        for (int i : node.inputs) {
            if (i != kGraphInput && (i < 0 || i >= static_cast<int>(nodes.size())))
                throw ConfigError("graph: node input id out of range");
        }
        nodes.push_back(std::move(node));
        return static_cast<int>(nodes.size()) - 1;
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& node : nodes) {
            n += node.weight.numel();
            n += node.bn.gamma.size() + node.bn.beta.size();
        }
        return n;
    }

    void zero_grad() {
        for (auto& node : nodes) {
            node.weight.zero_grad();
            std::fill(node.bn.gamma_grad.begin(), node.bn.gamma_grad.end(), T(0));
            std::fill(node.bn.beta_grad.begin(), node.bn.beta_grad.end(), T(0));
        }
    }
};

using LayerGraph = LayerGraphT<float>;

template <class T>
TensorT<T> graph_forward(LayerGraphT<T>& graph, const TensorT<T>& input, Mode mode,
                         ForwardCacheT<T>* cache = nullptr) {
    if (input.rank() != 4 || input.dim(1) != graph.input_channels ||
        input.dim(2) != graph.input_size || input.dim(3) != graph.input_size) {
        throw ShapeError("graph_forward: expected input [N," + std::to_string(graph.input_channels) +
                         "," + std::to_string(graph.input_size) + "," +
                         std::to_string(graph.input_size) + "], got " + input.shape_str());
    }
    const std::size_t n_nodes = graph.nodes.size();
    ForwardCacheT<T> local;
    ForwardCacheT<T>& c = cache ? *cache : local;
    c.acts.assign(n_nodes, {});
    c.pool_argmax.assign(n_nodes, {});
    c.bn.assign(n_nodes, {});
    c.mode = mode;

    auto act = [&](int id) -> const TensorT<T>& {
        return id == kGraphInput ? input : c.acts[static_cast<std::size_t>(id)];
    };

    for (std::size_t i = 0; i < n_nodes; ++i) {
        NodeT<T>& node = graph.nodes[i];
        const TensorT<T>& x = act(node.inputs.empty() ? kGraphInput : node.inputs[0]);
        switch (node.kind) {
            case OpKind::Conv2d:
                c.acts[i] = conv2d_forward(x, node.weight, node.stride, node.pad);
                break;
            case OpKind::BatchNorm:
                c.acts[i] = batchnorm_forward(x, node.bn, mode == Mode::Train, &c.bn[i]);
                break;
            case OpKind::Relu:
                c.acts[i] = relu(x);
                break;
            case OpKind::MaxPool:
                c.acts[i] = pool2x2_forward(x, PoolKind::Max, &c.pool_argmax[i]);
                break;
            case OpKind::AvgPool:
                c.acts[i] = pool2x2_forward(x, PoolKind::Avg);
                break;
            case OpKind::GlobalAvgPool:
                c.acts[i] = global_avg_pool(x);
                break;
            case OpKind::Concat: {
                std::vector<const TensorT<T>*> ins;
                ins.reserve(node.inputs.size());
                for (int id : node.inputs) ins.push_back(&act(id));
                c.acts[i] = concat_channels(ins);
                break;
            }
            case OpKind::Linear:
                c.acts[i] = linear_forward(x, node.weight);
                break;
            case OpKind::Softmax:
                c.acts[i] = softmax(x);
                break;
        }
        assert_finite(c.acts[i], op_kind_name(node.kind));
    }
    return c.acts.back();
}

template <class T>
struct BackwardOptions {
    bool guided = false;
    // Called at every ReLU with (forward input, gradient after gating); used by
    // tests to assert the guided gating rule.
    std::function<void(const TensorT<T>&, const TensorT<T>&)> relu_observer;
};

// Backward from `from_node`'s output seeded with `grad_seed`. Parameter
// gradients accumulate into the nodes; returns the gradient w.r.t. the graph
// input. Softmax nodes cannot be traversed (the loss fuses softmax), so
// `from_node` is normally the logits node.
template <class T>
TensorT<T> graph_backward(LayerGraphT<T>& graph, const ForwardCacheT<T>& cache,
                          const TensorT<T>& input, int from_node, const TensorT<T>& grad_seed,
                          const BackwardOptions<T>& opts = {}) {
    if (from_node < 0 || from_node >= static_cast<int>(graph.nodes.size()))
        throw UsageError("graph_backward: from_node out of range");
    if (cache.acts.size() != graph.nodes.size() || cache.acts[from_node].shape.empty())
        throw UsageError("graph_backward: forward cache missing; run graph_forward first");
    if (grad_seed.shape != cache.acts[from_node].shape)
        throw ShapeError("graph_backward: seed gradient shape " + grad_seed.shape_str() +
                         " does not match node output " + cache.acts[from_node].shape_str());

    std::vector<TensorT<T>> grads(graph.nodes.size());
    TensorT<T> input_grad(input.shape);
    grads[from_node] = grad_seed;

    auto act = [&](int id) -> const TensorT<T>& {
        return id == kGraphInput ? input : cache.acts[static_cast<std::size_t>(id)];
    };
    auto accum = [&](int id, TensorT<T>&& g) {
        TensorT<T>& dst = id == kGraphInput ? input_grad : grads[static_cast<std::size_t>(id)];
        if (dst.shape.empty()) {
            dst = std::move(g);
        } else {
            for (std::size_t j = 0; j < dst.data.size(); ++j) dst.data[j] += g.data[j];
        }
    };

    for (int i = from_node; i >= 0; --i) {
        NodeT<T>& node = graph.nodes[i];
        if (grads[i].shape.empty()) continue;  // not on a path to from_node
        const TensorT<T>& gout = grads[i];
        const int in0 = node.inputs.empty() ? kGraphInput : node.inputs[0];
        switch (node.kind) {
            case OpKind::Conv2d: {
                node.weight.alloc_grad();
                TensorT<T> gw;
                gw.shape = node.weight.shape;
                gw.data.swap(node.weight.grad);
                TensorT<T> gin;
                conv2d_backward(gout, act(in0), node.weight, node.stride, node.pad, gin, gw);
                node.weight.grad.swap(gw.data);
                accum(in0, std::move(gin));
                break;
            }
            case OpKind::BatchNorm:
                accum(in0, batchnorm_backward(gout, cache.bn[i], node.bn));
                break;
            case OpKind::Relu: {
                TensorT<T> gin = opts.guided ? relu_backward_guided(gout, act(in0))
                                             : relu_backward(gout, act(in0));
                if (opts.relu_observer) opts.relu_observer(act(in0), gin);
                accum(in0, std::move(gin));
                break;
            }
            case OpKind::MaxPool:
                accum(in0, pool2x2_backward(gout, act(in0).shape, PoolKind::Max, cache.pool_argmax[i]));
                break;
            case OpKind::AvgPool:
                accum(in0, pool2x2_backward(gout, act(in0).shape, PoolKind::Avg, {}));
                break;
            case OpKind::GlobalAvgPool:
                accum(in0, global_avg_pool_backward(gout, act(in0).shape));
                break;
            case OpKind::Concat: {
                std::vector<int> counts;
                counts.reserve(node.inputs.size());
                for (int id : node.inputs) counts.push_back(act(id).dim(1));
                auto parts = split_channels(gout, counts);
                for (std::size_t j = 0; j < parts.size(); ++j)
                    accum(node.inputs[j], std::move(parts[j]));
                break;
            }
            case OpKind::Linear: {
                node.weight.alloc_grad();
                TensorT<T> gw;
                gw.shape = node.weight.shape;
                gw.data.swap(node.weight.grad);
                TensorT<T> gin;
                linear_backward(gout, act(in0), node.weight, gin, gw);
                node.weight.grad.swap(gw.data);
                accum(in0, std::move(gin));
                break;
            }
            case OpKind::Softmax:
                throw UsageError("graph_backward: softmax has no standalone adjoint; seed at logits");
        }
    }
    return input_grad;
}

}  // namespace dcys
