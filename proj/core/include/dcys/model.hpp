#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "dcys/graph.hpp"
#include "dcys/rng.hpp"

namespace dcys {

struct DenseNetSpec {
    int num_blocks = 3;
    int layers_per_block = 10;
    int growth_rate = 9;
    int initial_channels = 18;  // 2 * growth_rate
    int bottleneck_factor = 4;  // bottleneck conv outputs bottleneck_factor * growth_rate channels
    int input_size = 144;
    int num_classes = 4;
    double transition_compression = 1.0;  // theta in (0,1]
    bool transition_max_pool = false;     // ablation switch; default is average pooling

    void validate() const {
        if (num_blocks < 1 || layers_per_block < 1 || growth_rate < 1 || initial_channels < 1 ||
            bottleneck_factor < 1 || input_size < 1 || num_classes < 2) {
            throw ConfigError("densenet spec: all extents must be positive, num_classes >= 2");
        }
        if (transition_compression <= 0.0 || transition_compression > 1.0) {
            throw ConfigError("densenet spec: transition_compression must be in (0,1]");
        }
        int s = input_size;
        for (int b = 0; b + 1 < num_blocks; ++b) {
            if (s % 2 != 0) {
                throw ConfigError("densenet spec: input_size " + std::to_string(input_size) +
                                  " is not divisible by 2^" + std::to_string(num_blocks - 1) +
                                  "; transitions cannot halve cleanly");
            }
            s /= 2;
        }
    }
};

namespace detail {

// BN -> ReLU -> conv(out_c, k x k). Returns the conv node id.
template <class T>
int add_bn_relu_conv(LayerGraphT<T>& g, int input_id, int in_c, int out_c, int kernel, int pad,
                     const std::string& name) {
    NodeT<T> bn;
    bn.kind = OpKind::BatchNorm;
    bn.inputs = {input_id};
    bn.bn.resize(in_c);
    bn.name = name + ".bn";
    const int bn_id = g.add(std::move(bn));

    NodeT<T> rl;
    rl.kind = OpKind::Relu;
    rl.inputs = {bn_id};
    rl.name = name + ".relu";
    const int relu_id = g.add(std::move(rl));

    NodeT<T> cv;
    cv.kind = OpKind::Conv2d;
    cv.inputs = {relu_id};
    cv.pad = pad;
    cv.weight = TensorT<T>({out_c, in_c, kernel, kernel});
    cv.name = name + ".conv";
    return g.add(std::move(cv));
}

}  // namespace detail

// Dense connectivity: every dense layer consumes the channel concatenation of
// the block input and all previous layer outputs in its block. Layer m of a
// block therefore sees block_entry + growth_rate * m input channels, which is
// asserted structurally at build time.
template <class T>
LayerGraphT<T> build_densenet_t(const DenseNetSpec& spec) {
    spec.validate();
    LayerGraphT<T> g;
    g.arch = "densenet";
    g.input_channels = 1;
    g.input_size = spec.input_size;
    g.num_classes = spec.num_classes;

    NodeT<T> stem;
    stem.kind = OpKind::Conv2d;
    stem.inputs = {kGraphInput};
    stem.pad = 1;
    stem.weight = TensorT<T>({spec.initial_channels, 1, 3, 3});
    stem.name = "stem.conv";
    int cur = g.add(std::move(stem));
    int cur_c = spec.initial_channels;

    const int bottleneck_c = spec.bottleneck_factor * spec.growth_rate;
    for (int b = 0; b < spec.num_blocks; ++b) {
        const int entry_c = cur_c;
        std::vector<int> feeds = {cur};
        std::vector<int> feed_c = {entry_c};
        for (int m = 0; m < spec.layers_per_block; ++m) {
            const std::string name = "block" + std::to_string(b) + ".layer" + std::to_string(m);
            NodeT<T> cat;
            cat.kind = OpKind::Concat;
            cat.inputs = feeds;
            cat.name = name + ".concat";
            const int cat_id = g.add(std::move(cat));
            int in_c = 0;
            for (int c : feed_c) in_c += c;
            if (in_c != entry_c + spec.growth_rate * m) {
                throw ConfigError("densenet build: dense connectivity violated at " + name);
            }
            const int bott_id =
                detail::add_bn_relu_conv(g, cat_id, in_c, bottleneck_c, 1, 0, name + ".bottleneck");
            const int conv_id = detail::add_bn_relu_conv(g, bott_id, bottleneck_c, spec.growth_rate,
                                                         3, 1, name);
            feeds.push_back(conv_id);
            feed_c.push_back(spec.growth_rate);
        }
        NodeT<T> cat;
        cat.kind = OpKind::Concat;
        cat.inputs = feeds;
        cat.name = "block" + std::to_string(b) + ".out";
        cur = g.add(std::move(cat));
        cur_c = entry_c + spec.layers_per_block * spec.growth_rate;

        if (b + 1 < spec.num_blocks) {
            const int out_c = std::max(
                1, static_cast<int>(std::floor(spec.transition_compression * cur_c)));
            cur = detail::add_bn_relu_conv(g, cur, cur_c, out_c, 1, 0,
                                           "transition" + std::to_string(b));
            cur_c = out_c;
            NodeT<T> pool;
            pool.kind = spec.transition_max_pool ? OpKind::MaxPool : OpKind::AvgPool;
            pool.inputs = {cur};
            pool.name = "transition" + std::to_string(b) + ".pool";
            cur = g.add(std::move(pool));
        }
    }

    // Tail: BN -> ReLU -> global average pool -> linear -> softmax.
    NodeT<T> bn;
    bn.kind = OpKind::BatchNorm;
    bn.inputs = {cur};
    bn.bn.resize(cur_c);
    bn.name = "tail.bn";
    cur = g.add(std::move(bn));
    NodeT<T> rl;
    rl.kind = OpKind::Relu;
    rl.inputs = {cur};
    rl.name = "tail.relu";
    cur = g.add(std::move(rl));
    NodeT<T> gap;
    gap.kind = OpKind::GlobalAvgPool;
    gap.inputs = {cur};
    gap.name = "tail.gap";
    cur = g.add(std::move(gap));
    NodeT<T> fc;
    fc.kind = OpKind::Linear;
    fc.inputs = {cur};
    fc.weight = TensorT<T>({spec.num_classes, cur_c});
    fc.name = "tail.fc";
    cur = g.add(std::move(fc));
    g.logits_node = cur;
    NodeT<T> sm;
    sm.kind = OpKind::Softmax;
    sm.inputs = {cur};
    sm.name = "tail.softmax";
    g.add(std::move(sm));
    return g;
}

namespace detail {

// Plain chain with the given per-stage widths; no concatenation anywhere.
template <class T>
LayerGraphT<T> build_chain_cnn(const DenseNetSpec& spec, const std::vector<int>& widths) {
    LayerGraphT<T> g;
    g.arch = "cnn-baseline";
    g.input_channels = 1;
    g.input_size = spec.input_size;
    g.num_classes = spec.num_classes;

    int cur = kGraphInput;
    int cur_c = 1;
    for (int s = 0; s < static_cast<int>(widths.size()); ++s) {
        const std::string name = "stage" + std::to_string(s);
        NodeT<T> cv;
        cv.kind = OpKind::Conv2d;
        cv.inputs = {cur};
        cv.pad = 1;
        cv.weight = TensorT<T>({widths[s], cur_c, 3, 3});
        cv.name = name + ".conv0";
        cur = g.add(std::move(cv));
        cur_c = widths[s];
        cur = add_bn_relu_conv(g, cur, cur_c, cur_c, 3, 1, name + ".conv1");
        if (s + 1 < static_cast<int>(widths.size())) {
            NodeT<T> pool;
            pool.kind = OpKind::MaxPool;
            pool.inputs = {cur};
            pool.name = name + ".pool";
            cur = g.add(std::move(pool));
        }
    }
    NodeT<T> bn;
    bn.kind = OpKind::BatchNorm;
    bn.inputs = {cur};
    bn.bn.resize(cur_c);
    bn.name = "tail.bn";
    cur = g.add(std::move(bn));
    NodeT<T> rl;
    rl.kind = OpKind::Relu;
    rl.inputs = {cur};
    rl.name = "tail.relu";
    cur = g.add(std::move(rl));
    NodeT<T> gap;
    gap.kind = OpKind::GlobalAvgPool;
    gap.inputs = {cur};
    gap.name = "tail.gap";
    cur = g.add(std::move(gap));
    NodeT<T> fc;
    fc.kind = OpKind::Linear;
    fc.inputs = {cur};
    fc.weight = TensorT<T>({spec.num_classes, cur_c});
    fc.name = "tail.fc";
    cur = g.add(std::move(fc));
    g.logits_node = cur;
    NodeT<T> sm;
    sm.kind = OpKind::Softmax;
    sm.inputs = {cur};
    sm.name = "tail.softmax";
    g.add(std::move(sm));
    return g;
}

}  // namespace detail

// Comparability contract: the baseline's parameter count must land within
// +-20% of the Dense-Net built from the same spec. Stage widths follow a
// doubling pattern scaled by a multiplier found by grid search over the count.
template <class T>
LayerGraphT<T> build_baseline_cnn_t(const DenseNetSpec& spec) {
    spec.validate();
    const std::size_t target = build_densenet_t<T>(spec).parameter_count();

    auto widths_for = [&](double alpha) {
        std::vector<int> widths(spec.num_blocks);
        for (int s = 0; s < spec.num_blocks; ++s)
            widths[s] = std::max(1, static_cast<int>(std::lround(alpha * (1 << s))));
        return widths;
    };

    double best_alpha = 1.0;
    double best_err = 1e300;
    for (int i = 0; i <= 800; ++i) {
        const double alpha = 1.0 * std::pow(1.02, i);
        auto g = detail::build_chain_cnn<T>(spec, widths_for(alpha));
        const double ratio =
            static_cast<double>(g.parameter_count()) / static_cast<double>(target);
        const double err = std::abs(std::log(ratio));
        if (err < best_err) {
            best_err = err;
            best_alpha = alpha;
        }
        if (ratio > 1.5) break;
    }
    auto g = detail::build_chain_cnn<T>(spec, widths_for(best_alpha));
    const double ratio = static_cast<double>(g.parameter_count()) / static_cast<double>(target);
    if (ratio < 0.8 || ratio > 1.2) {
        throw ConfigError("baseline cnn: could not match parameter count within +-20% (ratio " +
                          std::to_string(ratio) + ")");
    }
    return g;
}

inline LayerGraph build_densenet(const DenseNetSpec& spec) { return build_densenet_t<float>(spec); }
inline LayerGraph build_baseline_cnn(const DenseNetSpec& spec) {
    return build_baseline_cnn_t<float>(spec);
}

// He-normal conv/linear weights, BN gamma=1 beta=0, running stats reset.
// Deterministic under seed; each node draws from its own child stream.
template <class T>
void init_parameters(LayerGraphT<T>& graph, std::uint64_t seed) {
    Rng root(seed);
    for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
        NodeT<T>& node = graph.nodes[i];
        if (node.kind == OpKind::Conv2d || node.kind == OpKind::Linear) {
            Rng rng = root.split(i);
            std::size_t fan_in = 1;
            for (int d = 1; d < node.weight.rank(); ++d)
                fan_in *= static_cast<std::size_t>(node.weight.dim(d));
            const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
            for (auto& w : node.weight.data) w = static_cast<T>(rng.normal(0.0, stddev));
        } else if (node.kind == OpKind::BatchNorm) {
            node.bn.resize(node.bn.channels());
        }
    }
}

}  // namespace dcys
