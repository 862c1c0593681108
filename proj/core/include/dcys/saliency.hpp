#pragma once

#include <string>
#include <vector>

#include "dcys/graph.hpp"

namespace dcys {

struct SaliencyMap {
    std::vector<double> values;  // side*side, normalized to [0,1] unless all_zero
    int side = 0;
    int target_class = 0;
    std::string patient_id, slice_id;
    double raw_min = 0.0, raw_max = 0.0;  // range before normalization
    bool all_zero = false;                // normalization skipped
};

namespace detail {

template <class T>
SaliencyMap input_gradient_map(LayerGraphT<T>& graph, const TensorT<T>& image, int target,
                               bool guided) {
    if (image.rank() != 4 || image.dim(0) != 1 || image.dim(1) != 1)
        throw ShapeError("saliency: expected image [1,1,S,S], got " + image.shape_str());
    if (target < 0 || target >= graph.num_classes)
        throw UsageError("saliency: target class " + std::to_string(target) + " out of range [0," +
                         std::to_string(graph.num_classes - 1) + "]");

    ForwardCacheT<T> cache;
    graph_forward(graph, image, Mode::Eval, &cache);
    TensorT<T> seed(cache.acts[graph.logits_node].shape);
    seed.at2(0, target) = T(1);

    BackwardOptions<T> opts;
    opts.guided = guided;
    graph.zero_grad();
    const TensorT<T> grad = graph_backward(graph, cache, image, graph.logits_node, seed, opts);

    SaliencyMap map;
    map.side = image.dim(2);
    map.target_class = target;
    map.values.assign(grad.data.begin(), grad.data.end());
    double lo = map.values[0], hi = map.values[0];
    for (double v : map.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    map.raw_min = lo;
    map.raw_max = hi;
    if (hi == lo) {
        map.all_zero = true;  // flat map, normalization skipped
        for (auto& v : map.values) v = 0.0;
    } else {
        for (auto& v : map.values) v = (v - lo) / (hi - lo);
    }
    return map;
}

}  // namespace detail

// Guided backpropagation: backward pass from the pre-softmax logit of
// `target`, with every ReLU passing gradient only where its forward input was
// positive AND the incoming gradient is positive.
template <class T>
SaliencyMap guided_backprop(LayerGraphT<T>& graph, const TensorT<T>& image, int target) {
    return detail::input_gradient_map(graph, image, target, /*guided=*/true);
}

// Plain input gradient with the standard ReLU adjoint; the comparison
// baseline for guided maps.
template <class T>
SaliencyMap vanilla_gradient(LayerGraphT<T>& graph, const TensorT<T>& image, int target) {
    return detail::input_gradient_map(graph, image, target, /*guided=*/false);
}

// Binary PGM (P5, maxval 255), value = round-half-up of 255*v.
void write_map_pgm(const SaliencyMap& map, const std::string& path);

}  // namespace dcys
