#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "dcys/graph.hpp"
#include "dcys/rng.hpp"

namespace dcys {

// Central finite differences against an analytic gradient for an arbitrary
// scalar function. Relative error uses max(1,|analytic|) in the denominator so
// near-zero gradients do not blow up the ratio. Meant for 64-bit evaluation.
inline double fd_max_rel_err(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> x, const std::vector<double>& analytic, double h,
                             int max_coords = -1, Rng* rng = nullptr) {
    std::vector<std::size_t> coords(x.size());
    for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    if (max_coords > 0 && static_cast<std::size_t>(max_coords) < coords.size()) {
        if (rng) rng->shuffle(coords);
        coords.resize(static_cast<std::size_t>(max_coords));
    }
    double worst = 0.0;
    for (std::size_t i : coords) {
        const double keep = x[i];
        x[i] = keep + h;
        const double fp = f(x);
        x[i] = keep - h;
        const double fm = f(x);
        x[i] = keep;
        const double numeric = (fp - fm) / (2.0 * h);
        const double err = std::abs(numeric - analytic[i]) / std::max(1.0, std::abs(analytic[i]));
        worst = std::max(worst, err);
    }
    return worst;
}

enum class CheckTarget { Input, Weight, BnGamma, BnBeta };

// Scalar probe loss: dot(r, logits) with a fixed random projection r. Linear
// in the logits, so it exercises every parameter without softmax saturation.
inline double graph_fd_check(LayerGraphT<double>& graph, const Tensor64& input, CheckTarget target,
                             int node_id, double h, std::uint64_t seed, int max_coords = 32) {
    Rng rng(seed);
    ForwardCacheT<double> cache;
    graph_forward(graph, input, Mode::Eval, &cache);
    Tensor64 seed_grad(cache.acts[graph.logits_node].shape);
    for (auto& v : seed_grad.data) v = rng.uniform(-1.0, 1.0);

    graph.zero_grad();
    const Tensor64 input_grad =
        graph_backward(graph, cache, input, graph.logits_node, seed_grad);

    std::vector<double>* param = nullptr;
    std::vector<double> analytic;
    switch (target) {
        case CheckTarget::Input:
            analytic = input_grad.data;
            break;
        case CheckTarget::Weight:
            param = &graph.nodes[node_id].weight.data;
            analytic = graph.nodes[node_id].weight.grad;
            break;
        case CheckTarget::BnGamma:
            param = &graph.nodes[node_id].bn.gamma;
            analytic.assign(graph.nodes[node_id].bn.gamma_grad.begin(),
                            graph.nodes[node_id].bn.gamma_grad.end());
            break;
        case CheckTarget::BnBeta:
            param = &graph.nodes[node_id].bn.beta;
            analytic.assign(graph.nodes[node_id].bn.beta_grad.begin(),
                            graph.nodes[node_id].bn.beta_grad.end());
            break;
    }

    Tensor64 probe_input = input;
    auto loss = [&](const std::vector<double>& x) {
        if (target == CheckTarget::Input) {
            probe_input.data = x;
        } else {
            *param = x;
        }
        ForwardCacheT<double> fc;
        graph_forward(graph, probe_input, Mode::Eval, &fc);
        const Tensor64& logits = fc.acts[graph.logits_node];
        double s = 0.0;
        for (std::size_t i = 0; i < logits.data.size(); ++i) s += seed_grad.data[i] * logits.data[i];
        return s;
    };

    const std::vector<double> x0 = target == CheckTarget::Input ? input.data : *param;
    const double err = fd_max_rel_err(loss, x0, analytic, h, max_coords, &rng);
    if (param) *param = x0;  // restore
    return err;
}

// Max relative error over the input and every parameter tensor of the graph.
inline double graph_fd_check_all(LayerGraphT<double>& graph, const Tensor64& input, double h,
                                 std::uint64_t seed, int max_coords_per_tensor = 16) {
    double worst = graph_fd_check(graph, input, CheckTarget::Input, -1, h, seed, max_coords_per_tensor);
    for (int i = 0; i < static_cast<int>(graph.nodes.size()); ++i) {
        const OpKind k = graph.nodes[i].kind;
        if (k == OpKind::Conv2d || k == OpKind::Linear) {
            worst = std::max(worst, graph_fd_check(graph, input, CheckTarget::Weight, i, h, seed + i,
                                                   max_coords_per_tensor));
        } else if (k == OpKind::BatchNorm) {
            worst = std::max(worst, graph_fd_check(graph, input, CheckTarget::BnGamma, i, h, seed + i,
                                                   max_coords_per_tensor));
            worst = std::max(worst, graph_fd_check(graph, input, CheckTarget::BnBeta, i, h, seed + i,
                                                   max_coords_per_tensor));
        }
    }
    return worst;
}

}  // namespace dcys
