#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fedns/nn/arch.hpp"
#include "fedns/tensor.hpp"

namespace fedns::nn {

// Kernel + bias of one parameterized layer (conv or dense). The node view
// used by aggregation slices the kernel by its leading dimension: node c of a
// dense layer is row c plus bias[c]; node c of a conv layer is the whole
// out-channel-c filter plus bias[c].
struct LayerTensors {
    Tensor kernel;
    std::vector<double> bias;

    std::size_t node_count() const { return bias.size(); }
    // elements per node, bias included
    std::size_t node_dim() const {
        return bias.empty() ? 0 : kernel.size() / bias.size() + 1;
    }
    std::span<double> kernel_row(std::size_t node) {
        const std::size_t stride = kernel.size() / bias.size();
        return {kernel.data.data() + node * stride, stride};
    }
    std::span<const double> kernel_row(std::size_t node) const {
        const std::size_t stride = kernel.size() / bias.size();
        return {kernel.data.data() + node * stride, stride};
    }
    std::size_t param_count() const { return kernel.size() + bias.size(); }
    bool same_shape(const LayerTensors& o) const {
        return kernel.same_shape(o.kernel) && bias.size() == o.bias.size();
    }
};

// Ordered kernels/biases of every parameterized layer. Non-parameterized
// layers (relu, pool, flatten) hold no entry. Value type: copy freely.
struct ModelParams {
    std::vector<LayerTensors> layers;

    bool same_shape(const ModelParams& o) const {
        if (layers.size() != o.layers.size()) return false;
        for (std::size_t i = 0; i < layers.size(); ++i)
            if (!layers[i].same_shape(o.layers[i])) return false;
        return true;
    }
    bool all_finite() const {
        for (const auto& l : layers) {
            if (!l.kernel.all_finite()) return false;
            for (double b : l.bias)
                if (!std::isfinite(b)) return false;
        }
        return true;
    }
    std::size_t param_count() const {
        std::size_t n = 0;
        for (const auto& l : layers) n += l.param_count();
        return n;
    }
};

// dLoss/dParam, shape-congruent to the model it was computed from.
struct Gradient {
    std::vector<LayerTensors> layers;

    bool same_shape(const ModelParams& m) const {
        if (layers.size() != m.layers.size()) return false;
        for (std::size_t i = 0; i < layers.size(); ++i)
            if (!layers[i].same_shape(m.layers[i])) return false;
        return true;
    }
    bool all_finite() const {
        for (const auto& l : layers) {
            if (!l.kernel.all_finite()) return false;
            for (double b : l.bias)
                if (!std::isfinite(b)) return false;
        }
        return true;
    }
};

// B samples, inputs normalized to [0,1], labels in [0, classes).
struct Batch {
    Shape3 shape;
    std::size_t count = 0;
    std::vector<double> inputs; // count * shape.numel()
    std::vector<int> labels;    // count
};

} // namespace fedns::nn
