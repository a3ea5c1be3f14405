#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fedns/nn/arch.hpp"
#include "fedns/nn/model.hpp"

namespace fedns::nn {

// Per-layer activations kept by forward for the matching backward call.
// act[0] is the batch input; act[i+1] is the output of layer i. The last
// entry holds the logits.
struct ForwardCache {
    std::size_t count = 0;
    std::vector<std::vector<double>> act;
    std::vector<std::vector<std::int32_t>> pool_argmax; // per layer; empty unless maxpool

    std::span<const double> logits() const { return act.back(); }
};

// An architecture compiled against its shape chain. Holds no parameters;
// all operations are pure functions of their inputs and safe to call
// concurrently on distinct models.
class Network {
public:
    explicit Network(ArchitectureSpec arch);

    const ArchitectureSpec& arch() const { return arch_; }
    std::size_t num_classes() const { return classes_; }
    Shape3 input_shape() const { return arch_.input_shape; }
    const std::vector<Shape3>& layer_shapes() const { return shapes_; }

    // Fan-in-scaled uniform kernels U(-sqrt(6/fan_in), +sqrt(6/fan_in)),
    // zero biases; bitwise reproducible from the seed.
    ModelParams init_params(std::uint64_t seed) const;

    ForwardCache forward(const ModelParams& params, const Batch& batch) const;

    // mean over the batch of -log softmax(logits)[label]
    static double loss_cross_entropy(std::span<const double> logits, std::size_t classes,
                                     std::span<const int> labels);

    Gradient backward(const ModelParams& params, const ForwardCache& cache,
                      std::span<const int> labels) const;

    // w <- w - eta * g; throws DivergenceError on a non-finite gradient and
    // requires eta > 0
    static ModelParams sgd_step(const ModelParams& params, const Gradient& grad, double eta);
    static void sgd_step_inplace(ModelParams& params, const Gradient& grad, double eta);

    // argmax of each logits row, ties broken by the lowest class index
    std::vector<int> predict(const ModelParams& params, const Batch& batch) const;
    static std::vector<int> argmax_rows(std::span<const double> logits, std::size_t classes);

    Gradient zero_gradient() const;
    void check_params(const ModelParams& params) const; // shape congruence

private:
    ArchitectureSpec arch_;
    std::vector<Shape3> shapes_; // output shape per layer
    std::size_t classes_ = 0;

    void backward_into(const ModelParams& params, const ForwardCache& cache,
                       std::span<const int> labels, Gradient& out) const;
};

} // namespace fedns::nn
