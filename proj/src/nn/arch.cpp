#include "fedns/nn/arch.hpp"

#include "fedns/errors.hpp"

namespace fedns::nn {

namespace {
constexpr std::size_t kConvKernel = 5;
constexpr std::size_t kPoolSize = 2;
} // namespace

std::string layer_kind_name(LayerKind kind) {
    switch (kind) {
        case LayerKind::Conv: return "conv";
        case LayerKind::MaxPool: return "maxpool";
        case LayerKind::Relu: return "relu";
        case LayerKind::Flatten: return "flatten";
        case LayerKind::Dense: return "dense";
    }
    return "?";
}

ArchitectureSpec ArchitectureSpec::paper_cnn(Shape3 input, std::size_t classes) {
    ArchitectureSpec arch;
    arch.input_shape = input;
    arch.layers = {
        LayerSpec::conv(32),  LayerSpec::relu(), LayerSpec::maxpool(),
        LayerSpec::conv(64),  LayerSpec::relu(), LayerSpec::maxpool(),
        LayerSpec::flatten(),
        LayerSpec::dense(1024), LayerSpec::relu(),
        LayerSpec::dense(256),  LayerSpec::relu(),
        LayerSpec::dense(classes),
    };
    return arch;
}

ArchitectureSpec ArchitectureSpec::mlp(Shape3 input, const std::vector<std::size_t>& hidden,
                                       std::size_t classes) {
    ArchitectureSpec arch;
    arch.input_shape = input;
    arch.layers.push_back(LayerSpec::flatten());
    for (std::size_t h : hidden) {
        arch.layers.push_back(LayerSpec::dense(h));
        arch.layers.push_back(LayerSpec::relu());
    }
    arch.layers.push_back(LayerSpec::dense(classes));
    return arch;
}

std::vector<Shape3> ArchitectureSpec::infer_shapes() const {
    auto fail = [](std::size_t index, LayerKind kind, const std::string& what) {
        throw ShapeError("layer " + std::to_string(index) + " (" + layer_kind_name(kind) +
                         "): " + what);
    };
    if (layers.empty()) throw ShapeError("architecture has no layers");
    if (input_shape.numel() == 0) throw ShapeError("input shape has zero elements");

    std::vector<Shape3> out;
    out.reserve(layers.size());
    Shape3 cur = input_shape;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const LayerSpec& layer = layers[i];
        switch (layer.kind) {
            case LayerKind::Conv:
                if (layer.width == 0) fail(i, layer.kind, "zero output channels");
                if (cur.height < kConvKernel || cur.width < kConvKernel)
                    fail(i, layer.kind,
                         "input " + std::to_string(cur.height) + "x" + std::to_string(cur.width) +
                             " smaller than the 5x5 kernel");
                cur = {layer.width, cur.height - kConvKernel + 1, cur.width - kConvKernel + 1};
                break;
            case LayerKind::MaxPool:
                if (cur.height % kPoolSize != 0 || cur.width % kPoolSize != 0)
                    fail(i, layer.kind,
                         "input " + std::to_string(cur.height) + "x" + std::to_string(cur.width) +
                             " not divisible by the 2x2 window");
                cur = {cur.channels, cur.height / kPoolSize, cur.width / kPoolSize};
                break;
            case LayerKind::Relu:
                break;
            case LayerKind::Flatten:
                cur = {1, 1, cur.numel()};
                break;
            case LayerKind::Dense:
                if (layer.width == 0) fail(i, layer.kind, "zero output nodes");
                if (cur.channels != 1 || cur.height != 1)
                    fail(i, layer.kind, "input not flattened (insert a flatten layer first)");
                cur = {1, 1, layer.width};
                break;
        }
        out.push_back(cur);
    }
    if (layers.back().kind != LayerKind::Dense)
        throw ShapeError("final layer must be dense, got " +
                         layer_kind_name(layers.back().kind));
    return out;
}

std::size_t ArchitectureSpec::num_classes() const {
    if (layers.empty() || layers.back().kind != LayerKind::Dense)
        throw ShapeError("final layer must be dense");
    return layers.back().width;
}

} // namespace fedns::nn
