#include "fedns/nn/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "fedns/errors.hpp"
#include "fedns/rng.hpp"

namespace fedns::nn {

namespace {

constexpr std::size_t kK = 5; // conv kernel side
constexpr std::size_t kP = 2; // pool window side

// fixed-order dot product with independent accumulators
double dot(const double* a, const double* b, std::size_t n) {
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    double tail = 0;
    for (; i < n; ++i) tail += a[i] * b[i];
    return ((s0 + s2) + (s1 + s3)) + tail;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

} // namespace

Network::Network(ArchitectureSpec arch) : arch_(std::move(arch)) {
    shapes_ = arch_.infer_shapes();
    classes_ = arch_.num_classes();
}

ModelParams Network::init_params(std::uint64_t seed) const {
    Rng rng(seed);
    ModelParams params;
    Shape3 in = arch_.input_shape;
    for (std::size_t i = 0; i < arch_.layers.size(); ++i) {
        const LayerSpec& layer = arch_.layers[i];
        if (layer.kind == LayerKind::Conv) {
            LayerTensors lt;
            lt.kernel = Tensor({layer.width, in.channels, kK, kK});
            lt.bias.assign(layer.width, 0.0);
            const double a = std::sqrt(6.0 / static_cast<double>(in.channels * kK * kK));
            for (double& w : lt.kernel.data) w = rng.uniform(-a, a);
            params.layers.push_back(std::move(lt));
        } else if (layer.kind == LayerKind::Dense) {
            LayerTensors lt;
            lt.kernel = Tensor({layer.width, in.numel()});
            lt.bias.assign(layer.width, 0.0);
            const double a = std::sqrt(6.0 / static_cast<double>(in.numel()));
            for (double& w : lt.kernel.data) w = rng.uniform(-a, a);
            params.layers.push_back(std::move(lt));
        }
        in = shapes_[i];
    }
    return params;
}

void Network::check_params(const ModelParams& params) const {
    std::size_t p = 0;
    Shape3 in = arch_.input_shape;
    for (std::size_t i = 0; i < arch_.layers.size(); ++i) {
        const LayerSpec& layer = arch_.layers[i];
        if (layer.kind == LayerKind::Conv || layer.kind == LayerKind::Dense) {
            if (p >= params.layers.size())
                throw ShapeError("model has fewer parameterized layers than the architecture");
            const LayerTensors& lt = params.layers[p];
            std::vector<std::size_t> want =
                layer.kind == LayerKind::Conv
                    ? std::vector<std::size_t>{layer.width, in.channels, kK, kK}
                    : std::vector<std::size_t>{layer.width, in.numel()};
            if (lt.kernel.dims != want || lt.bias.size() != layer.width)
                throw ShapeError("layer " + std::to_string(i) + " (" +
                                 layer_kind_name(layer.kind) + "): parameter shape mismatch");
            ++p;
        }
        in = shapes_[i];
    }
    if (p != params.layers.size())
        throw ShapeError("model has more parameterized layers than the architecture");
}

ForwardCache Network::forward(const ModelParams& params, const Batch& batch) const {
    check_params(params);
    if (batch.count == 0) throw ShapeError("empty batch");
    if (!(batch.shape == arch_.input_shape))
        throw ShapeError("batch shape does not match the architecture input");
    if (batch.inputs.size() != batch.count * batch.shape.numel() ||
        batch.labels.size() != batch.count)
        throw ShapeError("batch buffer sizes inconsistent with count");

    const std::size_t B = batch.count;
    ForwardCache cache;
    cache.count = B;
    cache.act.resize(arch_.layers.size() + 1);
    cache.pool_argmax.resize(arch_.layers.size());
    cache.act[0] = batch.inputs;

    std::size_t p = 0;
    Shape3 in = arch_.input_shape;
    for (std::size_t i = 0; i < arch_.layers.size(); ++i) {
        const LayerSpec& layer = arch_.layers[i];
        const Shape3 out = shapes_[i];
        const std::vector<double>& x = cache.act[i];
        std::vector<double>& y = cache.act[i + 1];

        switch (layer.kind) {
            case LayerKind::Conv: {
                const LayerTensors& lt = params.layers[p++];
                y.assign(B * out.numel(), 0.0);
                const std::size_t IH = in.height, IW = in.width;
                const std::size_t OH = out.height, OW = out.width;
                for (std::size_t b = 0; b < B; ++b) {
                    const double* xin = x.data() + b * in.numel();
                    double* yout = y.data() + b * out.numel();
                    for (std::size_t oc = 0; oc < out.channels; ++oc) {
                        double* plane = yout + oc * OH * OW;
                        const double bias = lt.bias[oc];
                        for (std::size_t q = 0; q < OH * OW; ++q) plane[q] = bias;
                        for (std::size_t ic = 0; ic < in.channels; ++ic) {
                            const double* xplane = xin + ic * IH * IW;
                            const double* kbase =
                                lt.kernel.data.data() + (oc * in.channels + ic) * kK * kK;
                            for (std::size_t ky = 0; ky < kK; ++ky) {
                                for (std::size_t kx = 0; kx < kK; ++kx) {
                                    const double w = kbase[ky * kK + kx];
                                    for (std::size_t oy = 0; oy < OH; ++oy) {
                                        axpy(w, xplane + (oy + ky) * IW + kx,
                                             plane + oy * OW, OW);
                                    }
                                }
                            }
                        }
                    }
                }
                break;
            }
            case LayerKind::MaxPool: {
                y.assign(B * out.numel(), 0.0);
                auto& arg = cache.pool_argmax[i];
                arg.assign(B * out.numel(), 0);
                const std::size_t IH = in.height, IW = in.width;
                const std::size_t OH = out.height, OW = out.width;
                for (std::size_t b = 0; b < B; ++b) {
                    const double* xin = x.data() + b * in.numel();
                    double* yout = y.data() + b * out.numel();
                    std::int32_t* abase = arg.data() + b * out.numel();
                    for (std::size_t c = 0; c < in.channels; ++c) {
                        for (std::size_t oy = 0; oy < OH; ++oy) {
                            for (std::size_t ox = 0; ox < OW; ++ox) {
                                std::size_t best = c * IH * IW + (kP * oy) * IW + kP * ox;
                                double bv = xin[best];
                                for (std::size_t wy = 0; wy < kP; ++wy) {
                                    for (std::size_t wx = 0; wx < kP; ++wx) {
                                        std::size_t idx =
                                            c * IH * IW + (kP * oy + wy) * IW + kP * ox + wx;
                                        if (xin[idx] > bv) {
                                            bv = xin[idx];
                                            best = idx;
                                        }
                                    }
                                }
                                yout[c * OH * OW + oy * OW + ox] = bv;
                                abase[c * OH * OW + oy * OW + ox] =
                                    static_cast<std::int32_t>(best);
                            }
                        }
                    }
                }
                break;
            }
            case LayerKind::Relu: {
                y.resize(x.size());
                for (std::size_t q = 0; q < x.size(); ++q) y[q] = x[q] > 0.0 ? x[q] : 0.0;
                break;
            }
            case LayerKind::Flatten: {
                y = x;
                break;
            }
            case LayerKind::Dense: {
                const LayerTensors& lt = params.layers[p++];
                const std::size_t IN = in.numel(), ON = out.numel();
                y.assign(B * ON, 0.0);
                for (std::size_t b = 0; b < B; ++b) {
                    const double* xin = x.data() + b * IN;
                    double* yout = y.data() + b * ON;
                    for (std::size_t o = 0; o < ON; ++o)
                        yout[o] = lt.bias[o] + dot(lt.kernel.data.data() + o * IN, xin, IN);
                }
                break;
            }
        }
        in = out;
    }
    return cache;
}

double Network::loss_cross_entropy(std::span<const double> logits, std::size_t classes,
                                   std::span<const int> labels) {
    const std::size_t B = labels.size();
    if (B == 0 || logits.size() != B * classes)
        throw ShapeError("logits size does not match labels");
    double total = 0;
    for (std::size_t b = 0; b < B; ++b) {
        const int y = labels[b];
        if (y < 0 || static_cast<std::size_t>(y) >= classes)
            throw ShapeError("label out of range");
        const double* row = logits.data() + b * classes;
        double m = row[0];
        for (std::size_t c = 1; c < classes; ++c) m = std::max(m, row[c]);
        double s = 0;
        for (std::size_t c = 0; c < classes; ++c) s += std::exp(row[c] - m);
        total += std::log(s) - (row[y] - m);
    }
    return total / static_cast<double>(B);
}

Gradient Network::zero_gradient() const {
    Gradient g;
    Shape3 in = arch_.input_shape;
    for (std::size_t i = 0; i < arch_.layers.size(); ++i) {
        const LayerSpec& layer = arch_.layers[i];
        if (layer.kind == LayerKind::Conv) {
            LayerTensors lt;
            lt.kernel = Tensor({layer.width, in.channels, kK, kK});
            lt.bias.assign(layer.width, 0.0);
            g.layers.push_back(std::move(lt));
        } else if (layer.kind == LayerKind::Dense) {
            LayerTensors lt;
            lt.kernel = Tensor({layer.width, in.numel()});
            lt.bias.assign(layer.width, 0.0);
            g.layers.push_back(std::move(lt));
        }
        in = shapes_[i];
    }
    return g;
}

Gradient Network::backward(const ModelParams& params, const ForwardCache& cache,
                           std::span<const int> labels) const {
    Gradient g = zero_gradient();
    backward_into(params, cache, labels, g);
    return g;
}

void Network::backward_into(const ModelParams& params, const ForwardCache& cache,
                            std::span<const int> labels, Gradient& g) const {
    check_params(params);
    const std::size_t B = cache.count;
    if (labels.size() != B) throw ShapeError("label count does not match the cached batch");
    if (cache.act.size() != arch_.layers.size() + 1)
        throw ShapeError("cache does not match this architecture");
    for (std::size_t i = 0; i < arch_.layers.size(); ++i) {
        if (cache.act[i + 1].size() != B * shapes_[i].numel())
            throw ShapeError("cache activations do not match this architecture (stale cache?)");
    }
    if (cache.act[0].size() != B * arch_.input_shape.numel())
        throw ShapeError("cache input does not match this architecture (stale cache?)");

    // softmax cross-entropy gradient, mean over the batch
    std::vector<double> dcur(B * classes_);
    {
        const std::vector<double>& z = cache.act.back();
        const double invb = 1.0 / static_cast<double>(B);
        for (std::size_t b = 0; b < B; ++b) {
            const int y = labels[b];
            if (y < 0 || static_cast<std::size_t>(y) >= classes_)
                throw ShapeError("label out of range");
            const double* row = z.data() + b * classes_;
            double* drow = dcur.data() + b * classes_;
            double m = row[0];
            for (std::size_t c = 1; c < classes_; ++c) m = std::max(m, row[c]);
            double s = 0;
            for (std::size_t c = 0; c < classes_; ++c) {
                drow[c] = std::exp(row[c] - m);
                s += drow[c];
            }
            const double invs = 1.0 / s;
            for (std::size_t c = 0; c < classes_; ++c) drow[c] *= invs * invb;
            drow[y] -= invb;
        }
    }

    std::size_t p = params.layers.size();
    std::vector<double> dprev;
    for (std::size_t i = arch_.layers.size(); i-- > 0;) {
        const LayerSpec& layer = arch_.layers[i];
        const Shape3 in = i == 0 ? arch_.input_shape : shapes_[i - 1];
        const Shape3 out = shapes_[i];
        const std::vector<double>& x = cache.act[i];

        switch (layer.kind) {
            case LayerKind::Conv: {
                const LayerTensors& lt = params.layers[--p];
                LayerTensors& gl = g.layers[p];
                dprev.assign(B * in.numel(), 0.0);
                const std::size_t IH = in.height, IW = in.width;
                const std::size_t OH = out.height, OW = out.width;
                for (std::size_t b = 0; b < B; ++b) {
                    const double* xin = x.data() + b * in.numel();
                    const double* dout = dcur.data() + b * out.numel();
                    double* din = dprev.data() + b * in.numel();
                    for (std::size_t oc = 0; oc < out.channels; ++oc) {
                        const double* dplane = dout + oc * OH * OW;
                        double bsum = 0;
                        for (std::size_t q = 0; q < OH * OW; ++q) bsum += dplane[q];
                        gl.bias[oc] += bsum;
                        for (std::size_t ic = 0; ic < in.channels; ++ic) {
                            const double* xplane = xin + ic * IH * IW;
                            double* dxplane = din + ic * IH * IW;
                            const double* kbase =
                                lt.kernel.data.data() + (oc * in.channels + ic) * kK * kK;
                            double* gbase =
                                gl.kernel.data.data() + (oc * in.channels + ic) * kK * kK;
                            for (std::size_t ky = 0; ky < kK; ++ky) {
                                for (std::size_t kx = 0; kx < kK; ++kx) {
                                    const double w = kbase[ky * kK + kx];
                                    double acc = 0;
                                    for (std::size_t oy = 0; oy < OH; ++oy) {
                                        const double* drow = dplane + oy * OW;
                                        const double* xrow = xplane + (oy + ky) * IW + kx;
                                        double* dxrow = dxplane + (oy + ky) * IW + kx;
                                        acc += dot(drow, xrow, OW);
                                        axpy(w, drow, dxrow, OW);
                                    }
                                    gbase[ky * kK + kx] += acc;
                                }
                            }
                        }
                    }
                }
                dcur.swap(dprev);
                break;
            }
            case LayerKind::MaxPool: {
                dprev.assign(B * in.numel(), 0.0);
                const auto& arg = cache.pool_argmax[i];
                for (std::size_t b = 0; b < B; ++b) {
                    const double* dout = dcur.data() + b * out.numel();
                    double* din = dprev.data() + b * in.numel();
                    const std::int32_t* abase = arg.data() + b * out.numel();
                    for (std::size_t q = 0; q < out.numel(); ++q) din[abase[q]] += dout[q];
                }
                dcur.swap(dprev);
                break;
            }
            case LayerKind::Relu: {
                for (std::size_t q = 0; q < dcur.size(); ++q)
                    if (!(x[q] > 0.0)) dcur[q] = 0.0;
                break;
            }
            case LayerKind::Flatten: {
                break; // same flat buffer either side
            }
            case LayerKind::Dense: {
                const LayerTensors& lt = params.layers[--p];
                LayerTensors& gl = g.layers[p];
                const std::size_t IN = in.numel(), ON = out.numel();
                dprev.assign(B * IN, 0.0);
                for (std::size_t b = 0; b < B; ++b) {
                    const double* xin = x.data() + b * IN;
                    const double* dout = dcur.data() + b * ON;
                    double* din = dprev.data() + b * IN;
                    for (std::size_t o = 0; o < ON; ++o) {
                        const double d = dout[o];
                        gl.bias[o] += d;
                        axpy(d, xin, gl.kernel.data.data() + o * IN, IN);
                        axpy(d, lt.kernel.data.data() + o * IN, din, IN);
                    }
                }
                dcur.swap(dprev);
                break;
            }
        }
    }
}

void Network::sgd_step_inplace(ModelParams& params, const Gradient& grad, double eta) {
    if (!(eta > 0.0)) throw ConfigError("sgd_step: eta must be > 0");
    if (!grad.same_shape(params)) throw ShapeError("sgd_step: gradient shape mismatch");
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        LayerTensors& pt = params.layers[l];
        const LayerTensors& gt = grad.layers[l];
        for (std::size_t q = 0; q < pt.kernel.data.size(); ++q) {
            const double gv = gt.kernel.data[q];
            if (!std::isfinite(gv)) throw DivergenceError("non-finite gradient");
            pt.kernel.data[q] -= eta * gv;
        }
        for (std::size_t q = 0; q < pt.bias.size(); ++q) {
            const double gv = gt.bias[q];
            if (!std::isfinite(gv)) throw DivergenceError("non-finite gradient");
            pt.bias[q] -= eta * gv;
        }
    }
}

ModelParams Network::sgd_step(const ModelParams& params, const Gradient& grad, double eta) {
    ModelParams next = params;
    sgd_step_inplace(next, grad, eta);
    return next;
}

std::vector<int> Network::argmax_rows(std::span<const double> logits, std::size_t classes) {
    const std::size_t n = logits.size() / classes;
    std::vector<int> out(n);
    for (std::size_t b = 0; b < n; ++b) {
        const double* row = logits.data() + b * classes;
        std::size_t best = 0;
        for (std::size_t c = 1; c < classes; ++c)
            if (row[c] > row[best]) best = c;
        out[b] = static_cast<int>(best);
    }
    return out;
}

std::vector<int> Network::predict(const ModelParams& params, const Batch& batch) const {
    ForwardCache cache = forward(params, batch);
    return argmax_rows(cache.logits(), classes_);
}

} // namespace fedns::nn
