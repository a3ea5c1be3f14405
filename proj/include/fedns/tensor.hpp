#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

namespace fedns {

// Dense row-major tensor of doubles. Dense kernels are {out, in}; conv
// kernels are {out_ch, in_ch, kh, kw}.
struct Tensor {
    std::vector<std::size_t> dims;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> d)
        : dims(std::move(d)),
          data(std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                               std::multiplies<>()),
               0.0) {}

    std::size_t size() const { return data.size(); }
    std::size_t ndim() const { return dims.size(); }

    bool same_shape(const Tensor& o) const { return dims == o.dims; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

} // namespace fedns
