#include "fedns/agg/aggregate.hpp"

#include <cmath>

#include "fedns/errors.hpp"
#include "fedns/fed/federation.hpp"

namespace fedns::agg {

namespace {

// Weighted average of the clients' values for one contiguous slice, anchored
// at the first survivor: out = x_a + sum_{k != a} w_k (x_k - x_a). With the
// weights summing to 1 this equals sum_k w_k x_k, and identical inputs
// aggregate to themselves bit for bit.
void weighted_average_slice(std::span<const const double*> client_slices,
                            std::span<const std::size_t> survivors,
                            std::span<const double> weights, double* out, std::size_t n) {
    const double* anchor = client_slices[survivors[0]];
    for (std::size_t q = 0; q < n; ++q) out[q] = anchor[q];
    for (std::size_t si = 1; si < survivors.size(); ++si) {
        const double w = weights[si];
        const double* x = client_slices[survivors[si]];
        for (std::size_t q = 0; q < n; ++q) out[q] += w * (x[q] - anchor[q]);
    }
}

void check_reports(std::span<const fed::ClientUpdateReport> reports) {
    if (reports.empty()) throw ConfigError("aggregation requires at least one report");
    for (std::size_t k = 1; k < reports.size(); ++k)
        if (!reports[k].params.same_shape(reports[0].params))
            throw ShapeError("client " + std::to_string(reports[k].client_id) +
                             ": report shape differs from client " +
                             std::to_string(reports[0].client_id));
    for (const auto& r : reports)
        if (r.total < 1) throw ConfigError("client " + std::to_string(r.client_id) +
                                           ": report has no samples");
}

std::vector<double> sample_fraction_weights(std::span<const fed::ClientUpdateReport> reports) {
    double n = 0;
    for (const auto& r : reports) n += static_cast<double>(r.total);
    std::vector<double> w(reports.size());
    for (std::size_t k = 0; k < reports.size(); ++k)
        w[k] = static_cast<double>(reports[k].total) / n;
    return w;
}

std::vector<std::size_t> all_clients(std::size_t count) {
    std::vector<std::size_t> ids(count);
    for (std::size_t k = 0; k < count; ++k) ids[k] = k;
    return ids;
}

// population variance, two-pass
double population_variance(std::span<const double> v) {
    double mean = 0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return ss / static_cast<double>(v.size());
}

// variance of (node vector of report) - (node vector of prev), bias included
double node_differential_variance(const nn::LayerTensors& report, const nn::LayerTensors& prev,
                                  std::size_t node) {
    const auto r = report.kernel_row(node);
    const auto p = prev.kernel_row(node);
    const std::size_t m = r.size() + 1;
    double mean = report.bias[node] - prev.bias[node];
    for (std::size_t q = 0; q < r.size(); ++q) mean += r[q] - p[q];
    mean /= static_cast<double>(m);
    double last = report.bias[node] - prev.bias[node] - mean;
    double ss = last * last;
    for (std::size_t q = 0; q < r.size(); ++q) {
        const double d = r[q] - p[q] - mean;
        ss += d * d;
    }
    return ss / static_cast<double>(m);
}

// Last-layer rule shared by lastfc and fedns: node c weighted by n_k^c / n^c,
// uniform over clients when n^c == 0.
void aggregate_last_layer_per_class(std::span<const fed::ClientUpdateReport> reports,
                                    nn::LayerTensors& out) {
    const nn::LayerTensors& first = reports[0].params.layers.back();
    const std::size_t classes = first.node_count();
    for (const auto& r : reports)
        if (r.per_class_counts.size() != classes)
            throw ShapeError("client " + std::to_string(r.client_id) + ": " +
                             std::to_string(r.per_class_counts.size()) +
                             " per-class counts but the last layer has " +
                             std::to_string(classes) + " nodes");

    const std::size_t K = reports.size();
    const auto survivors = all_clients(K);
    std::vector<const double*> rows(K);
    std::vector<const double*> biases(K);
    std::vector<double> weights(K);
    const std::size_t stride = first.kernel.size() / classes;

    for (std::size_t c = 0; c < classes; ++c) {
        double nc = 0;
        for (const auto& r : reports) nc += static_cast<double>(r.per_class_counts[c]);
        if (nc > 0) {
            for (std::size_t k = 0; k < K; ++k)
                weights[k] = static_cast<double>(reports[k].per_class_counts[c]) / nc;
        } else {
            const double u = 1.0 / static_cast<double>(K);
            for (std::size_t k = 0; k < K; ++k) weights[k] = u;
        }
        for (std::size_t k = 0; k < K; ++k) {
            const nn::LayerTensors& lt = reports[k].params.layers.back();
            rows[k] = lt.kernel.data.data() + c * stride;
            biases[k] = lt.bias.data() + c;
        }
        weighted_average_slice(rows, survivors, weights, out.kernel.data.data() + c * stride,
                               stride);
        weighted_average_slice(biases, survivors, weights, out.bias.data() + c, 1);
    }
}

nn::ModelParams zero_like(const nn::ModelParams& shape) {
    nn::ModelParams out;
    out.layers.reserve(shape.layers.size());
    for (const auto& l : shape.layers) {
        nn::LayerTensors lt;
        lt.kernel = nn::Tensor(l.kernel.dims);
        lt.bias.assign(l.bias.size(), 0.0);
        out.layers.push_back(std::move(lt));
    }
    return out;
}

} // namespace

std::string_view strategy_name(Strategy s) {
    switch (s) {
        case Strategy::FedAvg: return "fedavg";
        case Strategy::FedAvgLastFc: return "fedavg-lastfc";
        case Strategy::FedNs: return "fedns";
    }
    return "?";
}

Strategy strategy_from_name(std::string_view name) {
    if (name == "fedavg") return Strategy::FedAvg;
    if (name == "fedavg-lastfc") return Strategy::FedAvgLastFc;
    if (name == "fedns") return Strategy::FedNs;
    throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

std::vector<std::vector<double>> node_update_variance(const nn::ModelParams& report,
                                                      const nn::ModelParams& prev_global) {
    if (!report.same_shape(prev_global))
        throw ShapeError("report and previous global differ in shape");
    std::vector<std::vector<double>> out;
    if (report.layers.empty()) return out;
    out.resize(report.layers.size() - 1); // last layer excluded
    for (std::size_t l = 0; l + 1 < report.layers.size(); ++l) {
        const auto& rl = report.layers[l];
        out[l].resize(rl.node_count());
        for (std::size_t c = 0; c < rl.node_count(); ++c)
            out[l][c] = node_differential_variance(rl, prev_global.layers[l], c);
    }
    return out;
}

NodeVarianceTable NodeVarianceTable::build(std::span<const fed::ClientUpdateReport> reports,
                                           const nn::ModelParams& prev_global) {
    check_reports(reports);
    NodeVarianceTable table;
    const std::size_t K = reports.size();
    const std::size_t L = reports[0].params.layers.size();
    if (L == 0) return table;
    table.values.resize(L - 1);
    for (std::size_t l = 0; l + 1 < L; ++l)
        table.values[l].assign(reports[0].params.layers[l].node_count(),
                               std::vector<double>(K, 0.0));
    for (std::size_t k = 0; k < K; ++k) {
        auto v = node_update_variance(reports[k].params, prev_global);
        for (std::size_t l = 0; l + 1 < L; ++l)
            for (std::size_t c = 0; c < v[l].size(); ++c) table.values[l][c][k] = v[l][c];
    }
    return table;
}

NodeWeighting filter_and_normalize(std::span<const double> variances,
                                   std::span<const double> fallback_weights) {
    if (variances.empty()) throw ConfigError("filter_and_normalize: no client values");
    if (fallback_weights.size() != variances.size())
        throw ConfigError("filter_and_normalize: fallback weight count mismatch");
    const std::size_t K = variances.size();

    const double mu = [&] {
        double s = 0;
        for (double v : variances) s += v;
        return s / static_cast<double>(K);
    }();
    const double sigma = std::sqrt(population_variance(variances));

    NodeWeighting out;
    if (sigma == 0.0) {
        out.survivors = all_clients(K);
    } else {
        const double lo = mu - 2.0 * sigma, hi = mu + 2.0 * sigma;
        for (std::size_t k = 0; k < K; ++k)
            if (variances[k] >= lo && variances[k] <= hi) out.survivors.push_back(k);
    }

    double vsum = 0;
    for (std::size_t k : out.survivors) vsum += variances[k];
    out.weights.resize(out.survivors.size());
    if (vsum > 0) {
        for (std::size_t i = 0; i < out.survivors.size(); ++i)
            out.weights[i] = variances[out.survivors[i]] / vsum;
    } else {
        double fsum = 0;
        for (std::size_t k : out.survivors) fsum += fallback_weights[k];
        for (std::size_t i = 0; i < out.survivors.size(); ++i)
            out.weights[i] = fallback_weights[out.survivors[i]] / fsum;
    }
    return out;
}

nn::ModelParams aggregate_fedavg(std::span<const fed::ClientUpdateReport> reports) {
    check_reports(reports);
    const std::size_t K = reports.size();
    const std::vector<double> weights = sample_fraction_weights(reports);
    const auto survivors = all_clients(K);

    nn::ModelParams out = zero_like(reports[0].params);
    std::vector<const double*> slices(K);
    for (std::size_t l = 0; l < out.layers.size(); ++l) {
        for (std::size_t k = 0; k < K; ++k)
            slices[k] = reports[k].params.layers[l].kernel.data.data();
        weighted_average_slice(slices, survivors, weights, out.layers[l].kernel.data.data(),
                               out.layers[l].kernel.size());
        for (std::size_t k = 0; k < K; ++k) slices[k] = reports[k].params.layers[l].bias.data();
        weighted_average_slice(slices, survivors, weights, out.layers[l].bias.data(),
                               out.layers[l].bias.size());
    }
    return out;
}

nn::ModelParams aggregate_lastfc(std::span<const fed::ClientUpdateReport> reports) {
    check_reports(reports);
    const std::size_t K = reports.size();
    const std::size_t L = reports[0].params.layers.size();
    const std::vector<double> weights = sample_fraction_weights(reports);
    const auto survivors = all_clients(K);

    nn::ModelParams out = zero_like(reports[0].params);
    std::vector<const double*> slices(K);
    for (std::size_t l = 0; l + 1 < L; ++l) {
        for (std::size_t k = 0; k < K; ++k)
            slices[k] = reports[k].params.layers[l].kernel.data.data();
        weighted_average_slice(slices, survivors, weights, out.layers[l].kernel.data.data(),
                               out.layers[l].kernel.size());
        for (std::size_t k = 0; k < K; ++k) slices[k] = reports[k].params.layers[l].bias.data();
        weighted_average_slice(slices, survivors, weights, out.layers[l].bias.data(),
                               out.layers[l].bias.size());
    }
    aggregate_last_layer_per_class(reports, out.layers.back());
    return out;
}

nn::ModelParams aggregate_fedns(std::span<const fed::ClientUpdateReport> reports,
                                const nn::ModelParams& prev_global) {
    check_reports(reports);
    if (!reports[0].params.same_shape(prev_global))
        throw ShapeError("previous global model shape differs from the reports");
    const std::size_t K = reports.size();
    const std::size_t L = reports[0].params.layers.size();
    const std::vector<double> fallback = sample_fraction_weights(reports);
    const NodeVarianceTable table = NodeVarianceTable::build(reports, prev_global);

    nn::ModelParams out = zero_like(reports[0].params);
    std::vector<const double*> rows(K);
    std::vector<const double*> biases(K);
    for (std::size_t l = 0; l + 1 < L; ++l) {
        nn::LayerTensors& ol = out.layers[l];
        const std::size_t stride = ol.kernel.size() / ol.node_count();
        for (std::size_t c = 0; c < ol.node_count(); ++c) {
            const NodeWeighting nw = filter_and_normalize(table.values[l][c], fallback);
            for (std::size_t k = 0; k < K; ++k) {
                const nn::LayerTensors& lt = reports[k].params.layers[l];
                rows[k] = lt.kernel.data.data() + c * stride;
                biases[k] = lt.bias.data() + c;
            }
            weighted_average_slice(rows, nw.survivors, nw.weights,
                                   ol.kernel.data.data() + c * stride, stride);
            weighted_average_slice(biases, nw.survivors, nw.weights, ol.bias.data() + c, 1);
        }
    }
    aggregate_last_layer_per_class(reports, out.layers.back());
    return out;
}

nn::ModelParams aggregate(Strategy strategy, std::span<const fed::ClientUpdateReport> reports,
                          const nn::ModelParams& prev_global) {
    switch (strategy) {
        case Strategy::FedAvg: return aggregate_fedavg(reports);
        case Strategy::FedAvgLastFc: return aggregate_lastfc(reports);
        case Strategy::FedNs: return aggregate_fedns(reports, prev_global);
    }
    throw ConfigError("unknown strategy");
}

} // namespace fedns::agg
