#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "fedns/nn/model.hpp"

namespace fedns::fed {
struct ClientUpdateReport; // fed/federation.hpp
}

namespace fedns::agg {

enum class Strategy { FedAvg, FedAvgLastFc, FedNs };

std::string_view strategy_name(Strategy s);
Strategy strategy_from_name(std::string_view name); // throws ConfigError

// Per-node variance of the differential weights of every non-last
// parameterized layer, for all reporting clients. values[l][c][k] is client
// k's population variance of node c of layer l; the last layer is excluded
// and layer indices count parameterized layers only.
struct NodeVarianceTable {
    std::vector<std::vector<std::vector<double>>> values;

    static NodeVarianceTable build(std::span<const fed::ClientUpdateReport> reports,
                                   const nn::ModelParams& prev_global);
};

// Survivors of the 2-sigma filter for one node and their normalized weights.
struct NodeWeighting {
    std::vector<std::size_t> survivors; // client indices, ascending
    std::vector<double> weights;        // >= 0, sum to 1 over survivors
};

// One client's per-node variances: variance (population, divide by the node
// element count) of report minus prev_global, node by node, for every
// parameterized layer except the last. result[l][c].
std::vector<std::vector<double>> node_update_variance(const nn::ModelParams& report,
                                                      const nn::ModelParams& prev_global);

// 2-sigma filter over the K client variances of one node, then weights
// proportional to surviving variances. sigma == 0 keeps everyone; a zero
// surviving sum falls back to the given n_k/n weights renormalized over
// survivors. Values exactly at mu +/- 2 sigma survive.
NodeWeighting filter_and_normalize(std::span<const double> variances,
                                   std::span<const double> fallback_weights);

// w = sum_k (n_k / n) w_k over every parameter
nn::ModelParams aggregate_fedavg(std::span<const fed::ClientUpdateReport> reports);

// FedAvg everywhere except the last layer, whose node c is weighted by the
// per-class sample counts n_k^c / n^c. A class nobody reported falls back to
// the uniform average for that node.
nn::ModelParams aggregate_lastfc(std::span<const fed::ClientUpdateReport> reports);

// Variance-weighted node-level fusion with the 2-sigma filter for all layers
// but the last; the last layer follows the per-class rule.
nn::ModelParams aggregate_fedns(std::span<const fed::ClientUpdateReport> reports,
                                const nn::ModelParams& prev_global);

nn::ModelParams aggregate(Strategy strategy, std::span<const fed::ClientUpdateReport> reports,
                          const nn::ModelParams& prev_global);

} // namespace fedns::agg
