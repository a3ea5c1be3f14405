#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedns/agg/aggregate.hpp"
#include "fedns/data/sampling.hpp"
#include "fedns/metrics/metrics.hpp"
#include "fedns/nn/network.hpp"
#include "fedns/rng.hpp"

namespace fedns::fed {

struct FederationConfig {
    int rounds = 50;
    int clients_per_round = 10; // K
    int pool_size = 10;         // P >= K
    int local_epochs = 5;       // E
    int batch_size = 10;        // B
    double eta = 0.01;
    data::SamplingRegime regime;
    std::uint64_t seed = 1;

    void validate() const; // throws ConfigError
};

// One client's upload: post-training parameters plus its per-class and total
// sample counts for the round.
struct ClientUpdateReport {
    int client_id = 0;
    nn::ModelParams params;
    std::vector<std::int64_t> per_class_counts;
    std::int64_t total = 0;
};

struct RoundRecord {
    int round = 0;
    std::string strategy;
    metrics::MetricsRecord metrics; // on the held-out test set, post-aggregation
    std::vector<int> clients;
};

// Splits [0, total) into shuffled batches of size batch_size; the final short
// batch is kept.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t total, std::size_t batch_size,
                                                    Rng& rng);

// E epochs of mini-batch SGD starting from a copy of the broadcast model.
// Throws DivergenceError when the loss goes non-finite.
ClientUpdateReport client_update(const nn::Network& net, const nn::ModelParams& global,
                                 const data::ClientRoundData& data,
                                 const FederationConfig& cfg, Rng& rng, int client_id = 0);

// K distinct ids drawn uniformly without replacement from [0, pool).
std::vector<int> sample_clients(int pool, int k, Rng& rng);

struct RoundOutcome {
    nn::ModelParams global;
    std::vector<ClientUpdateReport> reports;
    std::vector<int> clients;
};

// One communication round: select clients, sample their round data, run local
// training (clients may run concurrently), aggregate in client-slot order.
// All RNG streams derive from (cfg.seed, round, client_id) and never from the
// strategy, so paired-seed runs see identical selections and data.
RoundOutcome run_round(const nn::Network& net, const nn::ModelParams& global,
                       const FederationConfig& cfg, agg::Strategy strategy,
                       const data::Dataset& train, int round);

// Full protocol: initialize from cfg.seed, run cfg.rounds rounds, evaluate on
// the test set after every aggregation.
std::vector<RoundRecord> run_experiment(const FederationConfig& cfg,
                                        const nn::ArchitectureSpec& arch,
                                        const data::Dataset& train, const data::Dataset& test,
                                        agg::Strategy strategy, std::span<const int> eval_ks);

} // namespace fedns::fed
