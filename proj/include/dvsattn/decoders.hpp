#pragma once

// Output spike trains -> fixed-length feature vectors.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dvsattn/attention_net.hpp"

namespace dvsattn {

enum class Coding { Rate, Latency, RankOrder };

std::string_view to_string(Coding coding);
std::optional<Coding> coding_from_string(std::string_view name);

struct FeatureVector {
    Coding coding = Coding::Rate;
    std::vector<double> values;
    std::size_t trial_id = 0;
    int label = 0;  ///< carried for evaluation only

    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// Spike count per output neuron in [0, window].
FeatureVector decode_rate(std::span<const SpikeRecord> trace, Micros window, std::size_t n_output);

/// First spike time divided by the window; 1.0 for silent neurons.
FeatureVector decode_latency(std::span<const SpikeRecord> trace, Micros window, std::size_t n_output);

/// Rank of each neuron's first spike (0 = earliest, ties to the lower id);
/// silent neurons get rank n_output.
FeatureVector decode_rank_order(std::span<const SpikeRecord> trace, std::size_t n_output);

FeatureVector decode(Coding coding, std::span<const SpikeRecord> trace, Micros window,
                     std::size_t n_output);

/// `trial_id,label,coding,v0..v{n-1}` with a header row.
void write_features_csv(std::span<const FeatureVector> features, std::ostream& out);

}  // namespace dvsattn
