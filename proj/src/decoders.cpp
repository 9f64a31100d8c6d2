#include "dvsattn/decoders.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <numeric>
#include <ostream>

namespace dvsattn {
namespace {

constexpr Micros kSilent = std::numeric_limits<Micros>::max();

std::vector<Micros> first_spikes(std::span<const SpikeRecord> trace, std::size_t n_output) {
    std::vector<Micros> first(n_output, kSilent);
    for (const auto& r : trace) {
        if (r.layer != Layer::Output || r.neuron >= n_output) continue;
        first[r.neuron] = std::min(first[r.neuron], r.t);
    }
    return first;
}

std::string format_double(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, p);
}

}  // namespace

std::string_view to_string(Coding coding) {
    switch (coding) {
        case Coding::Rate: return "rate";
        case Coding::Latency: return "latency";
        case Coding::RankOrder: return "rank_order";
    }
    return "unknown";
}

std::optional<Coding> coding_from_string(std::string_view name) {
    for (auto c : {Coding::Rate, Coding::Latency, Coding::RankOrder}) {
        if (to_string(c) == name) return c;
    }
    return std::nullopt;
}

FeatureVector decode_rate(std::span<const SpikeRecord> trace, Micros window, std::size_t n_output) {
    FeatureVector f{Coding::Rate, std::vector<double>(n_output, 0.0), 0, 0};
    for (const auto& r : trace) {
        if (r.layer == Layer::Output && r.neuron < n_output && r.t >= 0 && r.t <= window) {
            f.values[r.neuron] += 1.0;
        }
    }
    return f;
}

FeatureVector decode_latency(std::span<const SpikeRecord> trace, Micros window, std::size_t n_output) {
    FeatureVector f{Coding::Latency, std::vector<double>(n_output, 1.0), 0, 0};
    const auto first = first_spikes(trace, n_output);
    for (std::size_t i = 0; i < n_output; ++i) {
        if (first[i] == kSilent || window <= 0) continue;
        f.values[i] = std::clamp(static_cast<double>(first[i]) / static_cast<double>(window), 0.0, 1.0);
    }
    return f;
}

FeatureVector decode_rank_order(std::span<const SpikeRecord> trace, std::size_t n_output) {
    FeatureVector f{Coding::RankOrder, std::vector<double>(n_output, static_cast<double>(n_output)), 0, 0};
    const auto first = first_spikes(trace, n_output);
    std::vector<std::size_t> order(n_output);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return first[a] < first[b]; });
    for (std::size_t rank = 0; rank < n_output; ++rank) {
        const auto i = order[rank];
        if (first[i] == kSilent) break;
        f.values[i] = static_cast<double>(rank);
    }
    return f;
}

FeatureVector decode(Coding coding, std::span<const SpikeRecord> trace, Micros window,
                     std::size_t n_output) {
    switch (coding) {
        case Coding::Rate: return decode_rate(trace, window, n_output);
        case Coding::Latency: return decode_latency(trace, window, n_output);
        case Coding::RankOrder: return decode_rank_order(trace, n_output);
    }
    return {};
}

void write_features_csv(std::span<const FeatureVector> features, std::ostream& out) {
    const std::size_t n = features.empty() ? 0 : features.front().values.size();
    out << "trial_id,label,coding";
    for (std::size_t i = 0; i < n; ++i) out << ",v" << i;
    out << '\n';
    for (const auto& f : features) {
        out << f.trial_id << ',' << f.label << ',' << to_string(f.coding);
        for (const double v : f.values) out << ',' << format_double(v);
        out << '\n';
    }
}

}  // namespace dvsattn
