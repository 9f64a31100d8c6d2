#pragma once

// Attention-gated three-layer network.
//
//   input cube --(gated)--> intermediate --(always integrates)--> output (WTA)
//        \-- habituating synapses --> attention neuron (hysteresis)
//
// The intermediate layer receives input only while the attention neuron is
// active. Output neurons keep integrating while attention is active but cannot
// spike until it releases, so the readout sees the whole attended pattern.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "dvsattn/encoder.hpp"
#include "dvsattn/events.hpp"
#include "dvsattn/snn_core.hpp"

namespace dvsattn {

struct NetworkTopology {
    std::size_t n_input = 0;
    std::size_t n_intermediate = 64;
    std::size_t n_output = 10;
    bool lateral_inhibition_output = true;

    void validate() const;
    friend bool operator==(const NetworkTopology&, const NetworkTopology&) = default;
};

struct AttentionParams {
    double theta_on = 1.0;
    double theta_off = 0.4;
    double tau_att = 20'000.0;     ///< us, membrane leak of the attention neuron
    double input_weight = 0.02;    ///< potential per fully recovered input spike
    double u_habit = 0.02;         ///< habituation depression per input spike
    double tau_habit = 5e7;        ///< us, habituation recovery

    void validate() const;
    friend bool operator==(const AttentionParams&, const AttentionParams&) = default;
};

/// Gains and switches of the layered simulation that are not neuron or synapse kernels.
struct NetworkParams {
    double input_gain = 0.05;   ///< scales input->intermediate w*e into potential units
    double hidden_gain = 0.2;   ///< scales intermediate->output w*e into potential units
    bool output_freeze = false; ///< freeze output integration entirely while attention is active
    double tail_slices = 2.0;   ///< simulated tail after the last event, in slice intervals
    double output_tau_m = 0.0;  ///< output membrane time constant, us; 0 uses the shared tau_m

    void validate() const;
    friend bool operator==(const NetworkParams&, const NetworkParams&) = default;
};

struct AttentionState {
    double v = 0.0;
    bool active = false;
    std::vector<double> habituation;  ///< efficacy per input neuron, in (0, 1]

    friend bool operator==(const AttentionState&, const AttentionState&) = default;
};

AttentionState attention_update(AttentionState att, std::span<const std::uint32_t> input_spikes,
                                Micros dt, const AttentionParams& params);

enum class Layer : std::uint8_t { Attention = 0, Intermediate = 1, Output = 2 };

std::string_view to_string(Layer layer);
Layer layer_from_string(std::string_view name);

struct SpikeRecord {
    Micros t = 0;
    Layer layer = Layer::Output;
    std::uint32_t neuron = 0;
    friend bool operator==(const SpikeRecord&, const SpikeRecord&) = default;
};

struct AttentionInterval {
    Micros t_on = 0;
    Micros t_off = 0;
    friend bool operator==(const AttentionInterval&, const AttentionInterval&) = default;
};

struct SpikeTrace {
    std::vector<SpikeRecord> records;
    std::vector<AttentionInterval> attention_intervals;

    std::size_t count(Layer layer) const;
    friend bool operator==(const SpikeTrace&, const SpikeTrace&) = default;
};

void write_trace_csv(const SpikeTrace& trace, std::ostream& spikes, std::ostream& intervals);
std::vector<SpikeRecord> read_trace_csv(std::istream& in);
std::vector<AttentionInterval> read_intervals_csv(std::istream& in);

struct NetworkState {
    NetworkTopology topology;
    NeuronParams neuron;
    PlasticityParams plasticity;
    AttentionParams attention_params;
    NetworkParams params;

    SynapseArray input_to_intermediate;
    SynapseArray intermediate_to_output;
    std::vector<NeuronState> intermediate;
    std::vector<NeuronState> output;
    AttentionState attention;

    /// Resets membrane potentials, traces, efficacies and the attention
    /// potential. Weights, adaptive thresholds and habituation persist.
    void reset_transients();

    friend bool operator==(const NetworkState&, const NetworkState&) = default;
};

NetworkState build_network(const NetworkTopology& topology, const NeuronParams& neuron,
                           const PlasticityParams& plasticity, const AttentionParams& attention,
                           const NetworkParams& params, std::uint64_t seed);

struct StepSpikes {
    bool attention_on = false;
    bool attention_off = false;
    std::vector<std::uint32_t> intermediate;
    std::vector<std::uint32_t> output;
};

/// Advances the network by one step of length dt ending at time t.
/// With force_release the attention neuron is switched off at this step
/// regardless of its potential.
StepSpikes simulate_step(NetworkState& net, std::span<const std::uint32_t> input_spikes, Micros t,
                         Micros dt, bool force_release = false);

/// Level-coded convenience overload.
StepSpikes simulate_step(NetworkState& net, const InputCube& cube, Micros t, Micros dt);

/// Duration actually simulated for a trial: its length plus the configured tail.
Micros simulated_span(const NetworkState& net, Micros duration, const EncoderConfig& encoder);

/// Runs one trial from reset transients. Steps t = 0, dt, ... up to the trial
/// duration plus tail; if attention is still active at the end it is released
/// at the final time so the output layer can respond.
SpikeTrace run_trial(NetworkState& net, const UnlabeledTrial& trial, const EncoderConfig& encoder,
                     bool learning);

/// Unsupervised training. Trials are shuffled per epoch from `seed`.
void train_unsupervised(NetworkState& net, std::span<const UnlabeledTrial> trials,
                        const EncoderConfig& encoder, std::size_t epochs, std::uint64_t seed);

}  // namespace dvsattn
