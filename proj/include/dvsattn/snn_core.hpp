#pragma once

// Neuron and synapse kernels shared by every layer: leaky integrate-and-fire
// with an adaptive threshold, short-term synaptic depression, and trace-based
// pair STDP. All decays are exact exponentials per step.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dvsattn/events.hpp"

namespace dvsattn {

struct NeuronParams {
    double tau_m = 20'000.0;  ///< us
    double v_thresh0 = 1.0;
    double v_reset = 0.0;
    double t_refrac = 2'000.0;  ///< us
    double theta_inc = 0.05;
    double tau_theta = 1e7;  ///< us

    void validate() const;
    friend bool operator==(const NeuronParams&, const NeuronParams&) = default;
};

struct NeuronState {
    double v = 0.0;
    double theta = 0.0;
    std::optional<Micros> last_spike_t;
    Micros refractory_until = 0;

    double threshold(const NeuronParams& p) const { return p.v_thresh0 + theta; }
    friend bool operator==(const NeuronState&, const NeuronState&) = default;
};

struct LifResult {
    NeuronState state;
    bool spiked = false;
};

/// Leak, threshold decay and input integration without the firing check.
NeuronState lif_integrate(NeuronState s, const NeuronParams& params, double input_current,
                          Micros t, Micros dt);

/// Applies the firing rule to an integrated state.
LifResult lif_fire(NeuronState s, const NeuronParams& params, Micros t);

/// One full step: lif_integrate followed by lif_fire.
LifResult lif_step(NeuronState s, const NeuronParams& params, double input_current, Micros t,
                   Micros dt);

struct PlasticityParams {
    double a_plus = 0.01;
    double a_minus = 0.012;
    double tau_pre = 20'000.0;
    double tau_post = 20'000.0;
    double u_depress = 0.1;
    double tau_recover = 200'000.0;
    double w_max = 1.0;
    bool learning_enabled = true;

    void validate() const;
    friend bool operator==(const PlasticityParams&, const PlasticityParams&) = default;
};

/// Feed-forward synapses between two populations.
///
/// Short-term depression acts on every outgoing synapse of a presynaptic
/// neuron identically and all efficacies recover towards 1 at the same rate, so
/// the efficacies of one row are always equal; they are stored once per row.
struct SynapseArray {
    std::size_t n_pre = 0;
    std::size_t n_post = 0;
    std::vector<double> w;         ///< row-major n_pre x n_post
    std::vector<double> efficacy;  ///< per presynaptic row, in (0, 1]
    std::vector<double> x_pre;
    std::vector<double> x_post;

    SynapseArray() = default;
    SynapseArray(std::size_t pre, std::size_t post);

    double& weight(std::size_t pre, std::size_t post) { return w[pre * n_post + post]; }
    double weight(std::size_t pre, std::size_t post) const { return w[pre * n_post + post]; }
    double efficacy_of(std::size_t pre, std::size_t /*post*/) const { return efficacy[pre]; }
    std::span<double> row(std::size_t pre) { return {w.data() + pre * n_post, n_post}; }
    std::span<const double> row(std::size_t pre) const { return {w.data() + pre * n_post, n_post}; }

    /// Clears efficacies and traces, keeping weights.
    void reset_transients();

    friend bool operator==(const SynapseArray&, const SynapseArray&) = default;
};

/// Adds w * e of a presynaptic spike to `currents`, scaled by gain. Samples
/// the efficacy before any depression caused by the same spike.
void transmit(const SynapseArray& syn, std::size_t pre_id, double gain, std::span<double> currents);

void stp_on_pre(SynapseArray& syn, std::size_t pre_id, const PlasticityParams& params);

/// Exponential recovery of every efficacy towards 1 over one step.
void stp_recover(SynapseArray& syn, const PlasticityParams& params, Micros dt);

void stdp_on_pre(SynapseArray& syn, std::size_t pre_id, const PlasticityParams& params);
void stdp_on_post(SynapseArray& syn, std::size_t post_id, const PlasticityParams& params);

void decay_traces(SynapseArray& syn, const PlasticityParams& params, Micros dt);

}  // namespace dvsattn
