#include "dvsattn/snn_core.hpp"

#include <algorithm>
#include <cmath>

#include "dvsattn/error.hpp"

namespace dvsattn {

void NeuronParams::validate() const {
    if (!(tau_m > 0)) throw ConfigError("neuron.tau_m must be > 0");
    if (!(v_thresh0 > v_reset)) throw ConfigError("neuron.v_thresh0 must exceed neuron.v_reset");
    if (!(t_refrac >= 0)) throw ConfigError("neuron.t_refrac must be >= 0");
    if (!(theta_inc >= 0)) throw ConfigError("neuron.theta_inc must be >= 0");
    if (!(tau_theta > 0)) throw ConfigError("neuron.tau_theta must be > 0");
}

void PlasticityParams::validate() const {
    if (!(a_plus >= 0) || !(a_minus >= 0)) throw ConfigError("plasticity amplitudes must be >= 0");
    if (!(u_depress >= 0 && u_depress < 1)) throw ConfigError("plasticity.u_depress must be in [0, 1)");
    if (!(tau_pre > 0) || !(tau_post > 0) || !(tau_recover > 0)) {
        throw ConfigError("plasticity time constants must be > 0");
    }
    if (!(w_max > 0)) throw ConfigError("plasticity.w_max must be > 0");
}

NeuronState lif_integrate(NeuronState s, const NeuronParams& params, double input_current,
                          Micros t, Micros dt) {
    const auto fdt = static_cast<double>(dt);
    s.theta *= std::exp(-fdt / params.tau_theta);
    if (t < s.refractory_until) {
        s.v = params.v_reset;
    } else {
        s.v = s.v * std::exp(-fdt / params.tau_m) + input_current;
    }
    return s;
}

LifResult lif_fire(NeuronState s, const NeuronParams& params, Micros t) {
    if (t < s.refractory_until || s.v < s.threshold(params)) return {s, false};
    s.v = params.v_reset;
    s.theta += params.theta_inc;
    s.last_spike_t = t;
    s.refractory_until = t + static_cast<Micros>(params.t_refrac);
    return {s, true};
}

LifResult lif_step(NeuronState s, const NeuronParams& params, double input_current, Micros t,
                   Micros dt) {
    return lif_fire(lif_integrate(s, params, input_current, t, dt), params, t);
}

SynapseArray::SynapseArray(std::size_t pre, std::size_t post)
    : n_pre(pre), n_post(post), w(pre * post, 0.0), efficacy(pre, 1.0), x_pre(pre, 0.0), x_post(post, 0.0) {}

void SynapseArray::reset_transients() {
    std::fill(efficacy.begin(), efficacy.end(), 1.0);
    std::fill(x_pre.begin(), x_pre.end(), 0.0);
    std::fill(x_post.begin(), x_post.end(), 0.0);
}

void transmit(const SynapseArray& syn, std::size_t pre_id, double gain, std::span<double> currents) {
    const double scale = gain * syn.efficacy[pre_id];
    const auto r = syn.row(pre_id);
    for (std::size_t j = 0; j < syn.n_post; ++j) currents[j] += scale * r[j];
}

void stp_on_pre(SynapseArray& syn, std::size_t pre_id, const PlasticityParams& params) {
    syn.efficacy[pre_id] *= 1.0 - params.u_depress;
}

void stp_recover(SynapseArray& syn, const PlasticityParams& params, Micros dt) {
    const double k = std::exp(-static_cast<double>(dt) / params.tau_recover);
    for (double& e : syn.efficacy) e = 1.0 - (1.0 - e) * k;
}

void stdp_on_pre(SynapseArray& syn, std::size_t pre_id, const PlasticityParams& params) {
    if (!params.learning_enabled) return;
    auto r = syn.row(pre_id);
    for (std::size_t j = 0; j < syn.n_post; ++j) {
        r[j] = std::clamp(r[j] - params.a_minus * syn.x_post[j], 0.0, params.w_max);
    }
    syn.x_pre[pre_id] += 1.0;
}

void stdp_on_post(SynapseArray& syn, std::size_t post_id, const PlasticityParams& params) {
    if (!params.learning_enabled) return;
    for (std::size_t i = 0; i < syn.n_pre; ++i) {
        double& w = syn.w[i * syn.n_post + post_id];
        w = std::clamp(w + params.a_plus * syn.x_pre[i], 0.0, params.w_max);
    }
    syn.x_post[post_id] += 1.0;
}

void decay_traces(SynapseArray& syn, const PlasticityParams& params, Micros dt) {
    const double kpre = std::exp(-static_cast<double>(dt) / params.tau_pre);
    const double kpost = std::exp(-static_cast<double>(dt) / params.tau_post);
    for (double& x : syn.x_pre) x *= kpre;
    for (double& x : syn.x_post) x *= kpost;
}

}  // namespace dvsattn
