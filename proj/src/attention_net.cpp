#include "dvsattn/attention_net.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

#include "dvsattn/error.hpp"

namespace dvsattn {

void NetworkTopology::validate() const {
    if (n_input < 1 || n_intermediate < 1 || n_output < 1) {
        throw ConfigError("every network layer needs at least one neuron");
    }
}

void AttentionParams::validate() const {
    if (!(theta_off < theta_on)) throw ConfigError("attention.theta_off must be below attention.theta_on");
    if (!(tau_att > 0) || !(tau_habit > 0)) throw ConfigError("attention time constants must be > 0");
    if (!(u_habit >= 0 && u_habit < 1)) throw ConfigError("attention.u_habit must be in [0, 1)");
    if (!(input_weight >= 0)) throw ConfigError("attention.input_weight must be >= 0");
}

void NetworkParams::validate() const {
    if (!(input_gain >= 0) || !(hidden_gain >= 0)) throw ConfigError("network gains must be >= 0");
    if (!(tail_slices >= 0)) throw ConfigError("network.tail_slices must be >= 0");
    if (!(output_tau_m >= 0)) throw ConfigError("network.output_tau_m must be >= 0");
}

AttentionState attention_update(AttentionState att, std::span<const std::uint32_t> input_spikes,
                                Micros dt, const AttentionParams& params) {
    const auto fdt = static_cast<double>(dt);
    const double kh = std::exp(-fdt / params.tau_habit);
    for (double& e : att.habituation) e = 1.0 - (1.0 - e) * kh;

    double drive = 0.0;
    for (const auto i : input_spikes) {
        drive += att.habituation[i];
        att.habituation[i] *= 1.0 - params.u_habit;
    }
    att.v = att.v * std::exp(-fdt / params.tau_att) + params.input_weight * drive;

    if (!att.active && att.v >= params.theta_on) {
        att.active = true;
    } else if (att.active && att.v <= params.theta_off) {
        att.active = false;
    }
    return att;
}

std::string_view to_string(Layer layer) {
    switch (layer) {
        case Layer::Attention: return "attention";
        case Layer::Intermediate: return "intermediate";
        case Layer::Output: return "output";
    }
    return "unknown";
}

Layer layer_from_string(std::string_view name) {
    for (auto l : {Layer::Attention, Layer::Intermediate, Layer::Output}) {
        if (to_string(l) == name) return l;
    }
    throw Error("unknown layer '" + std::string(name) + "'");
}

std::size_t SpikeTrace::count(Layer layer) const {
    return static_cast<std::size_t>(std::count_if(records.begin(), records.end(),
                                                  [layer](const SpikeRecord& r) { return r.layer == layer; }));
}

void write_trace_csv(const SpikeTrace& trace, std::ostream& spikes, std::ostream& intervals) {
    spikes << "t_us,layer,neuron_id\n";
    for (const auto& r : trace.records) {
        spikes << r.t << ',' << to_string(r.layer) << ',' << r.neuron << '\n';
    }
    intervals << "t_on_us,t_off_us\n";
    for (const auto& iv : trace.attention_intervals) intervals << iv.t_on << ',' << iv.t_off << '\n';
    if (!spikes || !intervals) throw Error("failed writing spike trace");
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        out.push_back(line.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

template <typename T>
bool parse_int(std::string_view s, T& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size();
}

}  // namespace

std::vector<SpikeRecord> read_trace_csv(std::istream& in) {
    std::vector<SpikeRecord> out;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        if (raw.empty() || (line_no == 1 && raw.rfind("t_us", 0) == 0)) continue;
        const auto f = split_commas(raw);
        SpikeRecord r;
        if (f.size() != 3 || !parse_int(f[0], r.t) || !parse_int(f[2], r.neuron)) {
            throw ParseError(line_no, "expected t_us,layer,neuron_id");
        }
        try {
            r.layer = layer_from_string(f[1]);
        } catch (const Error&) {
            throw ParseError(line_no, "unknown layer '" + std::string(f[1]) + "'");
        }
        out.push_back(r);
    }
    return out;
}

std::vector<AttentionInterval> read_intervals_csv(std::istream& in) {
    std::vector<AttentionInterval> out;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        if (raw.empty() || (line_no == 1 && raw.rfind("t_on", 0) == 0)) continue;
        const auto f = split_commas(raw);
        AttentionInterval iv;
        if (f.size() != 2 || !parse_int(f[0], iv.t_on) || !parse_int(f[1], iv.t_off)) {
            throw ParseError(line_no, "expected t_on_us,t_off_us");
        }
        out.push_back(iv);
    }
    return out;
}

void NetworkState::reset_transients() {
    for (auto& n : intermediate) n = NeuronState{neuron.v_reset, n.theta, std::nullopt, 0};
    for (auto& n : output) n = NeuronState{neuron.v_reset, n.theta, std::nullopt, 0};
    input_to_intermediate.reset_transients();
    intermediate_to_output.reset_transients();
    attention.v = 0.0;
    attention.active = false;
}

NetworkState build_network(const NetworkTopology& topology, const NeuronParams& neuron,
                           const PlasticityParams& plasticity, const AttentionParams& attention,
                           const NetworkParams& params, std::uint64_t seed) {
    topology.validate();
    neuron.validate();
    plasticity.validate();
    attention.validate();
    params.validate();

    NetworkState net;
    net.topology = topology;
    net.neuron = neuron;
    net.plasticity = plasticity;
    net.attention_params = attention;
    net.params = params;
    net.input_to_intermediate = SynapseArray(topology.n_input, topology.n_intermediate);
    net.intermediate_to_output = SynapseArray(topology.n_intermediate, topology.n_output);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> init(0.3 * plasticity.w_max, 0.7 * plasticity.w_max);
    for (double& w : net.input_to_intermediate.w) w = init(rng);
    for (double& w : net.intermediate_to_output.w) w = init(rng);

    net.intermediate.assign(topology.n_intermediate, NeuronState{neuron.v_reset, 0.0, std::nullopt, 0});
    net.output.assign(topology.n_output, NeuronState{neuron.v_reset, 0.0, std::nullopt, 0});
    net.attention.habituation.assign(topology.n_input, 1.0);
    return net;
}

StepSpikes simulate_step(NetworkState& net, std::span<const std::uint32_t> input_spikes, Micros t,
                         Micros dt, bool force_release) {
    const auto& plast = net.plasticity;
    auto& in_syn = net.input_to_intermediate;
    auto& out_syn = net.intermediate_to_output;
    StepSpikes step;

    decay_traces(in_syn, plast, dt);
    decay_traces(out_syn, plast, dt);
    stp_recover(in_syn, plast, dt);
    stp_recover(out_syn, plast, dt);

    const bool was_active = net.attention.active;
    net.attention = attention_update(std::move(net.attention), input_spikes, dt, net.attention_params);
    if (force_release) net.attention.active = false;
    const bool active = net.attention.active;
    step.attention_on = !was_active && active;
    step.attention_off = was_active && !active;

    // Gated input -> intermediate.
    std::vector<double> hidden_current(net.topology.n_intermediate, 0.0);
    if (active) {
        for (const auto pre : input_spikes) {
            transmit(in_syn, pre, net.params.input_gain, hidden_current);
            stp_on_pre(in_syn, pre, plast);
            stdp_on_pre(in_syn, pre, plast);
        }
    }
    for (std::size_t j = 0; j < net.intermediate.size(); ++j) {
        const auto r = lif_step(net.intermediate[j], net.neuron, hidden_current[j], t, dt);
        net.intermediate[j] = r.state;
        if (r.spiked) {
            step.intermediate.push_back(static_cast<std::uint32_t>(j));
            stdp_on_post(in_syn, j, plast);
        }
    }

    // Intermediate -> output always integrates; firing is vetoed while attention is active.
    std::vector<double> output_current(net.topology.n_output, 0.0);
    for (const auto pre : step.intermediate) {
        transmit(out_syn, pre, net.params.hidden_gain, output_current);
        stp_on_pre(out_syn, pre, plast);
        stdp_on_pre(out_syn, pre, plast);
    }
    if (active && net.params.output_freeze) return step;
    auto out_neuron = net.neuron;
    if (net.params.output_tau_m > 0) out_neuron.tau_m = net.params.output_tau_m;
    for (std::size_t k = 0; k < net.output.size(); ++k) {
        net.output[k] = lif_integrate(net.output[k], out_neuron, output_current[k], t, dt);
    }
    if (active) return step;

    std::vector<std::uint32_t> candidates;
    for (std::size_t k = 0; k < net.output.size(); ++k) {
        const auto& s = net.output[k];
        if (t >= s.refractory_until && s.v >= s.threshold(out_neuron)) {
            candidates.push_back(static_cast<std::uint32_t>(k));
        }
    }
    if (candidates.empty()) return step;
    if (net.topology.lateral_inhibition_output) {
        // Largest margin above the adaptive threshold wins; candidates are in id
        // order so ties go to the lower id.
        const auto margin = [&](std::uint32_t k) { return net.output[k].v - net.output[k].threshold(out_neuron); };
        const auto winner = *std::max_element(candidates.begin(), candidates.end(),
                                              [&](std::uint32_t a, std::uint32_t b) { return margin(a) < margin(b); });
        for (std::size_t k = 0; k < net.output.size(); ++k) {
            if (k != winner) net.output[k].v = net.neuron.v_reset;
        }
        candidates.assign(1, winner);
    }
    for (const auto k : candidates) {
        net.output[k] = lif_fire(net.output[k], out_neuron, t).state;
        step.output.push_back(k);
        stdp_on_post(out_syn, k, plast);
    }
    return step;
}

StepSpikes simulate_step(NetworkState& net, const InputCube& cube, Micros t, Micros dt) {
    return simulate_step(net, input_spikes(cube, cube, InputCoding::Level), t, dt);
}

Micros simulated_span(const NetworkState& net, Micros duration, const EncoderConfig& encoder) {
    const auto tail = static_cast<Micros>(std::llround(net.params.tail_slices * static_cast<double>(encoder.slice_interval)));
    const Micros total = std::max<Micros>(duration, 0) + tail;
    return (total + encoder.sim_step - 1) / encoder.sim_step * encoder.sim_step;
}

SpikeTrace run_trial(NetworkState& net, const UnlabeledTrial& trial, const EncoderConfig& encoder,
                     bool learning) {
    const bool saved_learning = net.plasticity.learning_enabled;
    net.plasticity.learning_enabled = saved_learning && learning;
    net.reset_transients();

    const Micros dt = encoder.sim_step;
    const Micros end = simulated_span(net, trial.duration, encoder);
    CubeStream stream(trial, encoder, end);
    InputCube previous(CubeShape::from(encoder, trial.geometry));

    SpikeTrace trace;
    Micros t_on = 0;
    const auto record = [&](const StepSpikes& s, Micros t) {
        if (s.attention_on) {
            t_on = t;
            trace.records.push_back({t, Layer::Attention, 0});
        }
        if (s.attention_off) trace.attention_intervals.push_back({t_on, t});
        for (const auto j : s.intermediate) trace.records.push_back({t, Layer::Intermediate, j});
        for (const auto k : s.output) trace.records.push_back({t, Layer::Output, k});
    };

    for (Micros t = 0; t < end; t += dt) {
        const InputCube& cube = stream.next();
        const auto spikes = input_spikes(previous, cube, encoder.coding);
        if (encoder.coding == InputCoding::Edge) previous = cube;
        record(simulate_step(net, spikes, t, dt), t);
    }
    if (net.attention.active) record(simulate_step(net, {}, end, dt, true), end);

    net.plasticity.learning_enabled = saved_learning;
    return trace;
}

void train_unsupervised(NetworkState& net, std::span<const UnlabeledTrial> trials,
                        const EncoderConfig& encoder, std::size_t epochs, std::uint64_t seed) {
    if (trials.empty()) throw Error("train_unsupervised needs at least one trial");
    if (epochs < 1) throw ConfigError("training.epochs must be >= 1");
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> order(trials.size());
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        for (const auto i : order) run_trial(net, trials[i], encoder, true);
    }
}

}  // namespace dvsattn
