#include <map>
#include <random>
#include <sstream>
#include <type_traits>

#include "doctest.h"
#include "dvsattn/attention_net.hpp"
#include "dvsattn/error.hpp"
#include "dvsattn/synthetic.hpp"
#include "network_fixtures.hpp"

using namespace dvsattn;

// The training entry point takes label-free views only.
static_assert(std::is_invocable_v<decltype(&train_unsupervised), NetworkState&, std::span<const UnlabeledTrial>,
                                  const EncoderConfig&, std::size_t, std::uint64_t>);
static_assert(!std::is_convertible_v<TrialSegment, UnlabeledTrial>);
static_assert(!std::is_constructible_v<std::span<const UnlabeledTrial>, std::vector<TrialSegment>&>);

TEST_CASE("build_network") {
    const auto enc = EncoderConfig{};
    const auto a = netfix::make_network(enc, 5);
    const auto b = netfix::make_network(enc, 5);
    const auto c = netfix::make_network(enc, 6);
    CHECK(a == b);
    CHECK_FALSE(a == c);
    CHECK(a.topology.n_input == 1024);
    CHECK(a.intermediate_to_output.n_post == 10);
    CHECK(a.input_to_intermediate.n_pre == 1024);
    CHECK(a.input_to_intermediate.n_post == 64);
    CHECK(a.intermediate_to_output.n_pre == 64);
    for (const auto* syn : {&a.input_to_intermediate, &a.intermediate_to_output}) {
        for (double w : syn->w) {
            CHECK(w >= 0.3);
            CHECK(w <= 0.7);
        }
        for (double e : syn->efficacy) CHECK(e == 1.0);
    }
    CHECK_FALSE(a.attention.active);
    for (const auto& n : a.output) CHECK(n.v == a.neuron.v_reset);

    NetworkTopology empty = a.topology;
    empty.n_intermediate = 0;
    CHECK_THROWS_AS(build_network(empty, {}, {}, {}, {}, 1), ConfigError);
}

TEST_CASE("attention: hysteresis") {
    AttentionParams p;
    p.theta_on = 1.0;
    p.theta_off = 0.4;
    p.input_weight = 0.25;
    p.u_habit = 0.0;
    AttentionState att;
    att.habituation.assign(8, 1.0);

    att = attention_update(att, {}, 1000, p);
    CHECK(att.v == 0.0);
    CHECK_FALSE(att.active);

    const std::vector<std::uint32_t> three{0, 1, 2};
    att = attention_update(att, three, 1000, p);  // 0.75
    CHECK_FALSE(att.active);
    const std::vector<std::uint32_t> four{0, 1, 2, 3};
    att = attention_update(att, four, 1000, p);  // 0.75 e^-0.05 + 1.0
    CHECK(att.active);
    const double on_v = att.v;

    // Decay alone: stays on while above theta_off.
    int steps = 0;
    while (att.active) {
        att = attention_update(att, {}, 1000, p);
        ++steps;
        if (att.active) CHECK(att.v > p.theta_off);
    }
    CHECK(att.v <= p.theta_off);
    CHECK(on_v * std::exp(-0.05 * (steps - 1)) > p.theta_off);

    // Between thresholds from below: stays off.
    att.v = 0.0;
    const std::vector<std::uint32_t> two{0, 1};
    att = attention_update(att, two, 1000, p);  // 0.5
    CHECK_FALSE(att.active);

    AttentionParams bad = p;
    bad.theta_off = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("attention: habituation depresses and recovers") {
    AttentionParams p;
    p.u_habit = 0.5;
    p.tau_habit = 1000;
    AttentionState att;
    att.habituation.assign(2, 1.0);
    const std::vector<std::uint32_t> zero{0};
    att = attention_update(att, zero, 1000, p);
    CHECK(att.habituation[0] == doctest::Approx(0.5));
    CHECK(att.habituation[1] == 1.0);
    att = attention_update(att, {}, 1000, p);
    CHECK(att.habituation[0] == doctest::Approx(1.0 - 0.5 / std::exp(1.0)));
}

TEST_CASE("attention: duty cycle never grows under a repeated stimulus") {
    std::mt19937_64 rng(12);
    AttentionParams p;
    p.input_weight = 0.05;
    p.u_habit = 0.05;
    const std::size_t n_in = 256;
    std::vector<std::vector<std::uint32_t>> pattern(60);
    for (auto& step : pattern) {
        for (std::uint32_t i = 0; i < n_in; ++i) {
            if (rng() % 10 == 0) step.push_back(i);
        }
    }
    AttentionState att;
    att.habituation.assign(n_in, 1.0);
    std::vector<double> duty;
    for (int rep = 0; rep < 40; ++rep) {
        int on = 0;
        for (const auto& step : pattern) {
            att = attention_update(att, step, 1000, p);
            on += att.active;
        }
        for (int gap = 0; gap < 400; ++gap) att = attention_update(att, {}, 1000, p);
        CHECK_FALSE(att.active);
        duty.push_back(double(on) / double(pattern.size()));
    }
    CHECK(duty.front() > 0.5);
    CHECK(duty.back() < duty.front());
    for (std::size_t i = 1; i < duty.size(); ++i) CHECK(duty[i] <= duty[i - 1]);
}

TEST_CASE("gating and suppression invariants on random trials") {
    const auto enc = EncoderConfig{};
    auto net = netfix::make_network(enc, 3, netfix::cycling_attention());
    const auto trials = netfix::random_trials(40, 17);
    std::size_t intervals = 0, hidden = 0, outputs = 0;
    for (const auto& seg : trials) {
        const auto trace = run_trial(net, unlabeled(seg), enc, true);
        CHECK(netfix::gating_violations(trace) == 0);
        CHECK(netfix::suppression_violations(trace) == 0);
        CHECK(netfix::intervals_well_formed(trace));
        intervals += trace.attention_intervals.size();
        hidden += trace.count(Layer::Intermediate);
        outputs += trace.count(Layer::Output);

        // WTA: at most one output spike per offset step.
        std::map<Micros, int> per_step;
        for (const auto& r : trace.records) {
            if (r.layer == Layer::Output) per_step[r.t]++;
        }
        for (const auto& [t, n] : per_step) CHECK(n == 1);
    }
    CHECK(intervals > trials.size());
    CHECK(hidden > 0);
    CHECK(outputs > 0);
}

TEST_CASE("attention never active means no downstream spikes") {
    const auto enc = EncoderConfig{};
    AttentionParams quiet;
    quiet.input_weight = 0.0;
    auto net = netfix::make_network(enc, 3, quiet);
    const auto seg = gen_synthetic_pattern(PatternKind::SpiralCw, 200'000, kDvs128, 1);
    const auto trace = run_trial(net, unlabeled(seg), enc, true);
    CHECK(trace.records.empty());
    CHECK(trace.attention_intervals.empty());
}

TEST_CASE("empty trial and determinism") {
    const auto enc = EncoderConfig{};
    auto net = netfix::make_network(enc, 3);
    TrialSegment empty;
    empty.t_end = 100'000;
    CHECK(run_trial(net, unlabeled(empty), enc, true).records.empty());

    const auto seg = gen_synthetic_pattern(PatternKind::HorizontalSweep, 300'000, kDvs128, 9);
    auto n1 = netfix::make_network(enc, 3);
    auto n2 = netfix::make_network(enc, 3);
    const auto t1 = run_trial(n1, unlabeled(seg), enc, true);
    const auto t2 = run_trial(n2, unlabeled(seg), enc, true);
    CHECK(t1 == t2);
    CHECK(n1 == n2);
    CHECK_FALSE(t1.records.empty());
}

TEST_CASE("learning flag controls weights") {
    const auto enc = EncoderConfig{};
    const auto seg = gen_synthetic_pattern(PatternKind::SpiralCcw, 300'000, kDvs128, 2);

    auto frozen = netfix::make_network(enc, 4);
    const auto before = frozen;
    run_trial(frozen, unlabeled(seg), enc, false);
    CHECK(frozen.input_to_intermediate.w == before.input_to_intermediate.w);
    CHECK(frozen.intermediate_to_output.w == before.intermediate_to_output.w);
    CHECK(frozen.plasticity.learning_enabled);

    auto plastic = netfix::make_network(enc, 4);
    const auto trace = run_trial(plastic, unlabeled(seg), enc, true);
    REQUIRE(trace.count(Layer::Intermediate) > 0);
    CHECK(plastic.input_to_intermediate.w != before.input_to_intermediate.w);
}

TEST_CASE("train_unsupervised") {
    const auto enc = EncoderConfig{};
    auto net = netfix::make_network(enc, 4);
    CHECK_THROWS_AS(train_unsupervised(net, {}, enc, 1, 1), Error);

    const auto seg = gen_synthetic_pattern(PatternKind::SpiralCw, 200'000, kDvs128, 5);
    const std::vector<UnlabeledTrial> one{unlabeled(seg)};
    CHECK_THROWS_AS(train_unsupervised(net, one, enc, 0, 1), ConfigError);

    const auto before = net;
    auto probe = net;
    const bool fired = run_trial(probe, one[0], enc, true).count(Layer::Intermediate) > 0;
    train_unsupervised(net, one, enc, 1, 1);
    CHECK((net.input_to_intermediate.w != before.input_to_intermediate.w) == fired);

    auto a = netfix::make_network(enc, 4);
    auto b = netfix::make_network(enc, 4);
    const auto trials = netfix::random_trials(6, 3);
    std::vector<UnlabeledTrial> views;
    for (const auto& t : trials) views.push_back(unlabeled(t));
    train_unsupervised(a, views, enc, 2, 8);
    train_unsupervised(b, views, enc, 2, 8);
    CHECK(a == b);
}

TEST_CASE("trace csv round trip") {
    SpikeTrace trace;
    trace.records = {{0, Layer::Attention, 0}, {1000, Layer::Intermediate, 5}, {2000, Layer::Output, 9}};
    trace.attention_intervals = {{0, 2000}};
    std::ostringstream spikes, intervals;
    write_trace_csv(trace, spikes, intervals);
    CHECK(spikes.str() == "t_us,layer,neuron_id\n0,attention,0\n1000,intermediate,5\n2000,output,9\n");
    CHECK(intervals.str() == "t_on_us,t_off_us\n0,2000\n");
    std::istringstream s_in(spikes.str()), i_in(intervals.str());
    CHECK(read_trace_csv(s_in) == trace.records);
    CHECK(read_intervals_csv(i_in) == trace.attention_intervals);

    std::istringstream bad("t_us,layer,neuron_id\n5,cortex,1\n");
    CHECK_THROWS_AS(read_trace_csv(bad), ParseError);
}

TEST_CASE("simulated span covers the tail") {
    const auto enc = EncoderConfig{};
    const auto net = netfix::make_network(enc, 1);
    CHECK(simulated_span(net, 100'000, enc) == 120'000);
    CHECK(simulated_span(net, 100'500, enc) == 121'000);
}
