#include "dvsattn/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "dvsattn/error.hpp"

namespace dvsattn {
namespace {

struct Point {
    double x;
    double y;
};

Point spiral_point(double s, Point center, double r_min, double r_max, double phase, double turns) {
    const double r = r_min + (r_max - r_min) * s;
    const double phi = phase + 2.0 * std::numbers::pi * turns * s;
    return {center.x + r * std::cos(phi), center.y + r * std::sin(phi)};
}

std::uint16_t clamp_px(double v, std::uint32_t extent) {
    const double c = std::clamp(std::round(v), 0.0, static_cast<double>(extent - 1));
    return static_cast<std::uint16_t>(c);
}

}  // namespace

std::string_view to_string(PatternKind kind) {
    switch (kind) {
        case PatternKind::SpiralCw: return "spiral_cw";
        case PatternKind::SpiralCcw: return "spiral_ccw";
        case PatternKind::HorizontalSweep: return "horizontal_sweep";
    }
    return "unknown";
}

std::optional<PatternKind> pattern_from_string(std::string_view name) {
    for (auto k : {PatternKind::SpiralCw, PatternKind::SpiralCcw, PatternKind::HorizontalSweep}) {
        if (to_string(k) == name) return k;
    }
    return std::nullopt;
}

int pattern_label(PatternKind kind) { return static_cast<int>(kind); }

TrialSegment gen_synthetic_pattern(PatternKind kind, Micros duration, SensorGeometry geometry,
                                   std::uint64_t seed, const SyntheticParams& params) {
    if (duration <= 0) throw Error("synthetic pattern needs a positive duration");
    geometry.validate();

    TrialSegment trial;
    trial.class_label = pattern_label(kind);
    trial.t_start = 0;
    trial.t_end = static_cast<std::uint64_t>(duration);
    trial.geometry = geometry;

    const auto n = static_cast<std::size_t>(static_cast<double>(duration) / 1000.0 * params.events_per_ms);
    if (n == 0) return trial;

    // Both spiral directions draw from the same stream so that they share
    // spatial support; only the sweep uses a different stream.
    const bool spiral = kind != PatternKind::HorizontalSweep;
    std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ull + (spiral ? 1 : 2));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> jitter(0.0, params.position_jitter_px);

    const double w = geometry.width;
    const double h = geometry.height;
    const double side = std::min(w, h);
    const Point center{w / 2.0 + (2.0 * unit(rng) - 1.0) * params.center_jitter_px,
                       h / 2.0 + (2.0 * unit(rng) - 1.0) * params.center_jitter_px};
    const double phase = 2.0 * std::numbers::pi * unit(rng);
    const double scale = 0.9 + 0.2 * unit(rng);

    struct Sample {
        std::uint16_t x;
        std::uint16_t y;
        Polarity polarity;
    };
    std::vector<Sample> samples(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
        Point p;
        if (spiral) {
            p = spiral_point(s, center, 0.08 * side * scale, 0.40 * side * scale, phase, params.spiral_turns);
        } else {
            const double bar_y = center.y + (unit(rng) - 0.5) * 0.6 * h * scale;
            p = {0.1 * w + 0.8 * w * s, bar_y};
        }
        p.x += jitter(rng);
        p.y += jitter(rng);
        if (unit(rng) < params.noise_fraction) p = {unit(rng) * w, unit(rng) * h};
        const Polarity pol = unit(rng) < 0.5 ? Polarity::On : Polarity::Off;
        samples[i] = {clamp_px(p.x, geometry.width), clamp_px(p.y, geometry.height), pol};
    }
    if (kind == PatternKind::SpiralCcw) std::reverse(samples.begin(), samples.end());

    trial.events.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto t = static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(i) * static_cast<std::uint64_t>(duration)) / n);
        trial.events.push_back(EventRecord{t, samples[i].x, samples[i].y, samples[i].polarity});
    }
    return trial;
}

}  // namespace dvsattn
