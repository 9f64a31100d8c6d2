#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "dvsattn/events.hpp"

namespace dvsattn {

enum class PatternKind { SpiralCw, SpiralCcw, HorizontalSweep };

std::string_view to_string(PatternKind kind);
std::optional<PatternKind> pattern_from_string(std::string_view name);

/// Class label assigned to synthetic trials of each kind (0, 1, 2).
int pattern_label(PatternKind kind);

struct SyntheticParams {
    double events_per_ms = 20.0;
    double spiral_turns = 1.5;
    double position_jitter_px = 1.5;  ///< gaussian sd applied per event
    double center_jitter_px = 6.0;    ///< per-trial uniform offset of the pattern centre
    double noise_fraction = 0.05;     ///< share of events placed uniformly at random
};

/// Deterministic in (kind, duration, geometry, seed, params). SpiralCcw is the
/// time reversal of SpiralCw: identical positions, reversed temporal order.
TrialSegment gen_synthetic_pattern(PatternKind kind, Micros duration, SensorGeometry geometry,
                                   std::uint64_t seed, const SyntheticParams& params = {});

}  // namespace dvsattn
