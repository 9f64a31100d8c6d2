#pragma once

// Event-camera records, trial segmentation and the CSV interchange formats.

#include <cstdint>
#include <iosfwd>
#include <set>
#include <span>
#include <vector>

namespace dvsattn {

/// Microseconds. Signed so that simulation arithmetic can look back in time.
using Micros = std::int64_t;

enum class Polarity : std::uint8_t { Off = 0, On = 1 };

struct SensorGeometry {
    std::uint32_t width = 128;
    std::uint32_t height = 128;

    bool contains(std::uint32_t x, std::uint32_t y) const { return x < width && y < height; }
    void validate() const;
    friend bool operator==(const SensorGeometry&, const SensorGeometry&) = default;
};

inline constexpr SensorGeometry kDvs128{128, 128};

struct EventRecord {
    std::uint64_t t = 0;  ///< microseconds since stream start
    std::uint16_t x = 0;
    std::uint16_t y = 0;
    Polarity polarity = Polarity::Off;

    friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

struct LabelRow {
    int class_label = 0;
    std::uint64_t t_start = 0;
    std::uint64_t t_end = 0;

    friend bool operator==(const LabelRow&, const LabelRow&) = default;
};

/// One labeled gesture sample. Event times are trial-local: offset from t_start.
struct TrialSegment {
    int class_label = 0;
    std::uint64_t t_start = 0;
    std::uint64_t t_end = 0;
    SensorGeometry geometry = kDvs128;
    std::vector<EventRecord> events;

    Micros duration() const { return static_cast<Micros>(t_end - t_start); }
};

/// The label-free view of a trial that the network consumes. Training code only
/// ever sees this type, so class labels cannot leak into unsupervised learning.
struct UnlabeledTrial {
    std::span<const EventRecord> events;
    Micros duration = 0;
    SensorGeometry geometry = kDvs128;
};

UnlabeledTrial unlabeled(const TrialSegment& trial);

/// Parses `t_us,x,y,p` lines. A non-numeric first line is treated as a header.
/// Unsorted input is stably sorted by timestamp.
std::vector<EventRecord> parse_csv_events(std::istream& in, SensorGeometry geometry);

/// Writes `t_us,x,y,p` lines without a header.
void write_csv_events(std::span<const EventRecord> events, std::ostream& out);

/// Reads `class,startTime_usec,endTime_usec` rows, skipping a header line if present.
std::vector<LabelRow> load_labels(std::istream& in);

std::vector<TrialSegment> segment_trials(std::span<const EventRecord> events,
                                         std::span<const LabelRow> labels,
                                         const std::set<int>& keep,
                                         SensorGeometry geometry = kDvs128);

}  // namespace dvsattn
