#include "dvsattn/events.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "dvsattn/error.hpp"

namespace dvsattn {
namespace {

// Splits a line on commas into exactly N unsigned integer fields.
template <std::size_t N>
bool parse_fields(std::string_view line, std::uint64_t (&out)[N]) {
    std::size_t field = 0;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (field < N) {
        while (p < end && *p == ' ') ++p;
        auto [next, ec] = std::from_chars(p, end, out[field]);
        if (ec != std::errc{}) return false;
        p = next;
        while (p < end && *p == ' ') ++p;
        ++field;
        if (field < N) {
            if (p == end || *p != ',') return false;
            ++p;
        }
    }
    return p == end;
}

bool parse_label_fields(std::string_view line, LabelRow& row) {
    auto comma = line.find(',');
    if (comma == std::string_view::npos) return false;
    int label = 0;
    auto [next, ec] = std::from_chars(line.data(), line.data() + comma, label);
    if (ec != std::errc{} || next != line.data() + comma) return false;
    std::uint64_t times[2];
    if (!parse_fields(line.substr(comma + 1), times)) return false;
    row = LabelRow{label, times[0], times[1]};
    return true;
}

std::string_view trim_line(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

bool looks_numeric(std::string_view line) {
    return !line.empty() && (std::isdigit(static_cast<unsigned char>(line.front())) ||
                             line.front() == '-' || line.front() == ' ');
}

}  // namespace

void SensorGeometry::validate() const {
    if (width < 1 || height < 1) throw ConfigError("sensor geometry must be at least 1x1");
}

UnlabeledTrial unlabeled(const TrialSegment& trial) {
    return UnlabeledTrial{trial.events, trial.duration(), trial.geometry};
}

std::vector<EventRecord> parse_csv_events(std::istream& in, SensorGeometry geometry) {
    std::vector<EventRecord> events;
    std::string raw;
    std::size_t line_no = 0;
    bool sorted = true;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = trim_line(raw);
        if (line.empty()) continue;
        if (line_no == 1 && !looks_numeric(line)) continue;  // header
        std::uint64_t f[4];
        if (!parse_fields(line, f)) throw ParseError(line_no, "expected t_us,x,y,p");
        if (f[3] > 1) throw ParseError(line_no, "polarity must be 0 or 1");
        if (f[1] >= geometry.width || f[2] >= geometry.height) {
            throw BoundsError("line " + std::to_string(line_no) + ": pixel (" +
                              std::to_string(f[1]) + "," + std::to_string(f[2]) +
                              ") outside " + std::to_string(geometry.width) + "x" +
                              std::to_string(geometry.height));
        }
        EventRecord e{f[0], static_cast<std::uint16_t>(f[1]), static_cast<std::uint16_t>(f[2]),
                      f[3] == 1 ? Polarity::On : Polarity::Off};
        if (!events.empty() && e.t < events.back().t) sorted = false;
        events.push_back(e);
    }
    if (!sorted) {
        std::stable_sort(events.begin(), events.end(),
                         [](const EventRecord& a, const EventRecord& b) { return a.t < b.t; });
    }
    return events;
}

void write_csv_events(std::span<const EventRecord> events, std::ostream& out) {
    std::string buf;
    buf.reserve(32 * events.size());
    for (const auto& e : events) {
        buf += std::to_string(e.t);
        buf += ',';
        buf += std::to_string(e.x);
        buf += ',';
        buf += std::to_string(e.y);
        buf += e.polarity == Polarity::On ? ",1\n" : ",0\n";
    }
    out << buf;
    if (!out) throw Error("failed writing event CSV");
}

std::vector<LabelRow> load_labels(std::istream& in) {
    std::vector<LabelRow> rows;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = trim_line(raw);
        if (line.empty()) continue;
        if (line_no == 1 && !looks_numeric(line)) continue;
        LabelRow row;
        if (!parse_label_fields(line, row)) {
            throw ParseError(line_no, "expected class,startTime_usec,endTime_usec");
        }
        rows.push_back(row);
    }
    return rows;
}

std::vector<TrialSegment> segment_trials(std::span<const EventRecord> events,
                                         std::span<const LabelRow> labels,
                                         const std::set<int>& keep, SensorGeometry geometry) {
    auto by_time = [](const EventRecord& e, std::uint64_t t) { return e.t < t; };
    std::vector<TrialSegment> out;
    for (const auto& row : labels) {
        if (row.t_start >= row.t_end) {
            throw InvalidWindowError("label window [" + std::to_string(row.t_start) + ", " +
                                     std::to_string(row.t_end) + ") is empty");
        }
        if (!keep.contains(row.class_label)) continue;
        auto first = std::lower_bound(events.begin(), events.end(), row.t_start, by_time);
        auto last = std::lower_bound(first, events.end(), row.t_end, by_time);
        TrialSegment seg{row.class_label, row.t_start, row.t_end, geometry, {}};
        seg.events.reserve(static_cast<std::size_t>(last - first));
        for (auto it = first; it != last; ++it) {
            EventRecord e = *it;
            e.t -= row.t_start;
            seg.events.push_back(e);
        }
        out.push_back(std::move(seg));
    }
    return out;
}

}  // namespace dvsattn
