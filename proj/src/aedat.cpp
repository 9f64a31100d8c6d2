#include "dvsattn/aedat.hpp"

#include <algorithm>
#include <array>
#include <istream>
#include <string>

#include "dvsattn/error.hpp"

namespace dvsattn {
namespace {

std::int32_t read_i32(const unsigned char* p) {
    return static_cast<std::int32_t>(static_cast<std::uint32_t>(p[0]) |
                                     (static_cast<std::uint32_t>(p[1]) << 8) |
                                     (static_cast<std::uint32_t>(p[2]) << 16) |
                                     (static_cast<std::uint32_t>(p[3]) << 24));
}

std::uint32_t read_u32(const unsigned char* p) { return static_cast<std::uint32_t>(read_i32(p)); }

std::int16_t read_i16(const unsigned char* p) {
    return static_cast<std::int16_t>(static_cast<std::uint16_t>(p[0]) |
                                     (static_cast<std::uint16_t>(p[1]) << 8));
}

SensorGeometry geometry_from_source(const std::string& line, SensorGeometry current) {
    struct Known {
        const char* name;
        SensorGeometry geometry;
    };
    // Longer names first so "DAVIS346" is not shadowed by a shorter prefix.
    static constexpr std::array<Known, 4> kKnown{{{"DVXplorer", {640, 480}},
                                                  {"DAVIS346", {346, 260}},
                                                  {"DAVIS240", {240, 180}},
                                                  {"DVS128", {128, 128}}}};
    for (const auto& k : kKnown) {
        if (line.find(k.name) != std::string::npos) return k.geometry;
    }
    return current;
}

}  // namespace

AedatStream parse_aedat31(std::istream& in) {
    AedatStream stream{kDvs128, {}};
    std::uint64_t offset = 0;

    std::string line;
    if (!std::getline(in, line) || line.rfind("#!AER-DAT3.1", 0) != 0) {
        throw FormatError("missing #!AER-DAT3.1 magic header");
    }
    offset += line.size() + 1;
    while (in.peek() == '#') {
        std::getline(in, line);
        offset += line.size() + 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find("Source") != std::string::npos) {
            stream.geometry = geometry_from_source(line, stream.geometry);
        }
        if (line == "#!END-HEADER") break;
    }

    std::array<unsigned char, kAedatPacketHeaderBytes> header{};
    std::vector<unsigned char> payload;
    while (true) {
        in.read(reinterpret_cast<char*>(header.data()), header.size());
        const auto got = static_cast<std::size_t>(in.gcount());
        if (got == 0) break;
        if (got < header.size()) throw TruncationError(offset, "truncated packet header");

        const std::int16_t type = read_i16(&header[0]);
        const std::int32_t event_size = read_i32(&header[4]);
        const std::int32_t ts_overflow = read_i32(&header[12]);
        const std::int32_t capacity = read_i32(&header[20]);
        const std::int32_t number = read_i32(&header[24]);
        if (event_size <= 0 || capacity < 0 || number < 0 || number > capacity) {
            throw FormatError("byte offset " + std::to_string(offset) + ": corrupt packet header");
        }
        const std::uint64_t packet_offset = offset;
        offset += header.size();

        const std::size_t bytes = static_cast<std::size_t>(event_size) * static_cast<std::size_t>(capacity);
        payload.resize(bytes);
        in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(bytes));
        if (static_cast<std::size_t>(in.gcount()) < bytes) {
            throw TruncationError(packet_offset, "truncated packet payload");
        }
        offset += bytes;
        if (type != kAedatPolarityEvent) continue;
        if (event_size != 8) {
            throw FormatError("byte offset " + std::to_string(packet_offset) +
                              ": polarity events must be 8 bytes");
        }

        const std::uint64_t overflow = static_cast<std::uint64_t>(static_cast<std::uint32_t>(ts_overflow)) << 31;
        for (std::int32_t i = 0; i < number; ++i) {
            const unsigned char* ev = payload.data() + static_cast<std::size_t>(i) * 8;
            const std::uint32_t data = read_u32(ev);
            const std::uint32_t ts = read_u32(ev + 4) & 0x7FFFFFFFu;
            if ((data & 1u) == 0) continue;  // invalidated event
            const std::uint32_t y = (data >> 2) & 0x7FFFu;
            const std::uint32_t x = (data >> 17) & 0x7FFFu;
            if (!stream.geometry.contains(x, y)) {
                throw BoundsError("byte offset " + std::to_string(packet_offset) + ": pixel (" +
                                  std::to_string(x) + "," + std::to_string(y) +
                                  ") outside sensor geometry");
            }
            stream.events.push_back(EventRecord{overflow | ts, static_cast<std::uint16_t>(x),
                                                static_cast<std::uint16_t>(y),
                                                (data >> 1) & 1u ? Polarity::On : Polarity::Off});
        }
    }
    std::stable_sort(stream.events.begin(), stream.events.end(),
                     [](const EventRecord& a, const EventRecord& b) { return a.t < b.t; });
    return stream;
}

}  // namespace dvsattn
