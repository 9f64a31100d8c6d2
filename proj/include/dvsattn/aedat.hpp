#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "dvsattn/events.hpp"

namespace dvsattn {

// AEDAT 3.1 polarity stream reader.
//
// Layout: ASCII header lines beginning with '#' (the first is "#!AER-DAT3.1",
// the last "#!END-HEADER"), followed by packets. Each packet has a 28-byte
// little-endian header
//
//   int16 eventType, int16 eventSource, int32 eventSize, int32 eventTSOffset,
//   int32 eventTSOverflow, int32 eventCapacity, int32 eventNumber, int32 eventValid
//
// and eventCapacity * eventSize bytes of payload. Polarity events (type 1) are
// 8 bytes: a uint32 data word and an int32 timestamp. In the data word bit 0 is
// the valid mark, bit 1 the polarity, bits 2..16 y and bits 17..31 x. The full
// timestamp is (eventTSOverflow << 31) | timestamp.

inline constexpr std::int16_t kAedatPolarityEvent = 1;
inline constexpr std::size_t kAedatPacketHeaderBytes = 28;

struct AedatStream {
    SensorGeometry geometry;
    std::vector<EventRecord> events;
};

/// Geometry comes from the "#Source" header line when it names a known sensor
/// (DVS128, DAVIS240, DAVIS346, DVXplorer); otherwise 128x128 is assumed.
AedatStream parse_aedat31(std::istream& in);

}  // namespace dvsattn
