#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

namespace fixtures {

// Little-endian byte builder for hand-made AEDAT 3.1 files.
struct Bytes {
    std::string data;

    void i16(std::int16_t v) { raw(&v, 2); }
    void i32(std::int32_t v) { raw(&v, 4); }
    void u32(std::uint32_t v) { raw(&v, 4); }
    void text(const std::string& s) { data += s; }

    void raw(const void* p, std::size_t n) {
        // The host is little-endian (x86-64); write bytes explicitly anyway.
        std::uint64_t v = 0;
        std::memcpy(&v, p, n);
        for (std::size_t i = 0; i < n; ++i) data.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
};

inline void aedat_header(Bytes& b, const std::string& source = "DVS128") {
    b.text("#!AER-DAT3.1\r\n");
    b.text("#Format: RAW\r\n");
    b.text("#Source 1: " + source + "\r\n");
    b.text("#!END-HEADER\r\n");
}

inline void packet_header(Bytes& b, std::int16_t type, std::int32_t size, std::int32_t overflow,
                          std::int32_t capacity, std::int32_t number) {
    b.i16(type);
    b.i16(1);          // source
    b.i32(size);
    b.i32(4);          // timestamp offset within the event
    b.i32(overflow);
    b.i32(capacity);
    b.i32(number);
    b.i32(number);     // valid
}

inline std::uint32_t polarity_word(std::uint32_t x, std::uint32_t y, bool on, bool valid = true) {
    return (x << 17) | (y << 2) | (on ? 2u : 0u) | (valid ? 1u : 0u);
}

}  // namespace fixtures
