#include <algorithm>
#include <map>
#include <random>
#include <sstream>

#include "doctest.h"
#include "dvsattn/aedat.hpp"
#include "dvsattn/error.hpp"
#include "dvsattn/events.hpp"
#include "dvsattn/synthetic.hpp"
#include "fixtures.hpp"

using namespace dvsattn;

namespace {

std::vector<EventRecord> parse(const std::string& text, SensorGeometry g = kDvs128) {
    std::istringstream in(text);
    return parse_csv_events(in, g);
}

std::string write(std::span<const EventRecord> events) {
    std::ostringstream out;
    write_csv_events(events, out);
    return out.str();
}

AedatStream parse_aedat(const std::string& bytes) {
    std::istringstream in(bytes, std::ios::binary);
    return parse_aedat31(in);
}

}  // namespace

TEST_CASE("csv: single event") {
    const auto ev = parse("0,0,0,1\n");
    REQUIRE(ev.size() == 1);
    CHECK(ev[0] == EventRecord{0, 0, 0, Polarity::On});
}

TEST_CASE("csv: empty input") {
    CHECK(parse("").empty());
    CHECK(parse("t,x,y,p\n").empty());
}

TEST_CASE("csv: unsorted input comes back ordered") {
    const auto ev = parse("10,2,3,0\n5,1,1,1\n");
    REQUIRE(ev.size() == 2);
    CHECK(ev[0] == EventRecord{5, 1, 1, Polarity::On});
    CHECK(ev[1] == EventRecord{10, 2, 3, Polarity::Off});
}

TEST_CASE("csv: header and CRLF are tolerated") {
    const auto ev = parse("t,x,y,p\r\n7,1,2,1\r\n");
    REQUIRE(ev.size() == 1);
    CHECK(ev[0].t == 7);
}

TEST_CASE("csv: malformed line reports its line number") {
    try {
        parse("0,0,0,1\n1,2,x,0\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
    CHECK_THROWS_AS(parse("0,0,0,2\n"), ParseError);
    CHECK_THROWS_AS(parse("0,0,0\n"), ParseError);
    CHECK_THROWS_AS(parse("0,0,0,1,9\n"), ParseError);
    CHECK_THROWS_AS(parse("-1,0,0,1\n"), ParseError);
}

TEST_CASE("csv: out of bounds coordinates raise") {
    CHECK_THROWS_AS(parse("0,128,0,1\n"), BoundsError);
    CHECK_THROWS_AS(parse("0,0,128,1\n"), BoundsError);
    CHECK_NOTHROW(parse("0,127,127,1\n"));
    CHECK_THROWS_AS(parse("0,20,5,1\n", SensorGeometry{16, 16}), BoundsError);
}

TEST_CASE("csv: writer format") {
    CHECK(write({}) == "");
    const EventRecord one{0, 0, 0, Polarity::On};
    CHECK(write(std::span(&one, 1)) == "0,0,0,1\n");
}

TEST_CASE("csv: round trip over random event lists") {
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<EventRecord> events(1000);
        std::uint64_t t = rng() % 1000;
        for (auto& e : events) {
            t += rng() % 50;
            e = {t, static_cast<std::uint16_t>(rng() % 128), static_cast<std::uint16_t>(rng() % 128),
                 (rng() & 1) ? Polarity::On : Polarity::Off};
        }
        CHECK(parse(write(events)) == events);
    }
}

TEST_CASE("labels") {
    std::istringstream one("3,100,200\n");
    CHECK(load_labels(one) == std::vector<LabelRow>{{3, 100, 200}});

    std::istringstream empty("");
    CHECK(load_labels(empty).empty());

    std::istringstream three("class,startTime_usec,endTime_usec\n1,0,10\n3,10,25\n8,30,31\n");
    CHECK(load_labels(three) == std::vector<LabelRow>{{1, 0, 10}, {3, 10, 25}, {8, 30, 31}});

    std::istringstream bad("class,startTime_usec,endTime_usec\n1,0,10\n3,ten,25\n");
    try {
        load_labels(bad);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
}

TEST_CASE("segmentation examples") {
    const std::vector<EventRecord> events{{5, 1, 1, Polarity::On}, {15, 2, 2, Polarity::Off}, {25, 3, 3, Polarity::On}};

    const std::vector<LabelRow> one{{3, 10, 20}};
    const auto seg = segment_trials(events, one, {3});
    REQUIRE(seg.size() == 1);
    CHECK(seg[0].class_label == 3);
    REQUIRE(seg[0].events.size() == 1);
    CHECK(seg[0].events[0] == EventRecord{5, 2, 2, Polarity::Off});
    CHECK(seg[0].duration() == 10);

    CHECK(segment_trials(events, one, {}).empty());

    const std::vector<LabelRow> overlap{{1, 0, 20}, {2, 10, 30}};
    const auto both = segment_trials(events, overlap, {1, 2});
    REQUIRE(both.size() == 2);
    CHECK(both[0].events.size() == 2);
    CHECK(both[1].events.size() == 2);
    CHECK(both[0].events[1].x == 2);
    CHECK(both[1].events[0].x == 2);
    CHECK(both[1].events[0].t == 5);

    const std::vector<LabelRow> inverted{{3, 20, 20}};
    CHECK_THROWS_AS(segment_trials(events, inverted, {3}), InvalidWindowError);
}

TEST_CASE("segmentation conserves event multiplicity") {
    std::mt19937_64 rng(5);
    std::vector<EventRecord> events(2000);
    for (std::size_t i = 0; i < events.size(); ++i) {
        events[i] = {i * 3 + rng() % 3, static_cast<std::uint16_t>(i % 128), 0, Polarity::On};
    }
    std::sort(events.begin(), events.end(), [](auto& a, auto& b) { return a.t < b.t; });
    std::vector<LabelRow> labels;
    for (int k = 0; k < 40; ++k) {
        const std::uint64_t a = rng() % 6000;
        labels.push_back({k % 4, a, a + 1 + rng() % 800});
    }
    const auto segs = segment_trials(events, labels, {0, 1, 2, 3});
    REQUIRE(segs.size() == labels.size());

    std::map<std::pair<std::uint64_t, std::uint16_t>, int> seen;
    for (const auto& s : segs) {
        for (const auto& e : s.events) seen[{e.t + s.t_start, e.x}]++;
    }
    for (const auto& e : events) {
        int windows = 0;
        for (const auto& l : labels) windows += (e.t >= l.t_start && e.t < l.t_end) ? 1 : 0;
        const auto it = seen.find({e.t, e.x});
        CHECK((it == seen.end() ? 0 : it->second) == windows);
    }
}

TEST_CASE("aedat: one hand-encoded polarity event") {
    // x=5, y=9, ON, valid: (5<<17)|(9<<2)|2|1 = 0x000A0027; timestamp 1000 = 0x3E8.
    std::string file = "#!AER-DAT3.1\r\n#!END-HEADER\r\n";
    const unsigned char packet[] = {
        0x01, 0x00, 0x01, 0x00,  // type 1 (polarity), source 1
        0x08, 0x00, 0x00, 0x00,  // event size 8
        0x04, 0x00, 0x00, 0x00,  // timestamp offset 4
        0x00, 0x00, 0x00, 0x00,  // overflow 0
        0x01, 0x00, 0x00, 0x00,  // capacity 1
        0x01, 0x00, 0x00, 0x00,  // number 1
        0x01, 0x00, 0x00, 0x00,  // valid 1
        0x27, 0x00, 0x0A, 0x00,  // data word
        0xE8, 0x03, 0x00, 0x00,  // timestamp
    };
    file.append(reinterpret_cast<const char*>(packet), sizeof packet);
    const auto s = parse_aedat(file);
    CHECK(s.geometry == kDvs128);
    REQUIRE(s.events.size() == 1);
    CHECK(s.events[0] == EventRecord{1000, 5, 9, Polarity::On});
}

TEST_CASE("aedat: non-polarity packets are skipped") {
    fixtures::Bytes b;
    fixtures::aedat_header(b);
    fixtures::packet_header(b, 2, 12, 0, 2, 2);  // special events, 12-byte
    for (int i = 0; i < 2 * 12; ++i) b.data.push_back('\x55');
    fixtures::packet_header(b, 1, 8, 1, 2, 2);
    b.u32(fixtures::polarity_word(3, 4, false));
    b.i32(10);
    b.u32(fixtures::polarity_word(120, 7, true));
    b.i32(20);
    const auto s = parse_aedat(b.data);
    REQUIRE(s.events.size() == 2);
    const std::uint64_t base = std::uint64_t{1} << 31;
    CHECK(s.events[0] == EventRecord{base + 10, 3, 4, Polarity::Off});
    CHECK(s.events[1] == EventRecord{base + 20, 120, 7, Polarity::On});
}

TEST_CASE("aedat: invalid events are dropped") {
    fixtures::Bytes b;
    fixtures::aedat_header(b);
    fixtures::packet_header(b, 1, 8, 0, 2, 2);
    b.u32(fixtures::polarity_word(1, 1, true, false));
    b.i32(1);
    b.u32(fixtures::polarity_word(2, 2, true));
    b.i32(2);
    const auto s = parse_aedat(b.data);
    REQUIRE(s.events.size() == 1);
    CHECK(s.events[0].x == 2);
}

TEST_CASE("aedat: header only, missing magic, truncation") {
    fixtures::Bytes b;
    fixtures::aedat_header(b);
    CHECK(parse_aedat(b.data).events.empty());

    CHECK_THROWS_AS(parse_aedat("#!AER-DAT2.0\r\n"), FormatError);
    CHECK_THROWS_AS(parse_aedat(""), FormatError);

    const auto header_end = b.data.size();
    fixtures::packet_header(b, 1, 8, 0, 2, 2);
    b.u32(fixtures::polarity_word(1, 1, true));
    b.i32(1);  // second event missing
    try {
        parse_aedat(b.data);
        FAIL("expected TruncationError");
    } catch (const TruncationError& e) {
        CHECK(e.offset() == header_end);
    }

    fixtures::Bytes short_header;
    fixtures::aedat_header(short_header);
    short_header.i16(1);
    short_header.i16(1);
    CHECK_THROWS_AS(parse_aedat(short_header.data), TruncationError);
}

TEST_CASE("aedat: geometry from source line and bounds") {
    fixtures::Bytes b;
    fixtures::aedat_header(b, "DAVIS346");
    fixtures::packet_header(b, 1, 8, 0, 1, 1);
    b.u32(fixtures::polarity_word(300, 200, true));
    b.i32(5);
    const auto s = parse_aedat(b.data);
    CHECK(s.geometry == SensorGeometry{346, 260});
    CHECK(s.events.size() == 1);

    fixtures::Bytes out_of_range;
    fixtures::aedat_header(out_of_range);
    fixtures::packet_header(out_of_range, 1, 8, 0, 1, 1);
    out_of_range.u32(fixtures::polarity_word(300, 2, true));
    out_of_range.i32(5);
    CHECK_THROWS_AS(parse_aedat(out_of_range.data), BoundsError);
}

TEST_CASE("synthetic: determinism and purity") {
    const auto a = gen_synthetic_pattern(PatternKind::SpiralCw, 200'000, kDvs128, 42);
    const auto b = gen_synthetic_pattern(PatternKind::SpiralCw, 200'000, kDvs128, 42);
    const auto c = gen_synthetic_pattern(PatternKind::SpiralCw, 200'000, kDvs128, 43);
    CHECK(a.events == b.events);
    CHECK(a.events != c.events);
    CHECK(a.duration() == 200'000);
    CHECK_FALSE(a.events.empty());
    CHECK(std::is_sorted(a.events.begin(), a.events.end(), [](auto& l, auto& r) { return l.t < r.t; }));
    for (const auto& e : a.events) {
        CHECK(e.t < 200'000u);
        CHECK(kDvs128.contains(e.x, e.y));
    }
}

TEST_CASE("synthetic: zero duration is an error") {
    CHECK_THROWS_AS(gen_synthetic_pattern(PatternKind::SpiralCw, 0, kDvs128, 1), Error);
}

TEST_CASE("synthetic: cw and ccw share positions, not order") {
    for (std::uint64_t seed : {1u, 2u, 99u}) {
        const auto cw = gen_synthetic_pattern(PatternKind::SpiralCw, 300'000, kDvs128, seed);
        const auto ccw = gen_synthetic_pattern(PatternKind::SpiralCcw, 300'000, kDvs128, seed);
        std::map<std::pair<int, int>, int> ma, mb;
        std::vector<std::pair<int, int>> oa, ob;
        for (const auto& e : cw.events) {
            ma[{e.x, e.y}]++;
            oa.emplace_back(e.x, e.y);
        }
        for (const auto& e : ccw.events) {
            mb[{e.x, e.y}]++;
            ob.emplace_back(e.x, e.y);
        }
        CHECK(ma == mb);
        CHECK(oa != ob);
    }
}

TEST_CASE("synthetic: pattern names") {
    for (auto k : {PatternKind::SpiralCw, PatternKind::SpiralCcw, PatternKind::HorizontalSweep}) {
        CHECK(pattern_from_string(to_string(k)) == k);
    }
    CHECK_FALSE(pattern_from_string("zigzag").has_value());
}
