#pragma once

// Event stream -> delayed-slice input cube.
//
// The cube has one 2D plane per time slice. Slice 0 holds events from the most
// recent interval [t - slice, t), slice d the interval [t - (d+1) slice, t - d slice).
// Each input neuron is one (u, v, d[, c]) cell, so deeper slices act as delayed
// copies of the downsampled event image.

#include <cstdint>
#include <span>
#include <vector>

#include "dvsattn/events.hpp"

namespace dvsattn {

enum class PolarityMode { Merge, SeparateChannels };

/// Level: a hot cell spikes on every step. Edge: only on the step it turns hot.
enum class InputCoding { Level, Edge };

struct EncoderConfig {
    std::uint32_t ds_factor = 8;
    Micros slice_interval = 10'000;
    std::uint32_t depth = 4;
    Micros sim_step = 1'000;
    PolarityMode polarity_mode = PolarityMode::Merge;
    InputCoding coding = InputCoding::Level;

    void validate(SensorGeometry geometry) const;
};

struct Cell {
    std::uint32_t u = 0;
    std::uint32_t v = 0;
    friend bool operator==(const Cell&, const Cell&) = default;
};

struct CubeIndex {
    std::uint32_t u = 0;
    std::uint32_t v = 0;
    std::uint32_t d = 0;
    std::uint32_t c = 0;
    friend bool operator==(const CubeIndex&, const CubeIndex&) = default;
};

/// Row-major over (u, v, d, c); c varies fastest.
struct CubeShape {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::uint32_t depth = 0;
    std::uint32_t channels = 1;

    static CubeShape from(const EncoderConfig& cfg, SensorGeometry geometry);

    std::size_t size() const {
        return static_cast<std::size_t>(width) * height * depth * channels;
    }
    std::uint32_t flat(CubeIndex i) const {
        return ((i.u * height + i.v) * depth + i.d) * channels + i.c;
    }
    CubeIndex unflat(std::uint32_t index) const;
    friend bool operator==(const CubeShape&, const CubeShape&) = default;
};

class InputCube {
public:
    InputCube() = default;
    explicit InputCube(CubeShape shape) : shape_(shape), hot_(shape.size(), 0) {}

    const CubeShape& shape() const { return shape_; }
    bool hot(CubeIndex i) const { return hot_[shape_.flat(i)] != 0; }
    bool hot_flat(std::uint32_t index) const { return hot_[index] != 0; }
    void set(CubeIndex i, bool value = true) { hot_[shape_.flat(i)] = value ? 1 : 0; }
    void set_flat(std::uint32_t index, bool value) { hot_[index] = value ? 1 : 0; }
    std::size_t hot_count() const;

    friend bool operator==(const InputCube&, const InputCube&) = default;

private:
    CubeShape shape_;
    std::vector<std::uint8_t> hot_;
};

Cell downsample(const EventRecord& e, const EncoderConfig& cfg);

/// Occupancy of the cube at simulation time t_now, computed directly from the events.
InputCube encode_step(const UnlabeledTrial& trial, Micros t_now, const EncoderConfig& cfg);

/// Flat indices of input neurons spiking at this step, ascending.
std::vector<std::uint32_t> input_spikes(const InputCube& previous, const InputCube& now,
                                        InputCoding coding = InputCoding::Level);

/// Produces the same cubes as encode_step at t = 0, dt, 2dt, ... but updates
/// slice occupancy incrementally, so a full trial costs O(events * depth).
class CubeStream {
public:
    CubeStream(const UnlabeledTrial& trial, const EncoderConfig& cfg, Micros horizon);

    /// Advances to the next step and returns its cube. The first call yields t = 0.
    const InputCube& next();
    Micros time() const { return step_ * cfg_.sim_step; }

private:
    EncoderConfig cfg_;
    CubeShape shape_;
    std::uint32_t bins_per_slice_ = 1;
    std::vector<std::vector<std::uint32_t>> bins_;  // distinct plane*channel ids per dt bin
    std::vector<std::uint32_t> counts_;
    InputCube cube_;
    Micros step_ = -1;
};

}  // namespace dvsattn
