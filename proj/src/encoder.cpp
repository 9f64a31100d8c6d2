#include "dvsattn/encoder.hpp"

#include <algorithm>
#include <string>

#include "dvsattn/error.hpp"

namespace dvsattn {
namespace {

std::uint32_t channel_of(const EventRecord& e, const EncoderConfig& cfg) {
    return cfg.polarity_mode == PolarityMode::SeparateChannels && e.polarity == Polarity::On ? 1 : 0;
}

}  // namespace

void EncoderConfig::validate(SensorGeometry geometry) const {
    geometry.validate();
    if (ds_factor < 1) throw ConfigError("encoder.ds_factor must be >= 1");
    if (geometry.width % ds_factor != 0 || geometry.height % ds_factor != 0) {
        throw ConfigError("encoder.ds_factor " + std::to_string(ds_factor) +
                          " does not divide sensor " + std::to_string(geometry.width) + "x" +
                          std::to_string(geometry.height));
    }
    if (sim_step < 1) throw ConfigError("encoder.sim_step must be >= 1 us");
    if (slice_interval < sim_step) throw ConfigError("encoder.slice_interval must be >= sim_step");
    if (slice_interval % sim_step != 0) {
        throw ConfigError("encoder.slice_interval must be a multiple of sim_step");
    }
    if (depth < 1) throw ConfigError("encoder.depth must be >= 1");
}

CubeShape CubeShape::from(const EncoderConfig& cfg, SensorGeometry geometry) {
    return CubeShape{geometry.width / cfg.ds_factor, geometry.height / cfg.ds_factor, cfg.depth,
                     cfg.polarity_mode == PolarityMode::SeparateChannels ? 2u : 1u};
}

CubeIndex CubeShape::unflat(std::uint32_t index) const {
    CubeIndex i;
    i.c = index % channels;
    index /= channels;
    i.d = index % depth;
    index /= depth;
    i.v = index % height;
    i.u = index / height;
    return i;
}

std::size_t InputCube::hot_count() const {
    return static_cast<std::size_t>(std::count(hot_.begin(), hot_.end(), std::uint8_t{1}));
}

Cell downsample(const EventRecord& e, const EncoderConfig& cfg) {
    return Cell{e.x / cfg.ds_factor, e.y / cfg.ds_factor};
}

InputCube encode_step(const UnlabeledTrial& trial, Micros t_now, const EncoderConfig& cfg) {
    const CubeShape shape = CubeShape::from(cfg, trial.geometry);
    InputCube cube(shape);
    const Micros oldest = t_now - static_cast<Micros>(cfg.depth) * cfg.slice_interval;
    for (const auto& e : trial.events) {
        const auto t = static_cast<Micros>(e.t);
        if (t >= t_now) break;
        if (t < oldest) continue;
        const auto d = static_cast<std::uint32_t>((t_now - 1 - t) / cfg.slice_interval);
        const Cell cell = downsample(e, cfg);
        cube.set(CubeIndex{cell.u, cell.v, d, channel_of(e, cfg)});
    }
    return cube;
}

std::vector<std::uint32_t> input_spikes(const InputCube& previous, const InputCube& now,
                                        InputCoding coding) {
    if (!(previous.shape() == now.shape())) throw ShapeError("input cubes differ in shape");
    std::vector<std::uint32_t> out;
    const auto n = static_cast<std::uint32_t>(now.shape().size());
    for (std::uint32_t i = 0; i < n; ++i) {
        if (!now.hot_flat(i)) continue;
        if (coding == InputCoding::Edge && previous.hot_flat(i)) continue;
        out.push_back(i);
    }
    return out;
}

CubeStream::CubeStream(const UnlabeledTrial& trial, const EncoderConfig& cfg, Micros horizon)
    : cfg_(cfg),
      shape_(CubeShape::from(cfg, trial.geometry)),
      bins_per_slice_(static_cast<std::uint32_t>(cfg.slice_interval / cfg.sim_step)),
      counts_(shape_.size(), 0),
      cube_(shape_) {
    const auto n_bins = static_cast<std::size_t>((std::max<Micros>(horizon, 0) + cfg.sim_step - 1) / cfg.sim_step);
    bins_.resize(n_bins);
    std::vector<std::uint32_t> last_seen(static_cast<std::size_t>(shape_.width) * shape_.height * shape_.channels,
                                         UINT32_MAX);
    for (const auto& e : trial.events) {
        const auto bin = static_cast<std::size_t>(static_cast<Micros>(e.t) / cfg.sim_step);
        if (bin >= n_bins) break;
        const Cell cell = downsample(e, cfg);
        const std::uint32_t plane = (cell.u * shape_.height + cell.v) * shape_.channels + channel_of(e, cfg);
        if (last_seen[plane] == bin) continue;
        last_seen[plane] = static_cast<std::uint32_t>(bin);
        bins_[bin].push_back(plane);
    }
}

const InputCube& CubeStream::next() {
    ++step_;
    if (step_ == 0) return cube_;
    const auto apply = [this](Micros bin, std::uint32_t d, int delta) {
        if (bin < 0 || static_cast<std::size_t>(bin) >= bins_.size()) return;
        for (const std::uint32_t plane : bins_[static_cast<std::size_t>(bin)]) {
            const std::uint32_t c = plane % shape_.channels;
            const std::uint32_t uv = plane / shape_.channels;
            const std::uint32_t index = (uv * shape_.depth + d) * shape_.channels + c;
            counts_[index] = static_cast<std::uint32_t>(static_cast<int>(counts_[index]) + delta);
            cube_.set_flat(index, counts_[index] > 0);
        }
    };
    const Micros m = bins_per_slice_;
    for (std::uint32_t d = 0; d < shape_.depth; ++d) {
        apply(step_ - 1 - static_cast<Micros>(d) * m, d, +1);
        apply(step_ - 1 - static_cast<Micros>(d + 1) * m, d, -1);
    }
    return cube_;
}

}  // namespace dvsattn
