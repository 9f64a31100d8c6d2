#pragma once

// Experiment configuration and the end-to-end pipeline behind the CLI.

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "dvsattn/attention_net.hpp"
#include "dvsattn/classifier.hpp"
#include "dvsattn/decoders.hpp"
#include "dvsattn/encoder.hpp"
#include "dvsattn/events.hpp"
#include "dvsattn/snn_core.hpp"
#include "dvsattn/synthetic.hpp"

namespace dvsattn {

enum class DataFormat { Synthetic, Csv, Aedat };

struct DataConfig {
    DataFormat format = DataFormat::Synthetic;
    std::filesystem::path path;  ///< csv: ingest output directory; aedat: dataset directory
    std::set<int> classes;       ///< kept classes; empty keeps all
    std::size_t max_per_class = 0;  ///< 0 keeps every trial
    SensorGeometry geometry = kDvs128;

    std::vector<PatternKind> synthetic_kinds{PatternKind::SpiralCw, PatternKind::SpiralCcw,
                                             PatternKind::HorizontalSweep};
    std::size_t synthetic_per_class = 50;
    Micros synthetic_duration = 500'000;
    std::uint64_t synthetic_seed = 7;
    SyntheticParams synthetic;
};

struct TrainingConfig {
    std::size_t epochs = 1;
    std::uint64_t seed = 2;
};

struct EvalConfig {
    std::vector<Coding> codings{Coding::Rate, Coding::Latency, Coding::RankOrder};
    double test_fraction = 0.2;
    std::uint64_t seed = 3;
    std::size_t repeats = 1;
    std::size_t workers = 0;  ///< inference threads; 0 = hardware concurrency
    MlpHyperparams mlp;
};

struct ExperimentConfig {
    DataConfig data;
    EncoderConfig encoder;
    NeuronParams neuron;
    PlasticityParams plasticity;

    std::size_t n_intermediate = 64;
    std::size_t n_output = 10;
    bool lateral_inhibition_output = true;
    std::uint64_t network_seed = 1;
    AttentionParams attention;
    NetworkParams network;

    TrainingConfig training;
    EvalConfig eval;
    std::filesystem::path output_dir = "out";

    /// Checks every section against its module invariants and that referenced paths exist.
    void validate() const;
    NetworkTopology topology() const;
};

/// Parses the INI-style config text. Relative data paths resolve against base_dir.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});

/// Loads a config file, or the config embedded in a run manifest (.json).
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical text of a fully resolved config; parse_config(render_config(c)) == c.
std::string render_config(const ExperimentConfig& cfg, bool with_comments = false);

/// Labeled trials described by the data section.
std::vector<TrialSegment> load_dataset(const DataConfig& data);

/// Writes one CSV per trial plus a `trials.csv` index (trial_id,class,duration_us).
void write_trial_set(const std::vector<TrialSegment>& trials, const std::filesystem::path& dir);
std::vector<TrialSegment> read_trial_set(const std::filesystem::path& dir, SensorGeometry geometry);

struct RunSummary {
    std::size_t n_trials = 0;
    Micros simulated_us = 0;
    std::vector<EvalReport> reports;
    bool complete = false;
    std::string failed_stage;
    std::string error;
};

/// Full pipeline: unsupervised training, frozen inference over every trial,
/// decoding, MLP evaluation per coding. Writes features_<coding>.csv,
/// report_<coding>.json, trace/, trials.csv and manifest.json under out_dir.
RunSummary run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

/// Per-layer raster CSVs (attention.csv, intermediate.csv, output.csv) plus
/// attention_intervals.csv from a trace CSV and its companion intervals file.
struct RasterCounts {
    std::size_t attention = 0;
    std::size_t intermediate = 0;
    std::size_t output = 0;
    std::size_t intervals = 0;
};
RasterCounts split_raster(const std::filesystem::path& trace_csv, const std::filesystem::path& out_dir);

/// Inference over trials on independent copies of a frozen network.
std::vector<SpikeTrace> infer_all(const NetworkState& net, std::span<const TrialSegment> trials,
                                  const EncoderConfig& encoder, std::size_t workers);

std::string sha256_hex(const std::string& data);

}  // namespace dvsattn
