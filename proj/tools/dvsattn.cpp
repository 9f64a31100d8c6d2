// dvsattn: ingest event recordings, run the attention network experiment,
// and export rasters.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>

#include "CLI11.hpp"
#include "dvsattn/aedat.hpp"
#include "dvsattn/error.hpp"
#include "dvsattn/events.hpp"
#include "dvsattn/experiment.hpp"

namespace fs = std::filesystem;
using namespace dvsattn;

namespace {

constexpr int kOk = 0;
constexpr int kPipelineError = 1;
constexpr int kUsageError = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require_file(const std::string& path) {
    if (!fs::exists(path)) throw UsageError("no such file: " + path);
}

int cmd_ingest(const std::string& aedat, const std::string& csv, const std::string& labels_path,
               const std::vector<int>& classes, SensorGeometry geometry, const std::string& out) {
    if (aedat.empty() == csv.empty()) throw UsageError("ingest needs exactly one of --aedat or --csv");
    const std::string& input = aedat.empty() ? csv : aedat;
    require_file(input);
    require_file(labels_path);

    std::vector<EventRecord> events;
    std::ifstream in(input, std::ios::binary);
    try {
        if (!aedat.empty()) {
            auto stream = parse_aedat31(in);
            geometry = stream.geometry;
            events = std::move(stream.events);
        } else {
            events = parse_csv_events(in, geometry);
        }
    } catch (const Error& e) {
        throw Error(input + ": " + e.what());
    }
    std::ifstream lin(labels_path);
    std::vector<LabelRow> labels;
    try {
        labels = load_labels(lin);
    } catch (const Error& e) {
        throw Error(labels_path + ": " + e.what());
    }
    std::set<int> keep(classes.begin(), classes.end());
    if (keep.empty()) {
        for (const auto& l : labels) keep.insert(l.class_label);
    }
    const auto trials = segment_trials(events, labels, keep, geometry);
    write_trial_set(trials, out);
    std::cout << "wrote " << trials.size() << " trials to " << out << "\n";
    return kOk;
}

int cmd_run(const std::string& config_path, const std::string& out) {
    require_file(config_path);
    ExperimentConfig cfg;
    try {
        cfg = load_config(config_path);
        cfg.validate();
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsageError;
    }
    const fs::path out_dir = out.empty() ? cfg.output_dir : fs::path(out);
    const auto summary = run_experiment(cfg, out_dir);
    if (!summary.complete) {
        std::cerr << "stage " << summary.failed_stage << " failed: " << summary.error << "\n";
        return kPipelineError;
    }
    std::cout << "trials: " << summary.n_trials << ", simulated " << summary.simulated_us / 1000 << " ms\n";
    for (const auto& r : summary.reports) {
        std::cout << to_string(r.coding) << " accuracy: " << r.accuracy << "\n";
    }
    return kOk;
}

int cmd_raster(const std::string& trace, const std::string& out) {
    require_file(trace);
    const auto c = split_raster(trace, out);
    std::cout << "attention " << c.attention << ", intermediate " << c.intermediate << ", output " << c.output
              << ", intervals " << c.intervals << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Attention-gated spiking network for event-camera pattern classification"};
    app.require_subcommand(1);

    std::string aedat, csv, labels, ingest_out;
    std::vector<int> classes;
    std::uint32_t width = 128, height = 128;
    auto* ingest = app.add_subcommand("ingest", "Segment a recording into per-trial CSV files");
    ingest->add_option("--aedat", aedat, "AEDAT 3.1 recording");
    ingest->add_option("--csv", csv, "CSV recording (t_us,x,y,p)");
    ingest->add_option("--labels", labels, "label table (class,startTime_usec,endTime_usec)")->required();
    ingest->add_option("--classes", classes, "classes to keep, e.g. 3,5,8")->delimiter(',');
    ingest->add_option("--width", width, "sensor width for CSV input");
    ingest->add_option("--height", height, "sensor height for CSV input");
    ingest->add_option("--out", ingest_out, "output directory")->required();

    std::string config, run_out;
    auto* run = app.add_subcommand("run", "Train, run inference, decode and evaluate");
    run->add_option("--config", config, "experiment config, or a manifest.json to reproduce")->required();
    run->add_option("--out", run_out, "output directory (defaults to output.directory)");

    std::string trace, raster_out;
    auto* raster = app.add_subcommand("raster", "Split a spike trace into per-layer raster CSVs");
    raster->add_option("--trace", trace, "spike trace CSV (t_us,layer,neuron_id)")->required();
    raster->add_option("--out", raster_out, "output directory")->required();

    std::string example_out;
    auto* example = app.add_subcommand("config", "Write the default config with comments");
    example->add_option("--out", example_out, "destination (stdout if omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsageError;
    }

    try {
        if (*ingest) {
            return cmd_ingest(aedat, csv, labels, classes, SensorGeometry{width, height}, ingest_out);
        }
        if (*run) return cmd_run(config, run_out);
        if (*raster) return cmd_raster(trace, raster_out);
        if (*example) {
            const std::string text = render_config(ExperimentConfig{}, true);
            if (example_out.empty()) {
                std::cout << text;
            } else {
                std::ofstream(example_out) << text;
            }
            return kOk;
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kPipelineError;
    }
    return kUsageError;
}
