#include "dvsattn/experiment.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

#include "dvsattn/aedat.hpp"
#include "dvsattn/error.hpp"
#include "json.hpp"

namespace dvsattn {
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Scalar conversions

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    const auto last = s.find_last_not_of(" \t\r");
    return first == std::string::npos ? std::string() : s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& raw) {
    const std::string s = trim(raw);
    T value{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || p != s.data() + s.size() || s.empty()) {
        throw ConfigError(key + ": cannot parse '" + raw + "'");
    }
    return value;
}

bool parse_bool(const std::string& key, const std::string& raw) {
    const std::string s = trim(raw);
    if (s == "true" || s == "1" || s == "on") return true;
    if (s == "false" || s == "0" || s == "off") return false;
    throw ConfigError(key + ": expected true/false, got '" + raw + "'");
}

std::string fmt(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, p);
}

template <typename T>
std::string fmt_int(T v) {
    return std::to_string(v);
}

std::vector<std::string> split_list(const std::string& raw) {
    std::vector<std::string> out;
    std::stringstream ss(raw);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <typename Range, typename F>
std::string join(const Range& r, F&& to_str) {
    std::string out;
    for (const auto& v : r) {
        if (!out.empty()) out += ',';
        out += to_str(v);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Field registry shared by parse_config and render_config.

struct Field {
    std::string section;
    std::string key;
    std::string comment;
    std::function<void(ExperimentConfig&, const std::string&, const fs::path&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

template <typename T, typename Member>
Field number_field(std::string section, std::string key, std::string comment, Member member) {
    const std::string full = section + "." + key;
    return Field{std::move(section), std::move(key), std::move(comment),
                 [member, full](ExperimentConfig& c, const std::string& v, const fs::path&) {
                     member(c) = parse_number<T>(full, v);
                 },
                 [member](const ExperimentConfig& c) {
                     if constexpr (std::is_floating_point_v<T>) {
                         return fmt(member(c));
                     } else {
                         return fmt_int(member(c));
                     }
                 }};
}

template <typename Member>
Field bool_field(std::string section, std::string key, std::string comment, Member member) {
    const std::string full = section + "." + key;
    return Field{std::move(section), std::move(key), std::move(comment),
                 [member, full](ExperimentConfig& c, const std::string& v, const fs::path&) {
                     member(c) = parse_bool(full, v);
                 },
                 [member](const ExperimentConfig& c) {
                     return std::string(member(c) ? "true" : "false");
                 }};
}

#define DVSATTN_MEMBER(expr) [](auto& c) -> auto& { return c.expr; }

const std::vector<Field>& fields() {
    static const std::vector<Field> kFields = [] {
        std::vector<Field> f;
        // data
        f.push_back(Field{"data", "format", "synthetic | csv (ingest output directory) | aedat (dataset directory)",
                          [](ExperimentConfig& c, const std::string& v, const fs::path&) {
                              const auto s = trim(v);
                              if (s == "synthetic") c.data.format = DataFormat::Synthetic;
                              else if (s == "csv") c.data.format = DataFormat::Csv;
                              else if (s == "aedat") c.data.format = DataFormat::Aedat;
                              else throw ConfigError("data.format: unknown format '" + s + "'");
                          },
                          [](const ExperimentConfig& c) -> std::string {
                              switch (c.data.format) {
                                  case DataFormat::Synthetic: return "synthetic";
                                  case DataFormat::Csv: return "csv";
                                  case DataFormat::Aedat: return "aedat";
                              }
                              return "";
                          }});
        f.push_back(Field{"data", "path", "input location for csv/aedat formats",
                          [](ExperimentConfig& c, const std::string& v, const fs::path& base) {
                              const fs::path p = trim(v);
                              c.data.path = p.empty() || p.is_absolute() || base.empty() ? p : base / p;
                          },
                          [](const ExperimentConfig& c) { return c.data.path.string(); }});
        f.push_back(Field{"data", "classes", "comma-separated class labels to keep; empty keeps all",
                          [](ExperimentConfig& c, const std::string& v, const fs::path&) {
                              c.data.classes.clear();
                              for (const auto& s : split_list(v)) c.data.classes.insert(parse_number<int>("data.classes", s));
                          },
                          [](const ExperimentConfig& c) {
                              return join(c.data.classes, [](int v) { return std::to_string(v); });
                          }});
        f.push_back(number_field<std::size_t>("data", "max_per_class", "first N trials per class; 0 keeps all",
                                              DVSATTN_MEMBER(data.max_per_class)));
        f.push_back(number_field<std::uint32_t>("data", "sensor_width", "pixels", DVSATTN_MEMBER(data.geometry.width)));
        f.push_back(number_field<std::uint32_t>("data", "sensor_height", "pixels", DVSATTN_MEMBER(data.geometry.height)));
        f.push_back(Field{"data", "synthetic_kinds", "spiral_cw, spiral_ccw, horizontal_sweep (labels 0, 1, 2)",
                          [](ExperimentConfig& c, const std::string& v, const fs::path&) {
                              c.data.synthetic_kinds.clear();
                              for (const auto& s : split_list(v)) {
                                  const auto k = pattern_from_string(s);
                                  if (!k) throw ConfigError("data.synthetic_kinds: unknown pattern '" + s + "'");
                                  c.data.synthetic_kinds.push_back(*k);
                              }
                          },
                          [](const ExperimentConfig& c) {
                              return join(c.data.synthetic_kinds, [](PatternKind k) { return std::string(to_string(k)); });
                          }});
        f.push_back(number_field<std::size_t>("data", "synthetic_per_class", "", DVSATTN_MEMBER(data.synthetic_per_class)));
        f.push_back(number_field<Micros>("data", "synthetic_duration_us", "", DVSATTN_MEMBER(data.synthetic_duration)));
        f.push_back(number_field<std::uint64_t>("data", "synthetic_seed", "seeds the synthetic dataset itself",
                                                DVSATTN_MEMBER(data.synthetic_seed)));
        f.push_back(number_field<double>("data", "synthetic_events_per_ms", "", DVSATTN_MEMBER(data.synthetic.events_per_ms)));
        f.push_back(number_field<double>("data", "synthetic_spiral_turns", "", DVSATTN_MEMBER(data.synthetic.spiral_turns)));
        f.push_back(number_field<double>("data", "synthetic_position_jitter_px", "",
                                         DVSATTN_MEMBER(data.synthetic.position_jitter_px)));
        f.push_back(number_field<double>("data", "synthetic_center_jitter_px", "",
                                         DVSATTN_MEMBER(data.synthetic.center_jitter_px)));
        f.push_back(number_field<double>("data", "synthetic_noise_fraction", "",
                                         DVSATTN_MEMBER(data.synthetic.noise_fraction)));
        // encoder
        f.push_back(number_field<std::uint32_t>("encoder", "ds_factor", "sensor pixels per input cell per axis",
                                                DVSATTN_MEMBER(encoder.ds_factor)));
        f.push_back(number_field<Micros>("encoder", "slice_interval", "us per time slice", DVSATTN_MEMBER(encoder.slice_interval)));
        f.push_back(number_field<std::uint32_t>("encoder", "depth", "number of time slices", DVSATTN_MEMBER(encoder.depth)));
        f.push_back(number_field<Micros>("encoder", "sim_step", "us per simulation step", DVSATTN_MEMBER(encoder.sim_step)));
        f.push_back(Field{"encoder", "polarity_mode", "merge | separate_channels",
                          [](ExperimentConfig& c, const std::string& v, const fs::path&) {
                              const auto s = trim(v);
                              if (s == "merge") c.encoder.polarity_mode = PolarityMode::Merge;
                              else if (s == "separate_channels") c.encoder.polarity_mode = PolarityMode::SeparateChannels;
                              else throw ConfigError("encoder.polarity_mode: unknown mode '" + s + "'");
                          },
                          [](const ExperimentConfig& c) {
                              return std::string(c.encoder.polarity_mode == PolarityMode::Merge ? "merge" : "separate_channels");
                          }});
        f.push_back(Field{"encoder", "coding", "level (spike every step while hot) | edge (spike when a cell turns hot)",
                          [](ExperimentConfig& c, const std::string& v, const fs::path&) {
                              const auto s = trim(v);
                              if (s == "level") c.encoder.coding = InputCoding::Level;
                              else if (s == "edge") c.encoder.coding = InputCoding::Edge;
                              else throw ConfigError("encoder.coding: unknown coding '" + s + "'");
                          },
                          [](const ExperimentConfig& c) {
                              return std::string(c.encoder.coding == InputCoding::Level ? "level" : "edge");
                          }});
        // neuron
        f.push_back(number_field<double>("neuron", "tau_m", "us", DVSATTN_MEMBER(neuron.tau_m)));
        f.push_back(number_field<double>("neuron", "v_thresh0", "", DVSATTN_MEMBER(neuron.v_thresh0)));
        f.push_back(number_field<double>("neuron", "v_reset", "", DVSATTN_MEMBER(neuron.v_reset)));
        f.push_back(number_field<double>("neuron", "t_refrac", "us", DVSATTN_MEMBER(neuron.t_refrac)));
        f.push_back(number_field<double>("neuron", "theta_inc", "", DVSATTN_MEMBER(neuron.theta_inc)));
        f.push_back(number_field<double>("neuron", "tau_theta", "us", DVSATTN_MEMBER(neuron.tau_theta)));
        // plasticity
        f.push_back(number_field<double>("plasticity", "a_plus", "", DVSATTN_MEMBER(plasticity.a_plus)));
        f.push_back(number_field<double>("plasticity", "a_minus", "", DVSATTN_MEMBER(plasticity.a_minus)));
        f.push_back(number_field<double>("plasticity", "tau_pre", "us", DVSATTN_MEMBER(plasticity.tau_pre)));
        f.push_back(number_field<double>("plasticity", "tau_post", "us", DVSATTN_MEMBER(plasticity.tau_post)));
        f.push_back(number_field<double>("plasticity", "u_depress", "", DVSATTN_MEMBER(plasticity.u_depress)));
        f.push_back(number_field<double>("plasticity", "tau_recover", "us", DVSATTN_MEMBER(plasticity.tau_recover)));
        f.push_back(number_field<double>("plasticity", "w_max", "", DVSATTN_MEMBER(plasticity.w_max)));
        f.push_back(bool_field("plasticity", "learning_enabled", "", DVSATTN_MEMBER(plasticity.learning_enabled)));
        // network
        f.push_back(number_field<std::size_t>("network", "n_intermediate", "", DVSATTN_MEMBER(n_intermediate)));
        f.push_back(number_field<std::size_t>("network", "n_output", "", DVSATTN_MEMBER(n_output)));
        f.push_back(bool_field("network", "lateral_inhibition_output", "winner-take-all on the output layer",
                               DVSATTN_MEMBER(lateral_inhibition_output)));
        f.push_back(number_field<std::uint64_t>("network", "seed", "weight initialisation", DVSATTN_MEMBER(network_seed)));
        f.push_back(number_field<double>("network", "input_gain", "", DVSATTN_MEMBER(network.input_gain)));
        f.push_back(number_field<double>("network", "hidden_gain", "", DVSATTN_MEMBER(network.hidden_gain)));
        f.push_back(bool_field("network", "output_freeze", "stop output integration while attention is active",
                               DVSATTN_MEMBER(network.output_freeze)));
        f.push_back(number_field<double>("network", "tail_slices", "simulated tail after each trial, in slices",
                                         DVSATTN_MEMBER(network.tail_slices)));
        f.push_back(number_field<double>("network", "output_tau_m", "output membrane time constant in us, 0 = neuron.tau_m",
                                         DVSATTN_MEMBER(network.output_tau_m)));
        f.push_back(number_field<double>("network", "theta_on", "attention hysteresis, on", DVSATTN_MEMBER(attention.theta_on)));
        f.push_back(number_field<double>("network", "theta_off", "attention hysteresis, off", DVSATTN_MEMBER(attention.theta_off)));
        f.push_back(number_field<double>("network", "tau_att", "us", DVSATTN_MEMBER(attention.tau_att)));
        f.push_back(number_field<double>("network", "attention_weight", "", DVSATTN_MEMBER(attention.input_weight)));
        f.push_back(number_field<double>("network", "u_habit", "", DVSATTN_MEMBER(attention.u_habit)));
        f.push_back(number_field<double>("network", "tau_habit", "us", DVSATTN_MEMBER(attention.tau_habit)));
        // training
        f.push_back(number_field<std::size_t>("training", "epochs", "", DVSATTN_MEMBER(training.epochs)));
        f.push_back(number_field<std::uint64_t>("training", "seed", "trial shuffling", DVSATTN_MEMBER(training.seed)));
        // eval
        f.push_back(Field{"eval", "codings", "rate, latency, rank_order",
                          [](ExperimentConfig& c, const std::string& v, const fs::path&) {
                              c.eval.codings.clear();
                              for (const auto& s : split_list(v)) {
                                  const auto k = coding_from_string(s);
                                  if (!k) throw ConfigError("eval.codings: unknown coding '" + s + "'");
                                  c.eval.codings.push_back(*k);
                              }
                          },
                          [](const ExperimentConfig& c) {
                              return join(c.eval.codings, [](Coding k) { return std::string(to_string(k)); });
                          }});
        f.push_back(number_field<double>("eval", "test_fraction", "", DVSATTN_MEMBER(eval.test_fraction)));
        f.push_back(number_field<std::uint64_t>("eval", "seed", "split, MLP init and batching", DVSATTN_MEMBER(eval.seed)));
        f.push_back(number_field<std::size_t>("eval", "repeats", "evaluate seeds seed..seed+repeats-1",
                                              DVSATTN_MEMBER(eval.repeats)));
        f.push_back(number_field<std::size_t>("eval", "workers", "inference threads; 0 = all cores",
                                              DVSATTN_MEMBER(eval.workers)));
        f.push_back(number_field<std::size_t>("eval", "n_hidden", "", DVSATTN_MEMBER(eval.mlp.n_hidden)));
        f.push_back(number_field<double>("eval", "lr", "", DVSATTN_MEMBER(eval.mlp.lr)));
        f.push_back(number_field<std::size_t>("eval", "epochs", "", DVSATTN_MEMBER(eval.mlp.epochs)));
        f.push_back(number_field<std::size_t>("eval", "batch", "", DVSATTN_MEMBER(eval.mlp.batch)));
        // output
        f.push_back(Field{"output", "directory", "overridden by --out",
                          [](ExperimentConfig& c, const std::string& v, const fs::path&) { c.output_dir = trim(v); },
                          [](const ExperimentConfig& c) { return c.output_dir.string(); }});
        return f;
    }();
    return kFields;
}

#undef DVSATTN_MEMBER

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

std::vector<TrialSegment> select_trials(std::vector<TrialSegment> trials, const DataConfig& data) {
    std::vector<TrialSegment> out;
    std::map<int, std::size_t> taken;
    for (auto& t : trials) {
        if (!data.classes.empty() && !data.classes.contains(t.class_label)) continue;
        if (data.max_per_class > 0 && taken[t.class_label] >= data.max_per_class) continue;
        ++taken[t.class_label];
        out.push_back(std::move(t));
    }
    return out;
}

void write_trial_index(const std::vector<TrialSegment>& trials, const fs::path& path) {
    auto out = open_out(path);
    out << "trial_id,class,duration_us\n";
    for (std::size_t i = 0; i < trials.size(); ++i) {
        out << i << ',' << trials[i].class_label << ',' << trials[i].duration() << '\n';
    }
}

}  // namespace

// ---------------------------------------------------------------------------

void ExperimentConfig::validate() const {
    data.geometry.validate();
    encoder.validate(data.geometry);
    neuron.validate();
    plasticity.validate();
    attention.validate();
    network.validate();
    topology().validate();
    switch (data.format) {
        case DataFormat::Synthetic:
            if (data.synthetic_kinds.empty()) throw ConfigError("data.synthetic_kinds is empty");
            if (data.synthetic_per_class < 1) throw ConfigError("data.synthetic_per_class must be >= 1");
            if (data.synthetic_duration <= 0) throw ConfigError("data.synthetic_duration_us must be > 0");
            break;
        case DataFormat::Csv:
        case DataFormat::Aedat:
            if (data.path.empty() || !fs::exists(data.path)) {
                throw ConfigError("data.path '" + data.path.string() + "' does not exist");
            }
            break;
    }
    if (training.epochs < 1) throw ConfigError("training.epochs must be >= 1");
    if (eval.codings.empty()) throw ConfigError("eval.codings is empty");
    if (!(eval.test_fraction > 0 && eval.test_fraction < 1)) throw ConfigError("eval.test_fraction must be in (0, 1)");
    if (eval.repeats < 1) throw ConfigError("eval.repeats must be >= 1");
    if (eval.mlp.n_hidden < 1 || eval.mlp.batch < 1) throw ConfigError("eval.n_hidden and eval.batch must be >= 1");
    if (!(eval.mlp.lr > 0)) throw ConfigError("eval.lr must be > 0");
}

NetworkTopology ExperimentConfig::topology() const {
    return NetworkTopology{CubeShape::from(encoder, data.geometry).size(), n_intermediate, n_output,
                           lateral_inhibition_output};
}

ExperimentConfig parse_config(const std::string& text, const fs::path& base_dir) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    ExperimentConfig cfg;
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw ConfigError("config: key '" + section + "' outside of a section");
        for (const auto& [key, value] : body) {
            const auto& all = fields();
            const auto it = std::find_if(all.begin(), all.end(), [&, &s = section, &k = key](const Field& f) {
                return f.section == s && f.key == k;
            });
            if (it == all.end()) throw ConfigError("config: unknown key " + section + "." + key);
            it->set(cfg, value.data(), base_dir);
        }
    }
    return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
    if (!fs::exists(path)) throw Error("config file '" + path.string() + "' does not exist");
    std::string text = read_file(path);
    if (path.extension() == ".json") {
        const auto manifest = nlohmann::json::parse(text);
        text = manifest.at("config").get<std::string>();
    }
    return parse_config(text, path.parent_path());
}

std::string render_config(const ExperimentConfig& cfg, bool with_comments) {
    std::string out;
    std::string section;
    for (const auto& f : fields()) {
        if (f.section != section) {
            if (!section.empty()) out += '\n';
            section = f.section;
            out += '[' + section + "]\n";
        }
        if (with_comments && !f.comment.empty()) out += "; " + f.comment + '\n';
        out += f.key + " = " + f.get(cfg) + '\n';
    }
    return out;
}

std::vector<TrialSegment> load_dataset(const DataConfig& data) {
    std::vector<TrialSegment> trials;
    switch (data.format) {
        case DataFormat::Synthetic:
            for (const auto kind : data.synthetic_kinds) {
                for (std::size_t i = 0; i < data.synthetic_per_class; ++i) {
                    trials.push_back(gen_synthetic_pattern(kind, data.synthetic_duration, data.geometry,
                                                           data.synthetic_seed * 1'000'003ull + i, data.synthetic));
                }
            }
            break;
        case DataFormat::Csv:
            trials = read_trial_set(data.path, data.geometry);
            break;
        case DataFormat::Aedat: {
            std::vector<fs::path> files;
            for (const auto& entry : fs::directory_iterator(data.path)) {
                if (entry.path().extension() == ".aedat") files.push_back(entry.path());
            }
            std::sort(files.begin(), files.end());
            for (const auto& file : files) {
                const fs::path labels_path = file.parent_path() / (file.stem().string() + "_labels.csv");
                if (!fs::exists(labels_path)) continue;
                std::ifstream ein(file, std::ios::binary);
                const auto stream = parse_aedat31(ein);
                std::ifstream lin(labels_path);
                const auto labels = load_labels(lin);
                std::set<int> keep = data.classes;
                if (keep.empty()) {
                    for (const auto& l : labels) keep.insert(l.class_label);
                }
                auto segs = segment_trials(stream.events, labels, keep, stream.geometry);
                for (auto& s : segs) trials.push_back(std::move(s));
            }
            break;
        }
    }
    return select_trials(std::move(trials), data);
}

void write_trial_set(const std::vector<TrialSegment>& trials, const fs::path& dir) {
    fs::create_directories(dir);
    for (std::size_t i = 0; i < trials.size(); ++i) {
        std::ostringstream name;
        name << "trial_" << std::setw(4) << std::setfill('0') << i << ".csv";
        auto out = open_out(dir / name.str());
        write_csv_events(trials[i].events, out);
    }
    write_trial_index(trials, dir / "trials.csv");
}

std::vector<TrialSegment> read_trial_set(const fs::path& dir, SensorGeometry geometry) {
    const fs::path index_path = dir / "trials.csv";
    std::ifstream index(index_path);
    if (!index) throw Error("cannot open " + index_path.string());
    // The index shares the label-table column layout: id, class, duration.
    std::vector<TrialSegment> trials;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(index, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || (line_no == 1 && line.rfind("trial_id", 0) == 0)) continue;
        const auto parts = split_list(line);
        if (parts.size() != 3) throw ParseError(line_no, "trials.csv: expected trial_id,class,duration_us");
        const auto id = parse_number<std::size_t>("trial_id", parts[0]);
        TrialSegment t;
        t.class_label = parse_number<int>("class", parts[1]);
        t.t_start = 0;
        t.t_end = parse_number<std::uint64_t>("duration_us", parts[2]);
        t.geometry = geometry;
        std::ostringstream name;
        name << "trial_" << std::setw(4) << std::setfill('0') << id << ".csv";
        std::ifstream ev(dir / name.str());
        if (!ev) throw Error("cannot open " + (dir / name.str()).string());
        t.events = parse_csv_events(ev, geometry);
        trials.push_back(std::move(t));
    }
    return trials;
}

std::vector<SpikeTrace> infer_all(const NetworkState& net, std::span<const TrialSegment> trials,
                                  const EncoderConfig& encoder, std::size_t workers) {
    std::vector<SpikeTrace> traces(trials.size());
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<std::size_t>(workers, std::max<std::size_t>(trials.size(), 1));
    const auto job = [&](std::size_t first) {
        for (std::size_t i = first; i < trials.size(); i += workers) {
            NetworkState copy = net;
            traces[i] = run_trial(copy, unlabeled(trials[i]), encoder, false);
        }
    };
    if (workers <= 1) {
        job(0);
        return traces;
    }
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(job, w);
    }
    return traces;
}

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return hex.str();
}

RunSummary run_experiment(const ExperimentConfig& cfg, const fs::path& out_dir) {
    RunSummary summary;
    const std::string config_text = render_config(cfg);
    std::vector<std::string> outputs;
    std::string stage = "validate";

    const auto write_manifest = [&] {
        nlohmann::ordered_json m;
        m["status"] = summary.complete ? "COMPLETE" : "INCOMPLETE";
        if (!summary.complete) {
            m["failed_stage"] = summary.failed_stage;
            m["error"] = summary.error;
        }
        m["config_sha256"] = sha256_hex(config_text);
        m["seeds"] = {{"network", cfg.network_seed}, {"training", cfg.training.seed}, {"eval", cfg.eval.seed}, {"data", cfg.data.synthetic_seed}};
        m["n_trials"] = summary.n_trials;
        m["simulated_us"] = summary.simulated_us;
        m["simulated_ms"] = static_cast<double>(summary.simulated_us) / 1000.0;
        m["outputs"] = outputs;
        m["config"] = config_text;
        auto out = open_out(out_dir / "manifest.json");
        out << m.dump(2) << '\n';
    };

    try {
        fs::create_directories(out_dir);
        cfg.validate();

        stage = "load_data";
        const auto trials = load_dataset(cfg.data);
        if (trials.empty()) throw Error("dataset is empty");
        summary.n_trials = trials.size();
        write_trial_index(trials, out_dir / "trials.csv");
        outputs.push_back("trials.csv");

        stage = "build_network";
        NetworkState net = build_network(cfg.topology(), cfg.neuron, cfg.plasticity, cfg.attention, cfg.network,
                                         cfg.network_seed);

        stage = "train";
        std::vector<UnlabeledTrial> inputs;
        inputs.reserve(trials.size());
        for (const auto& t : trials) inputs.push_back(unlabeled(t));
        if (cfg.plasticity.learning_enabled) {
            train_unsupervised(net, inputs, cfg.encoder, cfg.training.epochs, cfg.training.seed);
        }

        stage = "inference";
        const auto traces = infer_all(net, trials, cfg.encoder, cfg.eval.workers);
        {
            fs::create_directories(out_dir / "trace");
            SpikeTrace joined;
            Micros offset = 0;
            for (std::size_t i = 0; i < trials.size(); ++i) {
                for (auto r : traces[i].records) {
                    r.t += offset;
                    joined.records.push_back(r);
                }
                for (auto iv : traces[i].attention_intervals) {
                    joined.attention_intervals.push_back({iv.t_on + offset, iv.t_off + offset});
                }
                const Micros span = simulated_span(net, trials[i].duration(), cfg.encoder);
                summary.simulated_us += span;
                offset += span + cfg.encoder.sim_step;
            }
            auto spikes = open_out(out_dir / "trace" / "spikes.csv");
            auto intervals = open_out(out_dir / "trace" / "attention_intervals.csv");
            write_trace_csv(joined, spikes, intervals);
            outputs.push_back("trace/spikes.csv");
            outputs.push_back("trace/attention_intervals.csv");
        }

        for (const auto coding : cfg.eval.codings) {
            stage = std::string("decode_") + std::string(to_string(coding));
            std::vector<FeatureVector> features;
            for (std::size_t i = 0; i < trials.size(); ++i) {
                const Micros window = simulated_span(net, trials[i].duration(), cfg.encoder);
                FeatureVector f = decode(coding, traces[i].records, window, cfg.n_output);
                f.trial_id = i;
                f.label = trials[i].class_label;
                features.push_back(std::move(f));
            }
            const std::string feat_name = "features_" + std::string(to_string(coding)) + ".csv";
            {
                auto out = open_out(out_dir / feat_name);
                write_features_csv(features, out);
            }
            outputs.push_back(feat_name);

            stage = std::string("evaluate_") + std::string(to_string(coding));
            EvalReport report;
            std::vector<double> accuracies;
            for (std::size_t r = 0; r < cfg.eval.repeats; ++r) {
                const std::uint64_t seed = cfg.eval.seed + r;
                const auto split = split_stratified(features, cfg.eval.test_fraction, seed);
                MlpHyperparams hp = cfg.eval.mlp;
                hp.seed = seed;
                const auto model = train_mlp(split.train, hp);
                EvalReport rep = evaluate(model, split.test);
                rep.coding = coding;
                rep.seed = seed;
                rep.hyperparams = hp;
                rep.test_fraction = cfg.eval.test_fraction;
                accuracies.push_back(rep.accuracy);
                if (r == 0) report = rep;
            }
            if (accuracies.size() > 1) report.repeat_accuracies = accuracies;
            const std::string rep_name = "report_" + std::string(to_string(coding)) + ".json";
            {
                auto out = open_out(out_dir / rep_name);
                out << to_json(report);
            }
            outputs.push_back(rep_name);
            summary.reports.push_back(std::move(report));
        }
        summary.complete = true;
    } catch (const std::exception& e) {
        summary.failed_stage = stage;
        summary.error = e.what();
    }
    write_manifest();
    return summary;
}

RasterCounts split_raster(const fs::path& trace_csv, const fs::path& out_dir) {
    std::ifstream in(trace_csv);
    if (!in) throw Error("cannot open " + trace_csv.string());
    const auto records = read_trace_csv(in);
    std::vector<AttentionInterval> intervals;
    const fs::path companion = trace_csv.parent_path() / "attention_intervals.csv";
    if (fs::exists(companion)) {
        std::ifstream iv(companion);
        intervals = read_intervals_csv(iv);
    }

    fs::create_directories(out_dir);
    RasterCounts counts;
    auto att = open_out(out_dir / "attention.csv");
    auto mid = open_out(out_dir / "intermediate.csv");
    auto outl = open_out(out_dir / "output.csv");
    for (auto* s : {&att, &mid, &outl}) *s << "t_us,neuron_id\n";
    for (const auto& r : records) {
        switch (r.layer) {
            case Layer::Attention: att << r.t << ',' << r.neuron << '\n'; ++counts.attention; break;
            case Layer::Intermediate: mid << r.t << ',' << r.neuron << '\n'; ++counts.intermediate; break;
            case Layer::Output: outl << r.t << ',' << r.neuron << '\n'; ++counts.output; break;
        }
    }
    auto ivs = open_out(out_dir / "attention_intervals.csv");
    ivs << "t_on_us,t_off_us\n";
    for (const auto& iv : intervals) ivs << iv.t_on << ',' << iv.t_off << '\n';
    counts.intervals = intervals.size();
    return counts;
}

}  // namespace dvsattn
