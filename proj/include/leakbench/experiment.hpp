#pragma once

// Declarative experiment configuration and the command implementations
// behind the leakbench executable. Each command returns the files it wants
// written (relative name -> contents), which keeps the commands testable
// in-process and leaves atomic writing to the caller.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dataio.hpp"
#include "evaluate.hpp"
#include "features.hpp"
#include "signal/filter.hpp"
#include "synthexp.hpp"
#include "version.hpp"

namespace leakbench {

using Json = nlohmann::ordered_json;

struct PreprocessConfig {
    bool filter = true;
    double band_low_hz = 0.08;
    double band_high_hz = 4.0;
    int filter_order = 4;
    double trim_seconds = 150.0;
    double min_duration_seconds = 0.0;
};

enum class InputKind { Cohort, Records, Matrix };

struct InputConfig {
    InputKind kind = InputKind::Cohort;
    CohortSpec cohort;
    std::string path;        // records directory or matrix CSV, as written in the config
    std::string groups_path; // optional sample_id,gestation_recording_weeks CSV for matrix inputs
};

struct TuningConfig {
    std::vector<SamplerGrid> grids;
    std::size_t inner_folds = 3;
};

struct LeakageDemoConfig {
    LeakageOptions options;
    Toy2dOptions toy;
};

struct ExperimentConfig {
    std::uint64_t seed = 0;
    InputConfig input;
    PreprocessConfig preprocessing;
    std::vector<features::FeatureSpec> features = features::table1_presets();
    bool features_are_presets = true;
    PipelineSpec pipeline;
    TuningConfig tuning;
    std::size_t n_boot = 10000;
    LeakageDemoConfig leakage_demo;
    std::string output_dir = "out";
    /// Directory that relative input paths are resolved against.
    std::filesystem::path base_dir;
};

/// Output file name -> contents.
using OutputFiles = std::map<std::string, std::string>;

// ---------------------------------------------------------------------------
// Parsing

namespace config_detail {

inline void check_object(const Json& j, const std::string& where) {
    if (!j.is_object()) fail(ErrorKind::SchemaError, where + " must be an object");
}

inline void check_keys(const Json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
    check_object(j, where);
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || key == a;
        if (!ok) fail(ErrorKind::SchemaError, "unknown key '" + key + "' in " + where);
    }
}

inline double number(const Json& j, const std::string& where) {
    if (!j.is_number()) fail(ErrorKind::SchemaError, where + " must be a number");
    return j.get<double>();
}

inline std::uint64_t unsigned_int(const Json& j, const std::string& where) {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0))
        fail(ErrorKind::SchemaError, where + " must be a non-negative integer");
    return j.get<std::uint64_t>();
}

inline bool boolean(const Json& j, const std::string& where) {
    if (!j.is_boolean()) fail(ErrorKind::SchemaError, where + " must be true or false");
    return j.get<bool>();
}

inline std::string string(const Json& j, const std::string& where) {
    if (!j.is_string()) fail(ErrorKind::SchemaError, where + " must be a string");
    return j.get<std::string>();
}

template <typename T, typename Read>
void optional_field(const Json& obj, const char* key, T& target, Read read, const std::string& where) {
    if (auto it = obj.find(key); it != obj.end()) target = static_cast<T>(read(*it, where + "." + key));
}

inline std::map<std::string, double> number_map(const Json& j, const std::string& where) {
    check_object(j, where);
    std::map<std::string, double> out;
    for (const auto& [k, v] : j.items()) out[k] = number(v, where + "." + k);
    return out;
}

template <typename T, typename Read>
std::vector<T> list(const Json& j, Read read, const std::string& where) {
    if (!j.is_array() || j.empty()) fail(ErrorKind::SchemaError, where + " must be a non-empty array");
    std::vector<T> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(static_cast<T>(read(j[i], where + "[" + std::to_string(i) + "]")));
    return out;
}

inline ClassSignalParams parse_class_params(const Json& j, ClassSignalParams p, const std::string& where) {
    check_keys(j, {"burst_rate_per_minute", "burst_amplitude", "noise_std", "burst_freq_low_hz", "burst_freq_high_hz",
                   "burst_min_seconds", "burst_max_seconds"},
               where);
    optional_field(j, "burst_rate_per_minute", p.burst_rate_per_minute, number, where);
    optional_field(j, "burst_amplitude", p.burst_amplitude, number, where);
    optional_field(j, "noise_std", p.noise_std, number, where);
    optional_field(j, "burst_freq_low_hz", p.burst_freq_low_hz, number, where);
    optional_field(j, "burst_freq_high_hz", p.burst_freq_high_hz, number, where);
    optional_field(j, "burst_min_seconds", p.burst_min_seconds, number, where);
    optional_field(j, "burst_max_seconds", p.burst_max_seconds, number, where);
    return p;
}

inline CohortSpec parse_cohort(const Json& j, const std::string& where) {
    check_keys(j, {"n_records", "preterm_fraction", "duration_seconds", "sampling_rate", "early_fraction", "term", "preterm"},
               where);
    CohortSpec c;
    optional_field(j, "n_records", c.n_records, unsigned_int, where);
    optional_field(j, "preterm_fraction", c.preterm_fraction, number, where);
    optional_field(j, "duration_seconds", c.duration_seconds, number, where);
    optional_field(j, "sampling_rate", c.sampling_rate, number, where);
    optional_field(j, "early_fraction", c.early_fraction, number, where);
    if (j.contains("term")) c.term = parse_class_params(j["term"], c.term, where + ".term");
    if (j.contains("preterm")) c.preterm = parse_class_params(j["preterm"], c.preterm, where + ".preterm");
    return c;
}

inline SamplerConfig parse_sampler_config(const Json& j, const std::string& where) {
    check_keys(j, {"algorithm", "proportion", "k_neighbors", "n_clusters", "standardize"}, where);
    SamplerConfig s;
    if (j.contains("algorithm")) s.algorithm = parse_sampler(string(j["algorithm"], where + ".algorithm"));
    optional_field(j, "proportion", s.proportion, number, where);
    optional_field(j, "k_neighbors", s.k_neighbors, unsigned_int, where);
    optional_field(j, "n_clusters", s.n_clusters, unsigned_int, where);
    optional_field(j, "standardize", s.standardize, boolean, where);
    return s;
}

inline ClassifierSpec parse_classifier_spec(const Json& j, const std::string& where) {
    check_keys(j, {"kind", "params"}, where);
    ClassifierSpec c;
    if (j.contains("kind")) c.kind = parse_classifier(string(j["kind"], where + ".kind"));
    if (j.contains("params")) c.params = number_map(j["params"], where + ".params");
    validate(c);
    return c;
}

inline features::FeatureSpec parse_feature(const Json& j, const std::string& where) {
    check_keys(j, {"name", "channel", "emd_stage", "wpd_path", "params", "column"}, where);
    if (!j.contains("name")) fail(ErrorKind::SchemaError, where + ".name is required");
    features::FeatureSpec f;
    f.name = string(j["name"], where + ".name");
    optional_field(j, "channel", f.channel, unsigned_int, where);
    if (j.contains("emd_stage")) f.emd_stage = unsigned_int(j["emd_stage"], where + ".emd_stage");
    if (j.contains("wpd_path")) f.wpd_path = string(j["wpd_path"], where + ".wpd_path");
    if (j.contains("params")) f.params = number_map(j["params"], where + ".params");
    optional_field(j, "column", f.column, string, where);
    return features::resolve(f);
}

inline SamplerGrid parse_grid(const Json& j, const std::string& where) {
    check_keys(j, {"algorithm", "proportions", "k_neighbors", "n_clusters"}, where);
    SamplerGrid g;
    if (j.contains("algorithm")) g.algorithm = parse_sampler(string(j["algorithm"], where + ".algorithm"));
    if (j.contains("proportions")) g.proportions = list<double>(j["proportions"], number, where + ".proportions");
    if (j.contains("k_neighbors")) g.k_neighbors = list<std::size_t>(j["k_neighbors"], unsigned_int, where + ".k_neighbors");
    if (j.contains("n_clusters")) g.n_clusters = list<std::size_t>(j["n_clusters"], unsigned_int, where + ".n_clusters");
    return g;
}

} // namespace config_detail

/// Grids used by `search` when the config lists none.
inline std::vector<SamplerGrid> default_search_grids() {
    std::vector<SamplerGrid> grids;
    for (auto a : {SamplerAlgorithm::RandomDup, SamplerAlgorithm::SMOTE, SamplerAlgorithm::ADASYN, SamplerAlgorithm::ClusterSMOTE,
                   SamplerAlgorithm::SMOTETomek})
        grids.push_back({a, {0.5, 0.75, 1.0}, {3, 5, 7}, {}});
    return grids;
}

/// Parses and validates a JSON experiment document. Unknown keys anywhere
/// are rejected. `base_dir` anchors relative input paths.
inline ExperimentConfig parse_config(const std::string& document, const std::filesystem::path& base_dir = {}) {
    using namespace config_detail;
    Json j;
    try {
        j = Json::parse(document);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::SchemaError, std::string("config is not valid JSON: ") + e.what());
    }
    check_keys(j, {"seed", "input", "preprocessing", "features", "pipeline", "tuning", "ranking", "leakage_demo", "output"}, "config");
    ExperimentConfig c;
    c.base_dir = base_dir;
    optional_field(j, "seed", c.seed, unsigned_int, "config");

    if (j.contains("input")) {
        const auto& in = j["input"];
        check_keys(in, {"cohort", "records", "matrix", "groups"}, "input");
        const int kinds = int(in.contains("cohort")) + int(in.contains("records")) + int(in.contains("matrix"));
        if (kinds != 1) fail(ErrorKind::SchemaError, "input needs exactly one of cohort, records, matrix");
        if (in.contains("cohort")) {
            c.input.kind = InputKind::Cohort;
            c.input.cohort = parse_cohort(in["cohort"], "input.cohort");
        } else if (in.contains("records")) {
            c.input.kind = InputKind::Records;
            c.input.path = string(in["records"], "input.records");
        } else {
            c.input.kind = InputKind::Matrix;
            c.input.path = string(in["matrix"], "input.matrix");
        }
        if (in.contains("groups")) {
            if (c.input.kind != InputKind::Matrix) fail(ErrorKind::SchemaError, "input.groups only applies to matrix inputs");
            c.input.groups_path = string(in["groups"], "input.groups");
        }
    }

    if (j.contains("preprocessing")) {
        const auto& p = j["preprocessing"];
        check_keys(p, {"filter", "band_hz", "filter_order", "trim_seconds", "min_duration_seconds"}, "preprocessing");
        optional_field(p, "filter", c.preprocessing.filter, boolean, "preprocessing");
        if (p.contains("band_hz")) {
            const auto band = list<double>(p["band_hz"], number, "preprocessing.band_hz");
            if (band.size() != 2) fail(ErrorKind::SchemaError, "preprocessing.band_hz must be [low, high]");
            c.preprocessing.band_low_hz = band[0];
            c.preprocessing.band_high_hz = band[1];
        }
        optional_field(p, "filter_order", c.preprocessing.filter_order, unsigned_int, "preprocessing");
        optional_field(p, "trim_seconds", c.preprocessing.trim_seconds, number, "preprocessing");
        optional_field(p, "min_duration_seconds", c.preprocessing.min_duration_seconds, number, "preprocessing");
    }

    if (j.contains("features")) {
        const auto& f = j["features"];
        if (f.is_string()) {
            if (f.get<std::string>() != "table1_presets") fail(ErrorKind::SchemaError, "features must be a list or \"table1_presets\"");
        } else {
            c.features = list<features::FeatureSpec>(f, parse_feature, "features");
            c.features_are_presets = false;
        }
    }

    if (j.contains("pipeline")) {
        const auto& p = j["pipeline"];
        check_keys(p, {"sampler", "classifier", "placement", "n_folds", "standardize", "allow_leakage"}, "pipeline");
        if (p.contains("sampler")) c.pipeline.sampler = parse_sampler_config(p["sampler"], "pipeline.sampler");
        if (p.contains("classifier")) c.pipeline.classifier = parse_classifier_spec(p["classifier"], "pipeline.classifier");
        if (p.contains("placement")) c.pipeline.placement = parse_placement(string(p["placement"], "pipeline.placement"));
        optional_field(p, "n_folds", c.pipeline.n_folds, unsigned_int, "pipeline");
        optional_field(p, "standardize", c.pipeline.standardize, boolean, "pipeline");
        optional_field(p, "allow_leakage", c.pipeline.allow_leakage, boolean, "pipeline");
    }

    if (j.contains("tuning")) {
        const auto& t = j["tuning"];
        check_keys(t, {"grids", "inner_folds"}, "tuning");
        if (t.contains("grids")) c.tuning.grids = list<SamplerGrid>(t["grids"], parse_grid, "tuning.grids");
        optional_field(t, "inner_folds", c.tuning.inner_folds, unsigned_int, "tuning");
    }
    if (c.tuning.grids.empty()) c.tuning.grids = default_search_grids();

    if (j.contains("ranking")) {
        check_keys(j["ranking"], {"n_boot"}, "ranking");
        optional_field(j["ranking"], "n_boot", c.n_boot, unsigned_int, "ranking");
    }

    if (j.contains("leakage_demo")) {
        const auto& l = j["leakage_demo"];
        check_keys(l, {"n", "d", "pos_rate", "n_folds", "sampler", "classifier", "toy_n", "toy_n_pos"}, "leakage_demo");
        auto& o = c.leakage_demo.options;
        optional_field(l, "n", o.n, unsigned_int, "leakage_demo");
        optional_field(l, "d", o.d, unsigned_int, "leakage_demo");
        optional_field(l, "pos_rate", o.pos_rate, number, "leakage_demo");
        optional_field(l, "n_folds", o.n_folds, unsigned_int, "leakage_demo");
        if (l.contains("sampler")) o.sampler = parse_sampler_config(l["sampler"], "leakage_demo.sampler");
        if (l.contains("classifier")) o.classifier = parse_classifier_spec(l["classifier"], "leakage_demo.classifier");
        optional_field(l, "toy_n", c.leakage_demo.toy.n, unsigned_int, "leakage_demo");
        optional_field(l, "toy_n_pos", c.leakage_demo.toy.n_pos, unsigned_int, "leakage_demo");
        c.leakage_demo.toy.sampler = o.sampler;
    }

    if (j.contains("output")) {
        check_keys(j["output"], {"dir"}, "output");
        optional_field(j["output"], "dir", c.output_dir, string, "output");
    }

    // Range checks that do not depend on the data.
    if (c.pipeline.n_folds < 2) fail(ErrorKind::SchemaError, "pipeline.n_folds must be at least 2");
    if (c.tuning.inner_folds < 2) fail(ErrorKind::SchemaError, "tuning.inner_folds must be at least 2");
    if (c.n_boot == 0) fail(ErrorKind::SchemaError, "ranking.n_boot must be positive");
    if (c.preprocessing.trim_seconds < 0) fail(ErrorKind::SchemaError, "preprocessing.trim_seconds must be non-negative");
    if (c.input.kind == InputKind::Cohort) validate(c.input.cohort);
    return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    return parse_config(text::read_file(path), path.parent_path());
}

/// Applies the run seed to the component streams.
inline PipelineSpec seeded_pipeline(const ExperimentConfig& c) {
    PipelineSpec p = c.pipeline;
    p.seed = c.seed;
    p.sampler.seed = derive_seed(c.seed, {1});
    p.classifier.seed = derive_seed(c.seed, {2});
    return p;
}

// ---------------------------------------------------------------------------
// Serialization of the resolved configuration

namespace config_detail {

inline Json to_json(const ClassSignalParams& p) {
    return {{"burst_rate_per_minute", p.burst_rate_per_minute}, {"burst_amplitude", p.burst_amplitude},
            {"noise_std", p.noise_std}, {"burst_freq_low_hz", p.burst_freq_low_hz},
            {"burst_freq_high_hz", p.burst_freq_high_hz}, {"burst_min_seconds", p.burst_min_seconds},
            {"burst_max_seconds", p.burst_max_seconds}};
}

inline Json to_json(const SamplerConfig& s) {
    return {{"algorithm", std::string(sampler_name(s.algorithm))}, {"proportion", s.proportion},
            {"k_neighbors", s.k_neighbors}, {"n_clusters", s.n_clusters}, {"standardize", s.standardize}};
}

inline Json to_json(const ClassifierSpec& c) {
    Json params = Json::object();
    for (const auto& [k, v] : classifier_defaults(c.kind)) params[k] = c.param(k);
    return {{"kind", std::string(classifier_name(c.kind))}, {"params", params}};
}

inline Json to_json(const features::FeatureSpec& f) {
    Json j = {{"name", f.name}, {"channel", f.channel}};
    if (f.emd_stage) j["emd_stage"] = *f.emd_stage;
    if (f.wpd_path) j["wpd_path"] = *f.wpd_path;
    j["params"] = Json::object();
    for (const auto& [k, v] : f.params) j["params"][k] = v;
    j["column"] = features::column_name(f);
    return j;
}

inline Json to_json(const SamplerGrid& g) {
    Json j{{"algorithm", std::string(sampler_name(g.algorithm))}};
    if (!g.proportions.empty()) j["proportions"] = g.proportions;
    if (!g.k_neighbors.empty()) j["k_neighbors"] = g.k_neighbors;
    if (!g.n_clusters.empty()) j["n_clusters"] = g.n_clusters;
    return j;
}

} // namespace config_detail

/// The fully resolved configuration (defaults filled in). The output
/// directory is deliberately absent: where results land is not part of what
/// produced them, and including it would make identical runs differ.
inline Json config_to_json(const ExperimentConfig& c) {
    using config_detail::to_json;
    Json j;
    j["seed"] = c.seed;
    Json in;
    switch (c.input.kind) {
    case InputKind::Cohort:
        in["cohort"] = {{"n_records", c.input.cohort.n_records},
                        {"preterm_fraction", c.input.cohort.preterm_fraction},
                        {"duration_seconds", c.input.cohort.duration_seconds},
                        {"sampling_rate", c.input.cohort.sampling_rate},
                        {"early_fraction", c.input.cohort.early_fraction},
                        {"term", to_json(c.input.cohort.term)},
                        {"preterm", to_json(c.input.cohort.preterm)}};
        break;
    case InputKind::Records: in["records"] = c.input.path; break;
    case InputKind::Matrix:
        in["matrix"] = c.input.path;
        if (!c.input.groups_path.empty()) in["groups"] = c.input.groups_path;
        break;
    }
    j["input"] = in;
    j["preprocessing"] = {{"filter", c.preprocessing.filter},
                          {"band_hz", {c.preprocessing.band_low_hz, c.preprocessing.band_high_hz}},
                          {"filter_order", c.preprocessing.filter_order},
                          {"trim_seconds", c.preprocessing.trim_seconds},
                          {"min_duration_seconds", c.preprocessing.min_duration_seconds}};
    if (c.features_are_presets) {
        j["features"] = "table1_presets";
    } else {
        j["features"] = Json::array();
        for (const auto& f : c.features) j["features"].push_back(to_json(f));
    }
    j["pipeline"] = {{"sampler", to_json(c.pipeline.sampler)},
                     {"classifier", to_json(c.pipeline.classifier)},
                     {"placement", std::string(placement_name(c.pipeline.placement))},
                     {"n_folds", c.pipeline.n_folds},
                     {"standardize", c.pipeline.standardize},
                     {"allow_leakage", c.pipeline.allow_leakage}};
    Json grids = Json::array();
    for (const auto& g : c.tuning.grids) grids.push_back(to_json(g));
    j["tuning"] = {{"grids", grids}, {"inner_folds", c.tuning.inner_folds}};
    j["ranking"] = {{"n_boot", c.n_boot}};
    const auto& o = c.leakage_demo.options;
    j["leakage_demo"] = {{"n", o.n},
                         {"d", o.d},
                         {"pos_rate", o.pos_rate},
                         {"n_folds", o.n_folds},
                         {"sampler", to_json(o.sampler)},
                         {"classifier", to_json(o.classifier)},
                         {"toy_n", c.leakage_demo.toy.n},
                         {"toy_n_pos", c.leakage_demo.toy.n_pos}};
    return j;
}

/// Header block shared by every output: version, RNG and resolved config.
inline Json provenance_json(const ExperimentConfig& c, std::string_view command) {
    return {{"artifact", "leakbench"}, {"version", kVersion}, {"rng", kRngName}, {"command", command}, {"config", config_to_json(c)}};
}

inline std::vector<std::string> provenance_comments(const ExperimentConfig& c, std::string_view command) {
    return {"leakbench " + std::string(kVersion) + " " + std::string(command), std::string("rng ") + kRngName,
            "config " + config_to_json(c).dump()};
}

// ---------------------------------------------------------------------------
// Stages

/// Logging hook; commands report one line per stage.
using StageLog = std::function<void(const std::string&)>;

inline RecordSet acquire_records(const ExperimentConfig& c) {
    switch (c.input.kind) {
    case InputKind::Cohort: {
        CohortSpec spec = c.input.cohort;
        spec.seed = derive_seed(c.seed, {0x636f686f7274});
        return generate_synthetic_cohort(spec);
    }
    case InputKind::Records: return load_records(c.base_dir / c.input.path);
    case InputKind::Matrix: break;
    }
    fail(ErrorKind::SchemaError, "this command needs record input (cohort or records), not a feature matrix");
}

/// Band-pass (zero phase) on the full recording, then end trimming, then the
/// minimum-duration filter.
inline RecordSet preprocess(const RecordSet& set, const PreprocessConfig& p) {
    RecordSet out;
    out.provenance = set.provenance;
    out.records.resize(set.size());
    parallel_for(set.size(), [&](std::size_t i) {
        Record r = set.records[i];
        if (p.filter)
            for (auto& ch : r.channels) ch = signal::butterworth_bandpass(ch, r.sampling_rate, p.band_low_hz, p.band_high_hz, p.filter_order);
        out.records[i] = trim_record(r, p.trim_seconds);
    });
    return drop_short_records(out, p.min_duration_seconds);
}

struct PreparedMatrix {
    FeatureMatrix matrix;
    std::optional<features::ImputationReport> imputation;
    /// Recording age per row, when known.
    std::optional<std::vector<double>> gestation_at_recording;
};

inline std::vector<double> load_groups(const std::filesystem::path& path, const FeatureMatrix& m) {
    const auto contents = text::read_file(path);
    const auto lines = text::data_lines(contents);
    if (lines.empty() || text::split(lines[0]) != std::vector<std::string>{"sample_id", "gestation_recording_weeks"})
        fail(ErrorKind::MalformedHeader, "groups file header must be sample_id,gestation_recording_weeks");
    std::map<std::string, double> age;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = text::split(lines[i]);
        const auto v = f.size() == 2 ? text::parse_double(f[1]) : std::nullopt;
        if (!v) fail(ErrorKind::MalformedHeader, "bad groups row " + std::to_string(i));
        age[f[0]] = *v;
    }
    std::vector<double> out;
    for (const auto& id : m.sample_ids) {
        auto it = age.find(id);
        if (it == age.end()) fail(ErrorKind::MalformedHeader, "groups file lacks sample " + id);
        out.push_back(it->second);
    }
    return out;
}

inline PreparedMatrix prepare_matrix(const ExperimentConfig& c, const StageLog& log) {
    PreparedMatrix out;
    if (c.input.kind == InputKind::Matrix) {
        log("loading feature matrix " + c.input.path);
        out.matrix = load_feature_matrix(c.base_dir / c.input.path);
        if (!c.input.groups_path.empty()) out.gestation_at_recording = load_groups(c.base_dir / c.input.groups_path, out.matrix);
        return out;
    }
    log("acquiring records");
    const auto raw = acquire_records(c);
    log("preprocessing " + std::to_string(raw.size()) + " records");
    const auto records = preprocess(raw, c.preprocessing);
    log("extracting " + std::to_string(c.features.size()) + " features from " + std::to_string(records.size()) + " records");
    auto extracted = features::extract_feature_matrix(records, c.features);
    out.matrix = std::move(extracted.matrix);
    out.imputation = std::move(extracted.imputation);
    std::vector<double> ages;
    for (const auto& r : records.records) ages.push_back(r.gestation_at_recording);
    out.gestation_at_recording = std::move(ages);
    return out;
}

// ---------------------------------------------------------------------------
// Commands

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

inline OutputFiles cmd_synth(const ExperimentConfig& c, const StageLog& log, const std::filesystem::path& out_dir) {
    if (c.input.kind != InputKind::Cohort) fail(ErrorKind::SchemaError, "synth needs input.cohort");
    log("generating cohort");
    const auto set = acquire_records(c);
    log("writing " + std::to_string(set.size()) + " records");
    save_records(set, out_dir / "cohort", provenance_comments(c, "synth"));
    // The cohort directory is written directly; report a small summary file.
    Json summary = provenance_json(c, "synth");
    std::size_t preterm = 0, early = 0;
    for (const auto& r : set.records) {
        preterm += r.label == Label::Preterm;
        early += r.gestation_at_recording <= kEarlyRecordingWeeks;
    }
    summary["records"] = set.size();
    summary["preterm"] = preterm;
    summary["early"] = early;
    summary["samples_per_channel"] = set.empty() ? 0 : set.records.front().length();
    return {{"synth.json", dump(summary)}};
}

inline std::string imputation_csv(const FeatureMatrix& m, const features::ImputationReport& r,
                                  const std::vector<std::string>& comments) {
    std::string out;
    for (const auto& c : comments) out += "# " + c + "\n";
    out += "feature,imputed\n";
    for (std::size_t i = 0; i < m.n_cols(); ++i) out += m.feature_names[i] + "," + std::to_string(r.per_column[i]) + "\n";
    out += "total," + std::to_string(r.total) + "\n";
    return out;
}

inline std::string groups_csv(const FeatureMatrix& m, const std::vector<double>& ages, const std::vector<std::string>& comments) {
    std::string out;
    for (const auto& c : comments) out += "# " + c + "\n";
    out += "sample_id,gestation_recording_weeks\n";
    for (std::size_t i = 0; i < m.n_rows; ++i) out += m.sample_ids[i] + "," + text::format_double(ages[i]) + "\n";
    return out;
}

inline OutputFiles cmd_extract(const ExperimentConfig& c, const StageLog& log) {
    if (c.input.kind == InputKind::Matrix) fail(ErrorKind::SchemaError, "extract needs record input");
    const auto prepared = prepare_matrix(c, log);
    const auto comments = provenance_comments(c, "extract");
    return {{"features.csv", to_csv(prepared.matrix, comments)},
            {"imputation.csv", imputation_csv(prepared.matrix, *prepared.imputation, comments)},
            {"groups.csv", groups_csv(prepared.matrix, *prepared.gestation_at_recording, comments)}};
}

/// Ranking for one group. A group missing a class cannot be ranked; its rows
/// carry nan values in name order.
inline std::string group_ranking_csv(const FeatureMatrix& m, std::size_t n_boot, std::uint64_t seed,
                                     std::vector<std::string> comments) {
    if (m.minority_count() == 0 || m.majority_count() == 0) {
        comments.push_back("group has a single class (" + std::to_string(m.n_rows) + " samples); AUC undefined");
        std::vector<FeatureRank> ranks;
        const double nan = std::numeric_limits<double>::quiet_NaN();
        for (const auto& name : m.feature_names) ranks.push_back({name, nan, nan, nan});
        std::sort(ranks.begin(), ranks.end(), [](const auto& a, const auto& b) { return a.feature < b.feature; });
        return ranking_csv(ranks, comments);
    }
    comments.push_back("samples " + std::to_string(m.n_rows) + " (positive " + std::to_string(m.minority_count()) + ")");
    return ranking_csv(rank_features(m, n_boot, seed), comments);
}

inline OutputFiles cmd_rank(const ExperimentConfig& c, const StageLog& log) {
    const auto prepared = prepare_matrix(c, log);
    const auto comments = provenance_comments(c, "rank");
    const auto seed = derive_seed(c.seed, {0x72616e6b});
    OutputFiles files;
    log("ranking all samples");
    files["ranking_all.csv"] = group_ranking_csv(prepared.matrix, c.n_boot, seed, comments);
    if (!prepared.gestation_at_recording) {
        log("no recording ages available; early/late rankings skipped");
        return files;
    }
    std::vector<std::size_t> early, late;
    for (std::size_t i = 0; i < prepared.matrix.n_rows; ++i)
        ((*prepared.gestation_at_recording)[i] <= kEarlyRecordingWeeks ? early : late).push_back(i);
    log("ranking early recordings");
    files["ranking_early.csv"] = group_ranking_csv(prepared.matrix.subset(early), c.n_boot, seed, comments);
    log("ranking late recordings");
    files["ranking_late.csv"] = group_ranking_csv(prepared.matrix.subset(late), c.n_boot, seed, comments);
    return files;
}

inline Json metrics_json(const MetricsReport& r) {
    Json folds = Json::array();
    for (const auto& f : r.per_fold) {
        folds.push_back({{"auc", f.auc},
                         {"accuracy", f.accuracy},
                         {"sensitivity", f.sensitivity},
                         {"specificity", f.specificity},
                         {"train_counts", {{"negative", f.train_counts.negative}, {"positive", f.train_counts.positive}}},
                         {"test_counts", {{"negative", f.test_counts.negative}, {"positive", f.test_counts.positive}}},
                         {"synthetic_in_train", f.synthetic_in_train},
                         {"synthetic_in_test", f.synthetic_in_test},
                         {"warnings", f.warnings}});
    }
    Json agg;
    for (const auto& [name, s] : r.aggregate) agg[name] = {{"mean", s.mean}, {"std", s.std}};
    return {{"placement", std::string(placement_name(r.spec.placement))},
            {"sampler", config_detail::to_json(r.spec.sampler)},
            {"classifier", config_detail::to_json(r.spec.classifier)},
            {"n_folds", r.spec.n_folds},
            {"per_fold", folds},
            {"aggregate", agg}};
}

inline OutputFiles cmd_run(const ExperimentConfig& c, const StageLog& log) {
    const auto spec = seeded_pipeline(c);
    validate(spec); // refuse before any extraction work
    const auto prepared = prepare_matrix(c, log);
    log("running " + std::to_string(spec.n_folds) + "-fold pipeline, placement " + std::string(placement_name(spec.placement)));
    const auto report = run_pipeline(prepared.matrix, spec);
    log("wall time " + text::format_fixed(report.wall_time_seconds, 3) + " s");
    Json j = provenance_json(c, "run");
    j["metrics"] = metrics_json(report);
    if (prepared.imputation) j["imputed_values"] = prepared.imputation->total;
    const auto comments = provenance_comments(c, "run");
    return {{"metrics.json", dump(j)}, {"metrics.txt", to_text(report)}, {"roc.csv", roc_csv(report, comments)}};
}

inline OutputFiles cmd_leakage_demo(const ExperimentConfig& c, const StageLog& log) {
    log("uniform-noise leakage experiment, n=" + std::to_string(c.leakage_demo.options.n));
    const auto r = uniform_leakage_experiment(c.leakage_demo.options, c.seed);
    log("toy 2-d geometry");
    const auto toy = toy2d_figure_data(c.leakage_demo.toy, c.seed);
    Json j = provenance_json(c, "leakage-demo");
    j["result"] = {{"auc_none", r.auc_none},
                   {"auc_before", r.auc_before},
                   {"auc_after", r.auc_after},
                   {"n", r.n},
                   {"d", r.d},
                   {"pos_rate", r.pos_rate},
                   {"seed", r.seed},
                   {"n_folds", r.n_folds},
                   {"sampler", config_detail::to_json(r.sampler)},
                   {"classifier", config_detail::to_json(r.classifier)}};
    j["toy2d"] = {{"synthetic_before", toy.synthetic_before}, {"synthetic_after", toy.synthetic_after}};
    return {{"leakage.json", dump(j)}, {"toy2d.csv", toy2d_csv(toy, provenance_comments(c, "leakage-demo"))}};
}

/// None / Default / Tuned / Best comparison for the configured classifier.
/// None and Default are plain k-fold pipelines (no sampler; the configured
/// sampler after the split); Tuned and Best come from nested sampler search.
inline OutputFiles cmd_search(const ExperimentConfig& c, const StageLog& log) {
    auto spec = seeded_pipeline(c);
    spec.placement = Placement::AfterSplit;
    spec.allow_leakage = false;
    const auto prepared = prepare_matrix(c, log);
    const auto& m = prepared.matrix;

    std::vector<SamplerConfig> candidates;
    for (const auto& g : c.tuning.grids)
        for (auto cfg : expand_grid(g)) {
            cfg.standardize = spec.sampler.standardize;
            cfg.seed = spec.sampler.seed;
            candidates.push_back(cfg);
        }
    SearchOptions options;
    options.n_folds = spec.n_folds;
    options.inner_folds = c.tuning.inner_folds;
    options.standardize = spec.standardize;
    options.base_algorithm = spec.sampler.algorithm;
    const auto search_seed = derive_seed(c.seed, {0x7365617263});
    bool has_same = false;
    for (const auto& cand : candidates) has_same = has_same || cand.algorithm == spec.sampler.algorithm;
    if (!has_same) fail(ErrorKind::SchemaError, "tuning.grids has no grid for the pipeline sampler algorithm");

    log("baseline without over-sampling");
    auto none_spec = spec;
    none_spec.placement = Placement::None;
    const auto none = run_pipeline(m, none_spec);
    log("default sampler after split");
    const auto deflt = run_pipeline(m, spec);
    log("tuning " + std::string(sampler_name(spec.sampler.algorithm)));
    const auto tuned = sampler_search(m, spec.classifier, candidates, SearchMode::TunedSame, search_seed, options);
    log("selecting best over " + std::to_string(candidates.size()) + " candidates");
    const auto best = sampler_search(m, spec.classifier, candidates, SearchMode::BestOverall, search_seed, options);

    auto search_json = [](const SearchResult& s) {
        Json cands = Json::array();
        for (const auto& cand : s.candidates)
            cands.push_back({{"sampler", config_detail::to_json(cand.config)}, {"inner_auc", cand.inner_auc}, {"outer_auc", cand.outer_auc}});
        return Json{{"best_index", s.best_index},
                    {"best_sampler", config_detail::to_json(s.best_config)},
                    {"outer_auc", s.best_outer_auc},
                    {"candidates", cands}};
    };
    Json j = provenance_json(c, "search");
    j["classifier"] = config_detail::to_json(spec.classifier);
    j["none"] = {{"auc", none.aggregate.at("auc").mean}, {"auc_std", none.aggregate.at("auc").std}};
    j["default"] = {{"sampler", config_detail::to_json(spec.sampler)},
                    {"auc", deflt.aggregate.at("auc").mean},
                    {"auc_std", deflt.aggregate.at("auc").std}};
    j["tuned"] = search_json(tuned);
    j["best"] = search_json(best);

    const auto comments = provenance_comments(c, "search");
    std::string table;
    for (const auto& line : comments) table += "# " + line + "\n";
    table += "classifier,sampler,none,default,tuned,best,tuned_sampler,best_sampler\n";
    auto describe = [](const SamplerConfig& s) {
        return std::string(sampler_name(s.algorithm)) + " p=" + text::format_double(s.proportion) +
               " k=" + std::to_string(s.k_neighbors) +
               (s.algorithm == SamplerAlgorithm::ClusterSMOTE ? " clusters=" + std::to_string(s.n_clusters) : "");
    };
    table += std::string(classifier_name(spec.classifier.kind)) + "," + std::string(sampler_name(spec.sampler.algorithm)) + "," +
             text::format_fixed(none.aggregate.at("auc").mean, 4) + "," + text::format_fixed(deflt.aggregate.at("auc").mean, 4) +
             "," + text::format_fixed(tuned.best_outer_auc, 4) + "," + text::format_fixed(best.best_outer_auc, 4) + "," +
             describe(tuned.best_config) + "," + describe(best.best_config) + "\n";
    return {{"search.json", dump(j)}, {"search.csv", table}};
}

/// Maps an error to the executable's exit status: 1 for input, schema and
/// I/O problems, 2 for the leakage guard, 3 for computational failures.
inline int exit_code_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::LeakageNotAcknowledged: return 2;
    case ErrorKind::IoFailure:
    case ErrorKind::SchemaError:
    case ErrorKind::InvalidSpec:
    case ErrorKind::MalformedHeader:
    case ErrorKind::ChannelLengthMismatch:
    case ErrorKind::NonFiniteSample:
    case ErrorKind::LabelInconsistency:
    case ErrorKind::UnknownFeature:
    case ErrorKind::UnknownWavelet:
    case ErrorKind::InvalidBand: return 1;
    default: return 3;
    }
}

} // namespace leakbench
