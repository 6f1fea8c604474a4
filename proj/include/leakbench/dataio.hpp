#pragma once

// Record model, csv_v1 interchange, preprocessing, and the synthetic cohort
// generator.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numbers>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "text.hpp"

namespace leakbench {

/// Deliveries strictly before this gestational age are preterm.
inline constexpr double kPretermWeeks = 37.0;
/// Recordings at or before this gestational age are "early".
inline constexpr double kEarlyRecordingWeeks = 26.0;

enum class Label { Term, Preterm };

inline constexpr Label label_for_delivery(double gestation_at_delivery) {
    return gestation_at_delivery < kPretermWeeks ? Label::Preterm : Label::Term;
}

inline std::string_view label_name(Label label) { return label == Label::Preterm ? "Preterm" : "Term"; }

using Signal = std::vector<double>;

struct Record {
    std::string id;
    std::array<Signal, 3> channels;
    double sampling_rate = 20.0;
    double gestation_at_recording = 0.0;
    double gestation_at_delivery = 0.0;
    Label label = Label::Term;
    std::map<std::string, double> covariates;

    std::size_t length() const { return channels[0].size(); }
    double duration_seconds() const { return static_cast<double>(length()) / sampling_rate; }
    bool operator==(const Record&) const = default;
};

/// Throws on any violated Record invariant.
inline void validate(const Record& r) {
    if (r.channels[1].size() != r.channels[0].size() || r.channels[2].size() != r.channels[0].size())
        fail(ErrorKind::ChannelLengthMismatch,
             "record " + r.id + ": channel lengths " + std::to_string(r.channels[0].size()) + "/" +
                 std::to_string(r.channels[1].size()) + "/" + std::to_string(r.channels[2].size()));
    if (!(r.sampling_rate > 0.0) || !std::isfinite(r.sampling_rate))
        fail(ErrorKind::InvalidSpec, "record " + r.id + ": sampling rate must be positive");
    if (!(r.gestation_at_recording > 0.0) || !(r.gestation_at_delivery > 0.0))
        fail(ErrorKind::InvalidSpec, "record " + r.id + ": gestational ages must be positive");
    if (r.gestation_at_recording > r.gestation_at_delivery)
        fail(ErrorKind::InvalidSpec, "record " + r.id + ": recorded after delivery");
    if (label_for_delivery(r.gestation_at_delivery) != r.label)
        fail(ErrorKind::LabelInconsistency, "record " + r.id + ": label " + std::string(label_name(r.label)) +
                                                " contradicts delivery at " +
                                                text::format_double(r.gestation_at_delivery) + " weeks");
    for (const auto& ch : r.channels)
        for (double v : ch)
            if (!std::isfinite(v)) fail(ErrorKind::NonFiniteSample, "record " + r.id + " contains a non-finite sample");
}

enum class Provenance { Synthetic, Imported };

struct RecordSet {
    std::vector<Record> records;
    Provenance provenance = Provenance::Synthetic;

    std::size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }
    bool operator==(const RecordSet&) const = default;
};

inline void validate(const RecordSet& set) {
    std::set<std::string> seen;
    for (const auto& r : set.records) {
        if (!seen.insert(r.id).second) fail(ErrorKind::InvalidSpec, "duplicate record id " + r.id);
        validate(r);
    }
}

// ---------------------------------------------------------------------------
// csv_v1 interchange

namespace csv_v1 {
inline constexpr std::array<const char*, 8> kRequiredColumns = {
    "id", "channel1_file", "channel2_file", "channel3_file", "sampling_rate_hz",
    "gestation_recording_weeks", "gestation_delivery_weeks", "label"};
}

namespace detail {

inline Signal read_channel_file(const std::filesystem::path& path, const std::string& record_id) {
    const auto contents = text::read_file(path);
    Signal samples;
    for (auto line : text::data_lines(contents)) {
        auto value = text::parse_double(line);
        if (!value) fail(ErrorKind::MalformedHeader, "unparseable sample '" + std::string(line) + "' in " + path.string());
        if (!std::isfinite(*value))
            fail(ErrorKind::NonFiniteSample, "record " + record_id + ": non-finite sample in " + path.string());
        samples.push_back(*value);
    }
    return samples;
}

inline double require_number(const std::string& field, const std::string& column, const std::string& id) {
    auto value = text::parse_double(field);
    if (!value || !std::isfinite(*value))
        fail(ErrorKind::MalformedHeader, "record " + id + ": column " + column + " is not a finite number");
    return *value;
}

} // namespace detail

/// Reads a csv_v1 directory (manifest.csv plus per-channel sample files).
inline RecordSet load_records(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.csv";
    if (!std::filesystem::exists(manifest_path)) fail(ErrorKind::IoFailure, "missing " + manifest_path.string());
    const auto contents = text::read_file(manifest_path);
    const auto lines = text::data_lines(contents);
    if (lines.empty()) fail(ErrorKind::MalformedHeader, "manifest has no header row");

    const auto header = text::split(lines[0]);
    std::map<std::string, std::size_t> column;
    for (std::size_t i = 0; i < header.size(); ++i) column[header[i]] = i;
    for (const char* required : csv_v1::kRequiredColumns)
        if (!column.count(required)) fail(ErrorKind::MalformedHeader, std::string("manifest lacks column ") + required);
    std::set<std::string> required_set(csv_v1::kRequiredColumns.begin(), csv_v1::kRequiredColumns.end());

    RecordSet set;
    set.provenance = Provenance::Imported;
    for (std::size_t row = 1; row < lines.size(); ++row) {
        const auto fields = text::split(lines[row]);
        if (fields.size() != header.size())
            fail(ErrorKind::MalformedHeader, "manifest row " + std::to_string(row) + " has " +
                                                 std::to_string(fields.size()) + " fields, expected " +
                                                 std::to_string(header.size()));
        auto at = [&](const char* name) -> const std::string& { return fields[column.at(name)]; };
        Record r;
        r.id = at("id");
        if (r.id.empty()) fail(ErrorKind::MalformedHeader, "empty id in manifest row " + std::to_string(row));
        r.sampling_rate = detail::require_number(at("sampling_rate_hz"), "sampling_rate_hz", r.id);
        r.gestation_at_recording = detail::require_number(at("gestation_recording_weeks"), "gestation_recording_weeks", r.id);
        r.gestation_at_delivery = detail::require_number(at("gestation_delivery_weeks"), "gestation_delivery_weeks", r.id);
        const auto& label = at("label");
        if (label == "Preterm")
            r.label = Label::Preterm;
        else if (label == "Term")
            r.label = Label::Term;
        else
            fail(ErrorKind::MalformedHeader, "record " + r.id + ": unknown label '" + label + "'");
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (required_set.count(header[i]) || fields[i].empty()) continue;
            r.covariates[header[i]] = detail::require_number(fields[i], header[i], r.id);
        }
        const std::array<const char*, 3> channel_columns = {"channel1_file", "channel2_file", "channel3_file"};
        for (std::size_t c = 0; c < 3; ++c) r.channels[c] = detail::read_channel_file(dir / at(channel_columns[c]), r.id);
        validate(r);
        set.records.push_back(std::move(r));
    }
    validate(set);
    return set;
}

/// Writes `set` as csv_v1 into `dir` (created if needed). Samples use the
/// shortest round-trip decimal form, so load_records reproduces them exactly.
inline void save_records(const RecordSet& set, const std::filesystem::path& dir,
                         const std::vector<std::string>& header_comments = {}) {
    validate(set);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) fail(ErrorKind::IoFailure, "cannot create directory " + dir.string());

    std::set<std::string> covariate_names;
    for (const auto& r : set.records) {
        if (r.id.find_first_of(",\n/\\") != std::string::npos)
            fail(ErrorKind::InvalidSpec, "record id '" + r.id + "' is not representable in csv_v1");
        for (const auto& [name, _] : r.covariates) covariate_names.insert(name);
    }

    std::string manifest;
    for (const auto& comment : header_comments) manifest += "# " + comment + "\n";
    for (std::size_t i = 0; i < csv_v1::kRequiredColumns.size(); ++i) {
        if (i) manifest += ',';
        manifest += csv_v1::kRequiredColumns[i];
    }
    for (const auto& name : covariate_names) manifest += "," + name;
    manifest += '\n';

    for (const auto& r : set.records) {
        std::array<std::string, 3> files;
        for (std::size_t c = 0; c < 3; ++c) {
            files[c] = r.id + "_ch" + std::to_string(c + 1) + ".csv";
            std::string body;
            body.reserve(r.channels[c].size() * 20);
            for (double v : r.channels[c]) {
                body += text::format_double(v);
                body += '\n';
            }
            text::write_file_atomic(dir / files[c], body);
        }
        manifest += r.id + "," + files[0] + "," + files[1] + "," + files[2] + "," + text::format_double(r.sampling_rate) +
                    "," + text::format_double(r.gestation_at_recording) + "," +
                    text::format_double(r.gestation_at_delivery) + "," + std::string(label_name(r.label));
        for (const auto& name : covariate_names) {
            manifest += ',';
            if (auto it = r.covariates.find(name); it != r.covariates.end()) manifest += text::format_double(it->second);
        }
        manifest += '\n';
    }
    text::write_file_atomic(dir / "manifest.csv", manifest);
}

// ---------------------------------------------------------------------------
// Synthetic cohort

/// Generative parameters for one class. Bursts are Hann-windowed sinusoids
/// (contraction-like events) arriving as a Poisson process.
struct ClassSignalParams {
    double burst_rate_per_minute = 1.0;
    double burst_amplitude = 1.0;
    double noise_std = 0.5;
    double burst_freq_low_hz = 0.3;
    double burst_freq_high_hz = 1.0;
    double burst_min_seconds = 30.0;
    double burst_max_seconds = 90.0;
};

struct CohortSpec {
    std::size_t n_records = 298;
    double preterm_fraction = 38.0 / 298.0;
    double duration_seconds = 1800.0;
    double sampling_rate = 20.0;
    double early_fraction = 0.5;
    ClassSignalParams term{1.0, 1.0, 0.5};
    ClassSignalParams preterm{1.6, 1.4, 0.5};
    std::uint64_t seed = 0;

    std::size_t sample_count() const {
        return static_cast<std::size_t>(std::llround(duration_seconds * sampling_rate));
    }
};

inline void validate(const CohortSpec& spec) {
    if (spec.n_records < 2) fail(ErrorKind::InvalidSpec, "n_records must be >= 2");
    if (!(spec.preterm_fraction > 0.0 && spec.preterm_fraction < 1.0))
        fail(ErrorKind::InvalidSpec, "preterm_fraction must lie in (0, 1)");
    if (!(spec.early_fraction >= 0.0 && spec.early_fraction <= 1.0))
        fail(ErrorKind::InvalidSpec, "early_fraction must lie in [0, 1]");
    if (!(spec.sampling_rate > 0.0) || !(spec.duration_seconds > 0.0))
        fail(ErrorKind::InvalidSpec, "duration and sampling rate must be positive");
    const double samples = spec.duration_seconds * spec.sampling_rate;
    if (std::abs(samples - std::round(samples)) > 1e-9 * std::max(1.0, samples))
        fail(ErrorKind::InvalidSpec, "duration_seconds * sampling_rate must be an integer");
    for (const auto* p : {&spec.term, &spec.preterm}) {
        if (p->burst_rate_per_minute < 0.0 || p->burst_amplitude < 0.0 || p->noise_std < 0.0)
            fail(ErrorKind::InvalidSpec, "signal parameters must be non-negative");
        if (!(p->burst_freq_low_hz > 0.0 && p->burst_freq_low_hz <= p->burst_freq_high_hz &&
              p->burst_freq_high_hz < spec.sampling_rate / 2.0))
            fail(ErrorKind::InvalidSpec, "burst frequency band must lie in (0, fs/2)");
        if (!(p->burst_min_seconds > 0.0 && p->burst_min_seconds <= p->burst_max_seconds))
            fail(ErrorKind::InvalidSpec, "burst durations must be positive and ordered");
    }
}

namespace detail {

/// Picks exactly `count` of `n` indices, uniformly at random.
inline std::vector<bool> choose_subset(std::size_t n, std::size_t count, Rng& rng) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<bool> chosen(n, false);
    for (std::size_t i = 0; i < count && i < n; ++i) chosen[order[i]] = true;
    return chosen;
}

inline Record synthesize_record(const CohortSpec& spec, std::size_t index, bool preterm, bool early) {
    Rng rng(derive_seed(spec.seed, {0x7265636fULL, index}));
    const auto& params = preterm ? spec.preterm : spec.term;
    const std::size_t n = spec.sample_count();
    const double fs = spec.sampling_rate;

    Record r;
    char id[32];
    std::snprintf(id, sizeof(id), "rec%04zu", index + 1);
    r.id = id;
    r.sampling_rate = fs;

    r.gestation_at_recording = early ? std::clamp(rng.normal(23.11, 0.77), 20.0, kEarlyRecordingWeeks)
                                     : std::clamp(rng.normal(31.09, 1.05), 26.05, 35.5);
    if (preterm) {
        const double lo = std::max(r.gestation_at_recording + 0.5, 28.0);
        r.gestation_at_delivery = std::min(rng.uniform(lo, kPretermWeeks), std::nextafter(kPretermWeeks, 0.0));
    } else {
        r.gestation_at_delivery = rng.uniform(kPretermWeeks, 42.0);
    }
    r.label = preterm ? Label::Preterm : Label::Term;
    r.covariates["maternal_age"] = std::clamp(rng.normal(29.5, 5.0), 16.0, 45.0);
    r.covariates["maternal_weight"] = std::clamp(rng.normal(68.0, 12.0), 40.0, 130.0);
    r.covariates["prior_abortion"] = rng.uniform() < 0.25 ? 1.0 : 0.0;

    // Shared contraction events, seen by every channel with its own gain.
    Signal events(n, 0.0);
    const double rate_per_second = params.burst_rate_per_minute / 60.0;
    if (rate_per_second > 0.0) {
        double t = -std::log(1.0 - rng.uniform()) / rate_per_second;
        const double duration = static_cast<double>(n) / fs;
        while (t < duration) {
            const double length = rng.uniform(params.burst_min_seconds, params.burst_max_seconds);
            const double freq = rng.uniform(params.burst_freq_low_hz, params.burst_freq_high_hz);
            const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
            const double amp = params.burst_amplitude * rng.uniform(0.7, 1.3);
            const auto first = static_cast<std::size_t>(t * fs);
            const auto count = static_cast<std::size_t>(length * fs);
            for (std::size_t j = 0; j < count && first + j < n; ++j) {
                const double u = static_cast<double>(j) / static_cast<double>(count);
                const double window = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * u);
                events[first + j] += amp * window * std::sin(2.0 * std::numbers::pi * freq * j / fs + phase);
            }
            t += length + (-std::log(1.0 - rng.uniform()) / rate_per_second);
        }
    }
    for (auto& channel : r.channels) {
        const double gain = rng.uniform(0.6, 1.2);
        const double offset = rng.uniform(-1.0, 1.0);
        channel.resize(n);
        for (std::size_t j = 0; j < n; ++j) channel[j] = offset + gain * events[j] + rng.normal(0.0, params.noise_std);
    }
    return r;
}

} // namespace detail

/// Deterministic given spec.seed; each record draws from its own stream keyed
/// by (seed, record index), so generation order does not matter.
inline RecordSet generate_synthetic_cohort(const CohortSpec& spec) {
    validate(spec);
    const auto n_preterm =
        static_cast<std::size_t>(std::llround(static_cast<double>(spec.n_records) * spec.preterm_fraction));
    const auto n_early =
        static_cast<std::size_t>(std::llround(static_cast<double>(spec.n_records) * spec.early_fraction));
    Rng label_rng(derive_seed(spec.seed, {0x6c61626cULL}));
    Rng early_rng(derive_seed(spec.seed, {0x6561726cULL}));
    const auto preterm = detail::choose_subset(spec.n_records, n_preterm, label_rng);
    const auto early = detail::choose_subset(spec.n_records, n_early, early_rng);

    RecordSet set;
    set.provenance = Provenance::Synthetic;
    set.records.resize(spec.n_records);
    parallel_for(spec.n_records, [&](std::size_t i) {
        set.records[i] = detail::synthesize_record(spec, i, preterm[i], early[i]);
    });
    return set;
}

// ---------------------------------------------------------------------------
// Preprocessing

/// Drops trim_seconds of samples from both ends of every channel.
inline Record trim_record(const Record& r, double trim_seconds = 150.0) {
    if (trim_seconds < 0.0) fail(ErrorKind::InvalidSpec, "trim_seconds must be non-negative");
    const auto cut = static_cast<std::size_t>(std::llround(trim_seconds * r.sampling_rate));
    if (cut == 0) return r;
    if (r.length() <= 2 * cut)
        fail(ErrorKind::RecordTooShort, "record " + r.id + " has " + std::to_string(r.length()) +
                                            " samples, cannot trim " + std::to_string(cut) + " from each end");
    Record out = r;
    for (auto& ch : out.channels) ch = Signal(ch.begin() + static_cast<std::ptrdiff_t>(cut), ch.end() - static_cast<std::ptrdiff_t>(cut));
    return out;
}

inline RecordSet drop_short_records(const RecordSet& set, double min_duration_seconds) {
    RecordSet out;
    out.provenance = set.provenance;
    for (const auto& r : set.records)
        if (r.duration_seconds() >= min_duration_seconds) out.records.push_back(r);
    return out;
}

/// Returns (early, late); a recording at exactly 26.0 weeks is early.
inline std::pair<RecordSet, RecordSet> split_early_late(const RecordSet& set) {
    std::pair<RecordSet, RecordSet> out;
    out.first.provenance = out.second.provenance = set.provenance;
    for (const auto& r : set.records)
        (r.gestation_at_recording <= kEarlyRecordingWeeks ? out.first : out.second).records.push_back(r);
    return out;
}

} // namespace leakbench
