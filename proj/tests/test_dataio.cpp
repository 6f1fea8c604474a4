#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <functional>

#include "leakbench/dataio.hpp"

using namespace leakbench;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::path(LEAKBENCH_TEST_TMP) / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

Record simple_record(const std::string& id, std::size_t n, double delivery) {
    Record r;
    r.id = id;
    r.sampling_rate = 20.0;
    r.gestation_at_recording = 25.0;
    r.gestation_at_delivery = delivery;
    r.label = label_for_delivery(delivery);
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < n; ++i) r.channels[c].push_back(0.1 * static_cast<double>(i) + static_cast<double>(c) / 3.0);
    return r;
}

void write(const fs::path& path, const std::string& contents) {
    std::ofstream(path) << contents;
}

void expect_error(ErrorKind kind, const std::function<void()>& body) {
    try {
        body();
        ADD_FAILURE() << "expected " << error_name(kind);
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), kind) << e.what();
    }
}

} // namespace

TEST(Labels, ThirtySevenWeekRule) {
    EXPECT_EQ(label_for_delivery(36.99), Label::Preterm);
    EXPECT_EQ(label_for_delivery(37.0), Label::Term);
}

TEST(SaveLoad, RoundTripIsBitExact) {
    CohortSpec spec;
    spec.n_records = 6;
    spec.preterm_fraction = 0.5;
    spec.duration_seconds = 30;
    spec.seed = 3;
    const auto set = generate_synthetic_cohort(spec);
    const auto dir = fresh_dir("roundtrip");
    save_records(set, dir, {"test cohort"});
    auto loaded = load_records(dir);
    EXPECT_EQ(loaded.provenance, Provenance::Imported);
    loaded.provenance = set.provenance;
    EXPECT_EQ(loaded, set);
}

TEST(SaveLoad, OneRecordWritesManifestAndThreeChannelFiles) {
    RecordSet set;
    set.records.push_back(simple_record("a", 10, 39.0));
    const auto dir = fresh_dir("one_record");
    save_records(set, dir);
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(dir)) files += entry.is_regular_file();
    EXPECT_EQ(files, 4u);
    EXPECT_TRUE(fs::exists(dir / "manifest.csv"));
    EXPECT_TRUE(fs::exists(dir / "a_ch3.csv"));
}

TEST(SaveLoad, TwoRecordManifestLoadsInOrder) {
    RecordSet set;
    set.records.push_back(simple_record("z", 12, 39.0));
    set.records.push_back(simple_record("b", 12, 33.0));
    const auto dir = fresh_dir("two_records");
    save_records(set, dir);
    const auto loaded = load_records(dir);
    ASSERT_EQ(loaded.size(), 2u);
    EXPECT_EQ(loaded.records[0].id, "z");
    EXPECT_EQ(loaded.records[1].label, Label::Preterm);
}

TEST(SaveLoad, UnwritablePathFails) {
    RecordSet set;
    set.records.push_back(simple_record("a", 10, 39.0));
    const auto blocker = fresh_dir("blocker") / "file";
    write(blocker, "x");
    expect_error(ErrorKind::IoFailure, [&] { save_records(set, blocker / "sub"); });
}

TEST(Load, ChannelLengthMismatch) {
    RecordSet set;
    set.records.push_back(simple_record("a", 100, 39.0));
    const auto dir = fresh_dir("mismatch");
    save_records(set, dir);
    std::string shorter;
    for (int i = 0; i < 99; ++i) shorter += "1\n";
    write(dir / "a_ch3.csv", shorter);
    expect_error(ErrorKind::ChannelLengthMismatch, [&] { load_records(dir); });
}

TEST(Load, LabelInconsistency) {
    const auto dir = fresh_dir("label");
    write(dir / "c.csv", "1\n2\n3\n");
    write(dir / "manifest.csv",
          "id,channel1_file,channel2_file,channel3_file,sampling_rate_hz,gestation_recording_weeks,"
          "gestation_delivery_weeks,label\nr1,c.csv,c.csv,c.csv,20,30,36.5,Term\n");
    expect_error(ErrorKind::LabelInconsistency, [&] { load_records(dir); });
}

TEST(Load, MissingColumnAndNonFiniteSample) {
    const auto dir = fresh_dir("malformed");
    write(dir / "c.csv", "1\nnan\n3\n");
    write(dir / "manifest.csv", "id,channel1_file,channel2_file,channel3_file,sampling_rate_hz,label\nr1,c.csv,c.csv,c.csv,20,Term\n");
    expect_error(ErrorKind::MalformedHeader, [&] { load_records(dir); });
    write(dir / "manifest.csv",
          "id,channel1_file,channel2_file,channel3_file,sampling_rate_hz,gestation_recording_weeks,"
          "gestation_delivery_weeks,label,maternal_age\nr1,c.csv,c.csv,c.csv,20,30,39,Term,31\n");
    expect_error(ErrorKind::NonFiniteSample, [&] { load_records(dir); });
}

TEST(Cohort, DefaultShapeCounts) {
    CohortSpec spec;
    spec.duration_seconds = 10; // counts only; keep it cheap
    spec.seed = 7;
    const auto set = generate_synthetic_cohort(spec);
    std::size_t preterm = 0;
    for (const auto& r : set.records) {
        preterm += r.label == Label::Preterm;
        EXPECT_EQ(label_for_delivery(r.gestation_at_delivery), r.label);
        EXPECT_LE(r.gestation_at_recording, r.gestation_at_delivery);
    }
    EXPECT_EQ(set.size(), 298u);
    EXPECT_EQ(preterm, 38u);
    EXPECT_NEAR(260.0 / 298.0, 0.8725, 1e-4);
}

TEST(Cohort, BalancedSmallCohortAndEarlyFraction) {
    CohortSpec spec;
    spec.n_records = 10;
    spec.preterm_fraction = 0.5;
    spec.early_fraction = 0.3;
    spec.duration_seconds = 10;
    const auto set = generate_synthetic_cohort(spec);
    std::size_t preterm = 0;
    for (const auto& r : set.records) preterm += r.label == Label::Preterm;
    EXPECT_EQ(preterm, 5u);
    const auto [early, late] = split_early_late(set);
    EXPECT_EQ(early.size(), 3u);
    EXPECT_EQ(late.size(), 7u);
}

TEST(Cohort, DeterministicAndLengthMatchesSpec) {
    CohortSpec spec;
    spec.n_records = 4;
    spec.duration_seconds = 60;
    spec.seed = 99;
    const auto a = generate_synthetic_cohort(spec);
    const auto b = generate_synthetic_cohort(spec);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.records[0].length(), 1200u);
    spec.seed = 100;
    EXPECT_NE(generate_synthetic_cohort(spec), a);
}

TEST(Cohort, InvalidSpecs) {
    CohortSpec spec;
    spec.n_records = 1;
    expect_error(ErrorKind::InvalidSpec, [&] { generate_synthetic_cohort(spec); });
    spec = {};
    spec.duration_seconds = 10.01;
    spec.sampling_rate = 20.0 / 3.0;
    expect_error(ErrorKind::InvalidSpec, [&] { generate_synthetic_cohort(spec); });
}

TEST(Trim, DefaultLengths) {
    auto r = simple_record("a", 36000, 39.0);
    EXPECT_EQ(trim_record(r, 150).length(), 30000u);
    EXPECT_EQ(trim_record(r, 0), r);
    auto short_record = simple_record("b", 5000, 39.0);
    expect_error(ErrorKind::RecordTooShort, [&] { trim_record(short_record, 150); });
}

TEST(Trim, ComposesAdditively) {
    const auto r = simple_record("a", 4000, 39.0);
    EXPECT_EQ(trim_record(trim_record(r, 10), 25), trim_record(r, 35));
}

TEST(DropShort, KeepsLongRecordsInOrder) {
    RecordSet set;
    for (int i = 0; i < 300; ++i) {
        const std::size_t n = (i == 17 || i == 200) ? 25 * 60 * 20 : 30 * 60 * 20;
        set.records.push_back(simple_record("r" + std::to_string(i), 4, 39.0));
        set.records.back().sampling_rate = 4.0 / (static_cast<double>(n) / 20.0); // duration = n/20 s
    }
    const auto kept = drop_short_records(set, 30 * 60);
    EXPECT_EQ(kept.size(), 298u);
    EXPECT_EQ(kept.records[17].id, "r18");
    EXPECT_EQ(drop_short_records(set, 0), set);
    EXPECT_TRUE(drop_short_records(set, 1e9).empty());
}

TEST(SplitEarlyLate, BoundaryIsEarly) {
    RecordSet set;
    for (double ga : {23.1, 31.1, 26.0}) {
        set.records.push_back(simple_record("g" + std::to_string(set.size()), 4, 39.0));
        set.records.back().gestation_at_recording = ga;
    }
    const auto [early, late] = split_early_late(set);
    ASSERT_EQ(early.size(), 2u);
    EXPECT_EQ(early.records[1].gestation_at_recording, 26.0);
    ASSERT_EQ(late.size(), 1u);
    EXPECT_EQ(late.records[0].gestation_at_recording, 31.1);
    const auto [e2, l2] = split_early_late(RecordSet{});
    EXPECT_TRUE(e2.empty() && l2.empty());
}
