#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <set>

#include "leakbench/dataio.hpp"
#include "leakbench/features.hpp"
#include "leakbench/rng.hpp"

using namespace leakbench;
using namespace leakbench::features;
constexpr double kPi = std::numbers::pi;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> x(n);
    for (auto& v : x) v = rng.normal();
    return x;
}

std::vector<double> sine(std::size_t n, double freq, double fs, double amp = 1.0) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(2.0 * kPi * freq * double(i) / fs);
    return x;
}

double sample_sd(const std::vector<double>& x) {
    double mu = 0;
    for (double v : x) mu += v;
    mu /= double(x.size());
    double ss = 0;
    for (double v : x) ss += (v - mu) * (v - mu);
    return std::sqrt(ss / double(x.size() - 1));
}

// Textbook O(N^2) sample entropy over the first N-m templates.
double brute_sampen(const std::vector<double>& x, std::size_t m, double r) {
    const double tol = r * sample_sd(x);
    const std::size_t n_templates = x.size() - m;
    auto matches = [&](std::size_t i, std::size_t j, std::size_t len) {
        for (std::size_t k = 0; k < len; ++k)
            if (std::abs(x[i + k] - x[j + k]) > tol) return false;
        return true;
    };
    double a = 0, b = 0;
    for (std::size_t i = 0; i < n_templates; ++i)
        for (std::size_t j = i + 1; j < n_templates; ++j) {
            b += matches(i, j, m);
            a += matches(i, j, m + 1);
        }
    if (a == 0 || b == 0) return kSampleEntropyCap;
    return -std::log(a / b);
}

// Yule-Walker by direct Gaussian elimination on the Toeplitz system.
std::vector<double> direct_yule_walker(const std::vector<double>& x, std::size_t p) {
    double mu = 0;
    for (double v : x) mu += v;
    mu /= double(x.size());
    std::vector<double> r(p + 1);
    for (std::size_t lag = 0; lag <= p; ++lag) {
        for (std::size_t i = lag; i < x.size(); ++i) r[lag] += (x[i] - mu) * (x[i - lag] - mu);
        r[lag] /= double(x.size());
    }
    std::vector<std::vector<double>> a(p, std::vector<double>(p + 1));
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) a[i][j] = r[i > j ? i - j : j - i];
        a[i][p] = r[i + 1];
    }
    for (std::size_t c = 0; c < p; ++c)
        for (std::size_t row = c + 1; row < p; ++row) {
            const double f = a[row][c] / a[c][c];
            for (std::size_t k = c; k <= p; ++k) a[row][k] -= f * a[c][k];
        }
    std::vector<double> phi(p);
    for (std::size_t i = p; i-- > 0;) {
        double s = a[i][p];
        for (std::size_t k = i + 1; k < p; ++k) s -= a[i][k] * phi[k];
        phi[i] = s / a[i][i];
    }
    return phi;
}

RecordSet small_cohort(std::size_t n, double seconds, std::uint64_t seed) {
    CohortSpec spec;
    spec.n_records = n;
    spec.preterm_fraction = 0.5;
    spec.duration_seconds = seconds;
    spec.seed = seed;
    return generate_synthetic_cohort(spec);
}

} // namespace

TEST(SampleEntropy, RampHasZeroEntropy) {
    std::vector<double> x;
    for (int i = 1; i <= 10; ++i) x.push_back(i);
    const auto counts = count_template_matches(x, 2, 0.5 * sample_sd(x));
    EXPECT_EQ(counts.b, 7u);
    EXPECT_EQ(counts.a, 7u);
    EXPECT_DOUBLE_EQ(sample_entropy(x, 2, 0.5), 0.0);
}

TEST(SampleEntropy, MatchesBruteForce) {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const auto x = noise(300 + 50 * seed, seed);
        for (std::size_t m : {2u, 3u, 4u})
            for (double r : {0.15, 0.2, 0.5})
                EXPECT_NEAR(sample_entropy(x, m, r), brute_sampen(x, m, r), 1e-12) << seed << " " << m << " " << r;
    }
}

TEST(SampleEntropy, NoiseIsMoreIrregularThanSine) {
    const auto s = sine(2000, 0.5, 20.0);
    const auto n = noise(2000, 3);
    EXPECT_GT(sample_entropy(n, 2, 0.2), sample_entropy(s, 2, 0.2) + 1.0);
}

TEST(SampleEntropy, CapAndErrors) {
    std::vector<double> x = {0, 10, 0, 20, 0, 30, 0, 40};
    EXPECT_EQ(sample_entropy(x, 3, 0.01), kSampleEntropyCap);
    EXPECT_THROW(sample_entropy(std::vector<double>{1, 2, 3}, 2, 0.2), Error);
    EXPECT_THROW(sample_entropy(x, 2, 0.0), Error);
}

TEST(Higuchi, ReferenceShapes) {
    std::vector<double> line(1000);
    for (std::size_t i = 0; i < line.size(); ++i) line[i] = 0.3 * double(i);
    EXPECT_NEAR(higuchi_fd(line), 1.0, 1e-9);
    EXPECT_NEAR(higuchi_fd(noise(5000, 1)), 2.0, 0.05);
    EXPECT_LT(higuchi_fd(sine(5000, 0.1, 20.0)), 1.1);
    EXPECT_TRUE(std::isnan(higuchi_fd(std::vector<double>(100, 2.0))));
}

TEST(TeagerKaiser, ClosedForms) {
    EXPECT_DOUBLE_EQ(teager_kaiser_energy(std::vector<double>{0, 1, 0}), 1.0);
    // For A sin(w n): x_n^2 - x_{n-1} x_{n+1} = A^2 sin^2(w).
    const double amp = 2.5, w = 2.0 * kPi * 0.7 / 20.0;
    EXPECT_NEAR(teager_kaiser_energy(sine(500, 0.7, 20.0, amp)), amp * amp * std::sin(w) * std::sin(w), 1e-10);
}

TEST(BasicStats, SmallVectors) {
    const auto a = basic_stats(std::vector<double>{1, 2, 3, 4, 5});
    EXPECT_NEAR(a.std, std::sqrt(2.5), 1e-12);
    EXPECT_NEAR(a.std, 1.5811, 1e-4);
    EXPECT_DOUBLE_EQ(a.iqr, 2.0);
    EXPECT_NEAR(a.rms, std::sqrt(11.0), 1e-12);
    EXPECT_DOUBLE_EQ(a.peak_amplitude, 5.0);
    const auto b = basic_stats(std::vector<double>{0, 0, 0, 4});
    EXPECT_DOUBLE_EQ(b.std, 2.0);
    EXPECT_DOUBLE_EQ(b.peak_amplitude, 4.0);
}

TEST(YuleWalker, RecoversAr1) {
    Rng rng(11);
    std::vector<double> x(20000);
    for (std::size_t i = 1; i < x.size(); ++i) x[i] = 0.9 * x[i - 1] + rng.normal();
    EXPECT_NEAR(yule_walker_ar(x, 1)[0], 0.9, 0.02);
}

TEST(YuleWalker, LevinsonMatchesDirectSolve) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(seed);
        std::vector<double> x(3000);
        for (std::size_t i = 2; i < x.size(); ++i) x[i] = 0.5 * x[i - 1] - 0.3 * x[i - 2] + rng.normal();
        for (std::size_t p : {1u, 2u, 4u, 6u}) {
            const auto fast = yule_walker_ar(x, p);
            const auto slow = direct_yule_walker(x, p);
            for (std::size_t k = 0; k < p; ++k) EXPECT_NEAR(fast[k], slow[k], 1e-10);
        }
    }
    const auto white = yule_walker_ar(noise(20000, 4), 4);
    for (double c : white) EXPECT_LT(std::abs(c), 0.05);
}

TEST(YuleWalker, Errors) {
    try {
        yule_walker_ar(std::vector<double>(100, 1.0), 4);
        ADD_FAILURE();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::SingularAutocorrelation);
    }
    try {
        yule_walker_ar(noise(40, 1), 4);
        ADD_FAILURE();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::SignalTooShort);
    }
}

TEST(MedianFrequency, SineAndNoise) {
    const double fs = 20.0;
    EXPECT_NEAR(median_frequency(sine(4000, 2.0, fs), fs), 2.0, fs / 4000.0);
    EXPECT_NEAR(median_frequency(noise(20000, 2), fs), fs / 4.0, 0.3);
    EXPECT_TRUE(std::isnan(median_frequency(std::vector<double>(128, 0.0), fs)));
}

TEST(WaveletLogVar, DiffIsDifferenceOfSiblingLogVariances) {
    const auto x = noise(4096, 8);
    auto log_var = [&](const char* path) {
        const auto c = signal::wpd(x, path).coefficients;
        const double sd = sample_sd(c);
        return std::log(sd * sd);
    };
    EXPECT_NEAR(wavelet_log_var(x, "AAD"), log_var("AAD"), 1e-12);
    EXPECT_NEAR(wavelet_log_var_diff(x, "AAAD"), log_var("AAAD") - log_var("AAAA"), 1e-12);
    EXPECT_NEAR(wavelet_log_var_diff(x, "A"), log_var("A") - log_var("D"), 1e-12);
    try {
        wavelet_log_var(std::vector<double>(256, 0.0), "AA");
        ADD_FAILURE();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NonPositiveVariance);
    }
}

TEST(FwlPeakPower, IsPeakOfStagedPeriodogram) {
    const auto x = noise(2000, 9);
    for (std::size_t stage : {1u, 3u, 30u}) {
        const auto staged = signal::nth_emd(x, stage);
        const auto power = signal::periodogram(staged);
        EXPECT_DOUBLE_EQ(fwl_peak_power(x, 20.0, stage), *std::max_element(power.begin(), power.end()));
    }
}

TEST(FeatureSpecs, PresetsAndResolution) {
    const auto presets = table1_presets();
    ASSERT_EQ(presets.size(), 10u);
    std::set<std::string> names;
    for (const auto& p : presets) names.insert(column_name(p));
    EXPECT_EQ(names.size(), 10u);
    EXPECT_EQ(presets[5].params.at("m"), 4.0);
    EXPECT_EQ(presets[0].params.at("m"), 3.0);
    EXPECT_EQ(column_name(resolve({"rms", 2, 4, "AD", {}, ""})), "rms_emd4_wpdad_ch2");

    auto expect_kind = [](ErrorKind kind, FeatureSpec s) {
        try {
            resolve(std::move(s));
            ADD_FAILURE() << error_name(kind);
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), kind);
        }
    };
    expect_kind(ErrorKind::UnknownFeature, {"kurtosis", 1, {}, {}, {}, ""});
    expect_kind(ErrorKind::InvalidSpec, {"std", 4, {}, {}, {}, ""});
    expect_kind(ErrorKind::InvalidSpec, {"std", 1, {}, {}, {{"bogus", 1}}, ""});
    expect_kind(ErrorKind::InvalidSpec, {"fwl_peak_power", 1, {}, {}, {}, ""});
    expect_kind(ErrorKind::InvalidSpec, {"wavelet_log_var", 1, {}, {}, {}, ""});
}

TEST(Extraction, MatchesPerRecordComputation) {
    const auto set = small_cohort(6, 200, 21);
    const auto presets = table1_presets();
    const auto result = extract_feature_matrix(set, presets);
    ASSERT_EQ(result.matrix.n_rows, 6u);
    ASSERT_EQ(result.matrix.n_cols(), 10u);
    EXPECT_EQ(result.imputation.total, 0u);
    for (std::size_t r = 0; r < set.size(); ++r) {
        EXPECT_EQ(result.matrix.sample_ids[r], set.records[r].id);
        EXPECT_EQ(result.matrix.labels[r], set.records[r].label == Label::Preterm ? 1 : 0);
        for (std::size_t c = 0; c < presets.size(); ++c)
            EXPECT_NEAR(result.matrix.at(r, c), compute_feature(set.records[r], presets[c]),
                        1e-9 * std::max(1.0, std::abs(result.matrix.at(r, c))))
                << r << " " << column_name(presets[c]);
    }
}

TEST(Extraction, DeterministicAcrossJobCountsAndRoundTrip) {
    const auto set = small_cohort(6, 120, 5);
    const auto presets = table1_presets();
    const auto saved_jobs = max_jobs();
    max_jobs() = 1;
    const auto serial = extract_feature_matrix(set, presets).matrix;
    max_jobs() = 4;
    const auto parallel = extract_feature_matrix(set, presets).matrix;
    max_jobs() = saved_jobs;
    EXPECT_EQ(serial, parallel);

    const auto dir = std::filesystem::path(LEAKBENCH_TEST_TMP) / "features_roundtrip";
    std::filesystem::remove_all(dir);
    save_records(set, dir);
    EXPECT_EQ(extract_feature_matrix(load_records(dir), presets).matrix, serial);
}

TEST(Extraction, UndefinedValuesAreImputedWithColumnMedian) {
    auto set = small_cohort(5, 120, 6);
    std::fill(set.records[2].channels[2].begin(), set.records[2].channels[2].end(), 1.0);
    const std::vector<FeatureSpec> specs = {{"wavelet_log_var_diff", 3, {}, "AAAD", {}, ""}, {"std", 1, {}, {}, {}, ""}};
    const auto result = extract_feature_matrix(set, specs);
    EXPECT_EQ(result.imputation.total, 1u);
    EXPECT_EQ(result.imputation.per_column, (std::vector<std::size_t>{1, 0}));
    std::vector<double> others;
    for (std::size_t r : {0u, 1u, 3u, 4u}) others.push_back(result.matrix.at(r, 0));
    std::sort(others.begin(), others.end());
    EXPECT_NEAR(result.matrix.at(2, 0), 0.5 * (others[1] + others[2]), 1e-12);
}

TEST(Extraction, ScaleInvariantFeatures) {
    auto set = small_cohort(3, 120, 8);
    auto scaled = set;
    for (auto& r : scaled.records)
        for (auto& v : r.channels[2]) v *= 7.0;
    const std::vector<FeatureSpec> specs = {
        {"sample_entropy", 3, {}, {}, {}, ""}, {"higuchi_fd", 3, {}, {}, {}, ""}, {"median_frequency", 3, {}, {}, {}, ""}};
    const auto a = extract_feature_matrix(set, specs).matrix;
    const auto b = extract_feature_matrix(scaled, specs).matrix;
    for (std::size_t i = 0; i < a.values.size(); ++i) EXPECT_NEAR(a.values[i], b.values[i], 1e-9);
}
