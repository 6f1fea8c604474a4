#pragma once

// Canned synthetic leakage demonstrations.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include "evaluate.hpp"

namespace leakbench {

struct LeakageResult {
    double auc_none = 0.0;
    double auc_before = 0.0;
    double auc_after = 0.0;
    std::size_t n = 0;
    std::size_t d = 0;
    double pos_rate = 0.0;
    std::uint64_t seed = 0;
    SamplerConfig sampler;
    ClassifierSpec classifier;
    std::size_t n_folds = 10;
};

struct LeakageOptions {
    std::size_t n = 10000;
    std::size_t d = 5;
    double pos_rate = 0.1;
    SamplerConfig sampler{SamplerAlgorithm::SMOTE, 1.0, 5};
    ClassifierSpec classifier{ClassifierKind::KNN, {{"k", 5}}};
    std::size_t n_folds = 10;
};

/// i.i.d. U(0,1) features; exactly round(n * pos_rate) rows labelled 1, chosen at random.
inline FeatureMatrix uniform_noise_matrix(std::size_t n, std::size_t d, double pos_rate, std::uint64_t seed) {
    if (n == 0 || d == 0 || !(pos_rate > 0.0 && pos_rate < 1.0)) fail(ErrorKind::InvalidSpec, "invalid noise matrix shape");
    Rng rng(seed);
    FeatureMatrix m;
    for (std::size_t c = 0; c < d; ++c) m.feature_names.push_back("u" + std::to_string(c));
    const auto n_pos = static_cast<std::size_t>(std::llround(static_cast<double>(n) * pos_rate));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    std::vector<int> labels(n, 0);
    for (std::size_t i = 0; i < n_pos; ++i) labels[order[i]] = 1;
    std::vector<double> row(d);
    char id[32];
    for (std::size_t i = 0; i < n; ++i) {
        for (auto& v : row) v = rng.uniform();
        std::snprintf(id, sizeof id, "p%06zu", i);
        m.push_row(row, labels[i], id);
    }
    return m;
}

/// Runs the same sampler/classifier with placement None, BeforeSplit and
/// AfterSplit on one label-independent noise matrix, sharing the fold seed.
inline LeakageResult uniform_leakage_experiment(const LeakageOptions& options, std::uint64_t seed) {
    if (static_cast<double>(options.n) * options.pos_rate < 20.0)
        fail(ErrorKind::InvalidSpec, "n * pos_rate must be at least 20");
    const auto m = uniform_noise_matrix(options.n, options.d, options.pos_rate, derive_seed(seed, {0x6e6f697365}));
    PipelineSpec spec;
    spec.sampler = options.sampler;
    spec.classifier = options.classifier;
    spec.n_folds = options.n_folds;
    spec.seed = seed;
    spec.allow_leakage = true;

    LeakageResult r;
    r.n = options.n;
    r.d = options.d;
    r.pos_rate = options.pos_rate;
    r.seed = seed;
    r.sampler = options.sampler;
    r.classifier = options.classifier;
    r.n_folds = options.n_folds;
    spec.placement = Placement::None;
    r.auc_none = run_pipeline(m, spec).aggregate.at("auc").mean;
    spec.placement = Placement::BeforeSplit;
    r.auc_before = run_pipeline(m, spec).aggregate.at("auc").mean;
    spec.placement = Placement::AfterSplit;
    r.auc_after = run_pipeline(m, spec).aggregate.at("auc").mean;
    return r;
}

// ---------------------------------------------------------------------------
// Two-dimensional illustration

struct ToyPoint {
    double x = 0.0;
    double y = 0.0;
    int label = 0;
    bool synthetic = false;
    bool in_test = false;
};

struct Toy2dData {
    std::vector<ToyPoint> original;          // split as in the after-mode pipeline
    std::vector<ToyPoint> before_mode;       // originals + synthetics, split after sampling
    std::vector<ToyPoint> after_mode;        // originals + synthetics, sampled after the split
    std::size_t synthetic_before = 0;
    std::size_t synthetic_after = 0;
};

struct Toy2dOptions {
    std::size_t n = 100;
    std::size_t n_pos = 20;
    SamplerConfig sampler{SamplerAlgorithm::SMOTE, 1.0, 5};
    /// One fold of a stratified k-fold split is held out as the test set.
    std::size_t split_folds = 5;
    double separation = 1.5;
};

/// Two overlapping unit-variance Gaussian blobs and the geometry of both
/// pipeline orders: sample-then-split and split-then-sample.
inline Toy2dData toy2d_figure_data(const Toy2dOptions& options, std::uint64_t seed) {
    if (options.n_pos == 0 || options.n_pos >= options.n) fail(ErrorKind::InvalidSpec, "need 0 < n_pos < n");
    Rng rng(derive_seed(seed, {0x746f79}));
    FeatureMatrix m;
    m.feature_names = {"x", "y"};
    char id[32];
    for (std::size_t i = 0; i < options.n; ++i) {
        const int label = i < options.n_pos ? 1 : 0;
        const double shift = label ? options.separation : 0.0;
        const double pt[2] = {rng.normal() + shift, rng.normal() + shift};
        std::snprintf(id, sizeof id, "t%03zu", i);
        m.push_row(pt, label, id);
    }
    SamplerConfig cfg = options.sampler;
    cfg.seed = derive_seed(seed, {evaluate_detail::kSamplerStream});
    const auto split_seed = derive_seed(seed, {evaluate_detail::kFoldStream});

    auto to_points = [](const FeatureMatrix& mat, const std::vector<bool>& synthetic, const std::vector<std::size_t>& test) {
        std::vector<ToyPoint> pts(mat.n_rows);
        for (std::size_t i = 0; i < mat.n_rows; ++i) pts[i] = {mat.at(i, 0), mat.at(i, 1), mat.labels[i], synthetic[i], false};
        for (auto t : test) pts[t].in_test = true;
        return pts;
    };

    Toy2dData out;
    // Split, then sample the training part only.
    const auto split = stratified_kfold(m.labels, options.split_folds, split_seed).front();
    out.original = to_points(m, std::vector<bool>(m.n_rows, false), split.test);
    const auto train = m.subset(split.train);
    const auto sampled_train = oversample(train, cfg);
    out.after_mode = out.original;
    for (std::size_t i = 0; i < sampled_train.matrix.n_rows; ++i)
        if (sampled_train.synthetic_mask[i])
            out.after_mode.push_back({sampled_train.matrix.at(i, 0), sampled_train.matrix.at(i, 1), 1, true, false});
    out.synthetic_after = sampled_train.synthetic_count();

    // Sample everything, then split the augmented set.
    const auto sampled_all = oversample(m, cfg);
    const auto split_all = stratified_kfold(sampled_all.matrix.labels, options.split_folds, split_seed).front();
    out.before_mode = to_points(sampled_all.matrix, sampled_all.synthetic_mask, split_all.test);
    out.synthetic_before = sampled_all.synthetic_count();
    return out;
}

/// CSV with columns x,y,label,role,mode; role is one of original_train,
/// original_test, synthetic_train, synthetic_test and mode is before or after.
inline std::string toy2d_csv(const Toy2dData& data, const std::vector<std::string>& comments = {}) {
    std::string out;
    for (const auto& c : comments) out += "# " + c + "\n";
    out += "x,y,label,role,mode\n";
    auto emit = [&](const std::vector<ToyPoint>& pts, const char* mode) {
        for (const auto& p : pts) {
            const std::string role = std::string(p.synthetic ? "synthetic" : "original") + (p.in_test ? "_test" : "_train");
            out += text::format_double(p.x) + "," + text::format_double(p.y) + "," + std::to_string(p.label) + "," + role + "," +
                   mode + "\n";
        }
    };
    emit(data.before_mode, "before");
    emit(data.after_mode, "after");
    return out;
}

} // namespace leakbench
