#pragma once

// Score-producing binary classifiers. Higher score = more minority-like.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "error.hpp"
#include "feature_matrix.hpp"
#include "neighbors.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace leakbench {

enum class ClassifierKind { KNN, QDA, LinearSVM, DecisionTree, RandomForest, AdaBoost };

inline std::string_view classifier_name(ClassifierKind k) {
    switch (k) {
    case ClassifierKind::KNN: return "KNN";
    case ClassifierKind::QDA: return "QDA";
    case ClassifierKind::LinearSVM: return "LinearSVM";
    case ClassifierKind::DecisionTree: return "DecisionTree";
    case ClassifierKind::RandomForest: return "RandomForest";
    case ClassifierKind::AdaBoost: return "AdaBoost";
    }
    return "KNN";
}

inline ClassifierKind parse_classifier(std::string_view name) {
    for (auto k : {ClassifierKind::KNN, ClassifierKind::QDA, ClassifierKind::LinearSVM, ClassifierKind::DecisionTree,
                   ClassifierKind::RandomForest, ClassifierKind::AdaBoost})
        if (classifier_name(k) == name) return k;
    fail(ErrorKind::InvalidSpec, "unknown classifier '" + std::string(name) + "'");
}

/// Parameter names and defaults per classifier kind. max_depth 0 = unlimited;
/// max_features 0 = all features (sqrt(d) for forests).
inline const std::map<std::string, double>& classifier_defaults(ClassifierKind kind) {
    static const std::map<ClassifierKind, std::map<std::string, double>> defaults = {
        {ClassifierKind::KNN, {{"k", 5}}},
        {ClassifierKind::QDA, {{"epsilon", 1e-6}}},
        {ClassifierKind::LinearSVM, {{"C", 1.0}, {"epochs", 200}, {"learning_rate", 0.1}}},
        {ClassifierKind::DecisionTree, {{"max_depth", 0}, {"min_leaf", 1}, {"max_features", 0}}},
        {ClassifierKind::RandomForest, {{"n_trees", 100}, {"max_depth", 0}, {"min_leaf", 1}}},
        {ClassifierKind::AdaBoost, {{"n_rounds", 50}}},
    };
    return defaults.at(kind);
}

struct ClassifierSpec {
    ClassifierKind kind = ClassifierKind::KNN;
    std::map<std::string, double> params;
    std::uint64_t seed = 0;

    double param(const std::string& key) const {
        if (auto it = params.find(key); it != params.end()) return it->second;
        return classifier_defaults(kind).at(key);
    }
    bool operator==(const ClassifierSpec&) const = default;
};

inline void validate(const ClassifierSpec& spec) {
    const auto& defaults = classifier_defaults(spec.kind);
    for (const auto& [key, value] : spec.params) {
        if (!defaults.count(key))
            fail(ErrorKind::InvalidSpec, std::string(classifier_name(spec.kind)) + " has no parameter '" + key + "'");
        if (!std::isfinite(value) || value < 0.0) fail(ErrorKind::InvalidSpec, "parameter " + key + " must be non-negative");
    }
    auto positive = [&](const char* key) {
        if (!(spec.param(key) >= 1.0)) fail(ErrorKind::InvalidSpec, std::string("parameter ") + key + " must be >= 1");
    };
    switch (spec.kind) {
    case ClassifierKind::KNN: positive("k"); break;
    case ClassifierKind::QDA: break;
    case ClassifierKind::LinearSVM:
        positive("epochs");
        if (!(spec.param("C") > 0.0) || !(spec.param("learning_rate") > 0.0))
            fail(ErrorKind::InvalidSpec, "C and learning_rate must be positive");
        break;
    case ClassifierKind::DecisionTree: positive("min_leaf"); break;
    case ClassifierKind::RandomForest:
        positive("n_trees");
        positive("min_leaf");
        break;
    case ClassifierKind::AdaBoost: positive("n_rounds"); break;
    }
}

// ---------------------------------------------------------------------------
// CART

struct TreeNode {
    std::size_t feature = 0;
    double threshold = 0.0;
    std::int32_t left = -1; // -1 marks a leaf
    std::int32_t right = -1;
    double value = 0.0; // weighted minority fraction at the node
};

struct TreeParams {
    std::size_t max_depth = 0;
    std::size_t min_leaf = 1;
    std::size_t max_features = 0; // 0 = all
};

class DecisionTree {
public:
    /// Gini CART on weighted rows. With max_features < d, a fresh random
    /// feature subset is drawn at every split. Candidate splits are scanned
    /// by ascending feature then ascending threshold and replaced only on a
    /// strict improvement, so ties go to the lowest feature and threshold.
    static DecisionTree fit(const FeatureMatrix& m, const std::vector<std::size_t>& rows, const std::vector<double>& weights,
                            const TreeParams& params, Rng* rng = nullptr) {
        DecisionTree tree;
        tree.dims_ = m.n_cols();
        std::vector<std::size_t> work = rows;
        tree.grow(m, work, 0, work.size(), weights, params, rng, 0);
        return tree;
    }

    double score(std::span<const double> x) const {
        std::size_t id = 0;
        while (nodes_[id].left >= 0)
            id = static_cast<std::size_t>(x[nodes_[id].feature] <= nodes_[id].threshold ? nodes_[id].left : nodes_[id].right);
        return nodes_[id].value;
    }

    std::size_t node_count() const { return nodes_.size(); }
    const std::vector<TreeNode>& nodes() const { return nodes_; }

private:
    struct Split {
        double impurity = std::numeric_limits<double>::infinity();
        std::size_t feature = 0;
        double threshold = 0.0;
        bool found = false;
    };

    static double gini_sum(double w_pos, double w_total) {
        if (w_total <= 0.0) return 0.0;
        const double p = w_pos / w_total;
        return w_total * 2.0 * p * (1.0 - p);
    }

    std::int32_t grow(const FeatureMatrix& m, std::vector<std::size_t>& rows, std::size_t begin, std::size_t end,
                      const std::vector<double>& weights, const TreeParams& params, Rng* rng, std::size_t depth) {
        const auto id = static_cast<std::int32_t>(nodes_.size());
        nodes_.push_back({});
        double w_total = 0.0, w_pos = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            w_total += weights[rows[i]];
            if (m.labels[rows[i]] == 1) w_pos += weights[rows[i]];
        }
        nodes_[id].value = w_total > 0.0 ? w_pos / w_total : 0.0;
        const bool pure = w_pos <= 0.0 || w_pos >= w_total;
        if (pure || (params.max_depth && depth >= params.max_depth) || end - begin < 2 * params.min_leaf) return id;

        std::vector<std::size_t> features(dims_);
        std::iota(features.begin(), features.end(), std::size_t{0});
        if (params.max_features && params.max_features < dims_ && rng) {
            for (std::size_t i = 0; i < params.max_features; ++i)
                std::swap(features[i], features[i + rng->below(dims_ - i)]);
            features.resize(params.max_features);
            std::sort(features.begin(), features.end());
        }

        Split best;
        std::vector<std::size_t> sorted(rows.begin() + static_cast<std::ptrdiff_t>(begin), rows.begin() + static_cast<std::ptrdiff_t>(end));
        for (auto f : features) {
            std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
                const double va = m.at(a, f), vb = m.at(b, f);
                return va < vb || (va == vb && a < b);
            });
            double left_w = 0.0, left_pos = 0.0;
            for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
                const auto r = sorted[i];
                left_w += weights[r];
                if (m.labels[r] == 1) left_pos += weights[r];
                const double v = m.at(r, f), next = m.at(sorted[i + 1], f);
                if (v == next) continue;
                if (i + 1 < params.min_leaf || sorted.size() - i - 1 < params.min_leaf) continue;
                const double impurity = gini_sum(left_pos, left_w) + gini_sum(w_pos - left_pos, w_total - left_w);
                if (impurity < best.impurity) {
                    best = {impurity, f, v + (next - v) / 2.0, true};
                }
            }
        }
        if (!best.found) return id;

        const auto mid_it = std::stable_partition(rows.begin() + static_cast<std::ptrdiff_t>(begin), rows.begin() + static_cast<std::ptrdiff_t>(end),
                                                  [&](std::size_t r) { return m.at(r, best.feature) <= best.threshold; });
        const auto mid = static_cast<std::size_t>(mid_it - rows.begin());
        const auto left = grow(m, rows, begin, mid, weights, params, rng, depth + 1);
        const auto right = grow(m, rows, mid, end, weights, params, rng, depth + 1);
        nodes_[id].feature = best.feature;
        nodes_[id].threshold = best.threshold;
        nodes_[id].left = left;
        nodes_[id].right = right;
        return id;
    }

    std::vector<TreeNode> nodes_;
    std::size_t dims_ = 0;
};

// ---------------------------------------------------------------------------
// Models

namespace classify_detail {

struct Standardizer {
    std::vector<double> mean, scale;

    static Standardizer fit(const FeatureMatrix& m) {
        Standardizer s;
        const std::size_t d = m.n_cols();
        s.mean.assign(d, 0.0);
        s.scale.assign(d, 1.0);
        for (std::size_t c = 0; c < d; ++c) {
            double mu = 0.0;
            for (std::size_t r = 0; r < m.n_rows; ++r) mu += m.at(r, c);
            mu /= static_cast<double>(m.n_rows);
            double var = 0.0;
            for (std::size_t r = 0; r < m.n_rows; ++r) var += (m.at(r, c) - mu) * (m.at(r, c) - mu);
            const double sd = std::sqrt(var / static_cast<double>(m.n_rows));
            s.mean[c] = mu;
            s.scale[c] = sd > 0.0 ? sd : 1.0;
        }
        return s;
    }

    void apply(std::span<const double> in, std::span<double> out) const {
        for (std::size_t c = 0; c < in.size(); ++c) out[c] = (in[c] - mean[c]) / scale[c];
    }
};

/// In-place Cholesky (lower) of a symmetric positive definite d x d matrix.
inline bool cholesky(std::vector<double>& a, std::size_t d) {
    for (std::size_t j = 0; j < d; ++j) {
        double diag = a[j * d + j];
        for (std::size_t k = 0; k < j; ++k) diag -= a[j * d + k] * a[j * d + k];
        if (!(diag > 0.0)) return false;
        const double l = std::sqrt(diag);
        a[j * d + j] = l;
        for (std::size_t i = j + 1; i < d; ++i) {
            double v = a[i * d + j];
            for (std::size_t k = 0; k < j; ++k) v -= a[i * d + k] * a[j * d + k];
            a[i * d + j] = v / l;
        }
        for (std::size_t k = j + 1; k < d; ++k) a[j * d + k] = 0.0;
    }
    return true;
}

struct GaussianClass {
    std::vector<double> mean;
    std::vector<double> chol; // lower factor of the ridged covariance
    double log_det = 0.0;
    double log_prior = 0.0;

    /// log N(x; mean, cov) + log prior, dropping the shared -d/2 log(2 pi).
    double log_joint(std::span<const double> x) const {
        const std::size_t d = mean.size();
        std::vector<double> z(d);
        double quad = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            double v = x[i] - mean[i];
            for (std::size_t k = 0; k < i; ++k) v -= chol[i * d + k] * z[k];
            z[i] = v / chol[i * d + i];
            quad += z[i] * z[i];
        }
        return -0.5 * log_det - 0.5 * quad + log_prior;
    }
};

inline GaussianClass fit_gaussian(const FeatureMatrix& m, int label, double epsilon) {
    const std::size_t d = m.n_cols();
    GaussianClass g;
    g.mean.assign(d, 0.0);
    std::size_t n = 0;
    for (std::size_t r = 0; r < m.n_rows; ++r)
        if (m.labels[r] == label) {
            ++n;
            for (std::size_t c = 0; c < d; ++c) g.mean[c] += m.at(r, c);
        }
    for (auto& v : g.mean) v /= static_cast<double>(n);
    std::vector<double> cov(d * d, 0.0);
    for (std::size_t r = 0; r < m.n_rows; ++r) {
        if (m.labels[r] != label) continue;
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j <= i; ++j) cov[i * d + j] += (m.at(r, i) - g.mean[i]) * (m.at(r, j) - g.mean[j]);
    }
    const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
    double trace = 0.0;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            cov[i * d + j] /= denom;
            cov[j * d + i] = cov[i * d + j];
        }
    for (std::size_t i = 0; i < d; ++i) trace += cov[i * d + i];
    const double mean_diag = trace / static_cast<double>(d);
    double ridge = epsilon * (mean_diag > 0.0 ? mean_diag : 1.0);
    g.log_prior = std::log(static_cast<double>(n) / static_cast<double>(m.n_rows));
    for (int attempt = 0; attempt < 30; ++attempt) {
        g.chol = cov;
        for (std::size_t i = 0; i < d; ++i) g.chol[i * d + i] += ridge;
        if (cholesky(g.chol, d)) break;
        ridge *= 10.0;
    }
    g.log_det = 0.0;
    for (std::size_t i = 0; i < d; ++i) g.log_det += 2.0 * std::log(g.chol[i * d + i]);
    return g;
}

struct KnnModel {
    std::size_t k = 5;
    NeighborIndex index;
    std::vector<int> labels;
};

struct QdaModel {
    GaussianClass negative, positive;
};

struct SvmModel {
    Standardizer standardizer;
    std::vector<double> weights;
    double bias = 0.0;
};

struct TreeModel {
    DecisionTree tree;
};

struct ForestModel {
    std::vector<DecisionTree> trees;
};

struct BoostModel {
    std::vector<DecisionTree> stumps;
    std::vector<double> alphas;
};

} // namespace classify_detail

class FittedModel {
public:
    using State = std::variant<classify_detail::KnnModel, classify_detail::QdaModel, classify_detail::SvmModel,
                               classify_detail::TreeModel, classify_detail::ForestModel, classify_detail::BoostModel>;

    FittedModel(ClassifierKind kind, std::size_t feature_count, std::pair<std::size_t, std::size_t> class_counts, State state)
        : kind_(kind), feature_count_(feature_count), class_counts_(class_counts), state_(std::move(state)) {}

    ClassifierKind kind() const { return kind_; }
    std::size_t feature_count() const { return feature_count_; }
    /// (majority, minority) counts seen in training.
    std::pair<std::size_t, std::size_t> training_class_counts() const { return class_counts_; }
    const State& state() const { return state_; }

    /// The score at which the model is indifferent between the classes:
    /// 0 for margin/log-odds/vote-sum scores, 0.5 for fraction scores.
    double natural_threshold() const {
        switch (kind_) {
        case ClassifierKind::QDA:
        case ClassifierKind::LinearSVM:
        case ClassifierKind::AdaBoost: return 0.0;
        default: return 0.5;
        }
    }

private:
    ClassifierKind kind_;
    std::size_t feature_count_;
    std::pair<std::size_t, std::size_t> class_counts_;
    State state_;
};

namespace classify_detail {

inline std::size_t as_count(double v) { return static_cast<std::size_t>(std::llround(v)); }

inline SvmModel fit_svm(const FeatureMatrix& m, const ClassifierSpec& spec) {
    SvmModel model;
    model.standardizer = Standardizer::fit(m);
    const std::size_t n = m.n_rows, d = m.n_cols();
    std::vector<double> z(n * d);
    for (std::size_t r = 0; r < n; ++r) model.standardizer.apply(m.row(r), {z.data() + r * d, d});
    const double lambda = 1.0 / (spec.param("C") * static_cast<double>(n));
    const double lr0 = spec.param("learning_rate");
    const std::size_t epochs = as_count(spec.param("epochs"));

    // Averaged SGD on the hinge loss + L2 objective.
    std::vector<double> w(d, 0.0), w_avg(d, 0.0);
    double b = 0.0, b_avg = 0.0;
    std::size_t t = 0, averaged = 0;
    Rng rng(spec.seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        rng.shuffle(order);
        for (auto i : order) {
            ++t;
            const double eta = lr0 / (1.0 + lr0 * lambda * static_cast<double>(t));
            const double y = m.labels[i] == 1 ? 1.0 : -1.0;
            double margin = b;
            for (std::size_t c = 0; c < d; ++c) margin += w[c] * z[i * d + c];
            const double shrink = 1.0 - eta * lambda;
            for (std::size_t c = 0; c < d; ++c) w[c] *= shrink;
            if (y * margin < 1.0) {
                for (std::size_t c = 0; c < d; ++c) w[c] += eta * y * z[i * d + c];
                b += eta * y;
            }
            if (epoch >= epochs / 2) {
                ++averaged;
                const double f = 1.0 / static_cast<double>(averaged);
                for (std::size_t c = 0; c < d; ++c) w_avg[c] += (w[c] - w_avg[c]) * f;
                b_avg += (b - b_avg) * f;
            }
        }
    }
    model.weights = w_avg;
    model.bias = b_avg;
    return model;
}

inline BoostModel fit_adaboost(const FeatureMatrix& m, const ClassifierSpec& spec) {
    BoostModel model;
    const std::size_t n = m.n_rows;
    std::vector<double> weights(n, 1.0 / static_cast<double>(n));
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    const std::size_t rounds = as_count(spec.param("n_rounds"));
    TreeParams stump{1, 1, 0};
    constexpr double kMinError = 1e-10;
    for (std::size_t round = 0; round < rounds; ++round) {
        auto tree = DecisionTree::fit(m, rows, weights, stump);
        std::vector<double> vote(n);
        double error = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            vote[i] = tree.score(m.row(i)) >= 0.5 ? 1.0 : -1.0;
            const double y = m.labels[i] == 1 ? 1.0 : -1.0;
            if (vote[i] != y) error += weights[i];
        }
        if (error >= 0.5) {
            if (model.stumps.empty()) {
                model.stumps.push_back(std::move(tree));
                model.alphas.push_back(kMinError);
            }
            break;
        }
        const double clamped = std::max(error, kMinError);
        const double alpha = 0.5 * std::log((1.0 - clamped) / clamped);
        model.stumps.push_back(std::move(tree));
        model.alphas.push_back(alpha);
        if (error <= kMinError) break;
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double y = m.labels[i] == 1 ? 1.0 : -1.0;
            weights[i] *= std::exp(-alpha * y * vote[i]);
            total += weights[i];
        }
        for (auto& w : weights) w /= total;
    }
    return model;
}

} // namespace classify_detail

/// Fits `spec` on `m`. Deterministic given spec.seed.
inline FittedModel fit(const ClassifierSpec& spec, const FeatureMatrix& m) {
    using namespace classify_detail;
    validate(spec);
    validate(m);
    const auto counts = std::make_pair(m.majority_count(), m.minority_count());
    if (counts.first == 0 || counts.second == 0) fail(ErrorKind::SingleClassTraining, "training data has a single class");
    const std::size_t d = m.n_cols();

    switch (spec.kind) {
    case ClassifierKind::KNN: {
        KnnModel knn;
        knn.k = std::min(as_count(spec.param("k")), m.n_rows);
        knn.index = NeighborIndex(m.values, d);
        knn.labels = m.labels;
        return {spec.kind, d, counts, std::move(knn)};
    }
    case ClassifierKind::QDA: {
        const double eps = spec.param("epsilon");
        return {spec.kind, d, counts, QdaModel{fit_gaussian(m, 0, eps), fit_gaussian(m, 1, eps)}};
    }
    case ClassifierKind::LinearSVM: return {spec.kind, d, counts, fit_svm(m, spec)};
    case ClassifierKind::DecisionTree: {
        std::vector<std::size_t> rows(m.n_rows);
        std::iota(rows.begin(), rows.end(), std::size_t{0});
        const std::vector<double> weights(m.n_rows, 1.0);
        TreeParams params{as_count(spec.param("max_depth")), as_count(spec.param("min_leaf")), as_count(spec.param("max_features"))};
        Rng rng(spec.seed);
        return {spec.kind, d, counts, TreeModel{DecisionTree::fit(m, rows, weights, params, &rng)}};
    }
    case ClassifierKind::RandomForest: {
        const std::size_t n_trees = as_count(spec.param("n_trees"));
        TreeParams params{as_count(spec.param("max_depth")), as_count(spec.param("min_leaf")),
                          std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(d)))))};
        ForestModel forest;
        forest.trees.resize(n_trees);
        // Each tree draws from its own stream, so the schedule is irrelevant.
        parallel_for(n_trees, [&](std::size_t t) {
            Rng rng(derive_seed(spec.seed, {t}));
            std::vector<std::size_t> rows(m.n_rows);
            for (auto& r : rows) r = rng.below(m.n_rows);
            std::sort(rows.begin(), rows.end());
            std::vector<double> weights(m.n_rows, 0.0);
            for (auto r : rows) weights[r] += 1.0;
            // A bootstrap row drawn c times enters once with weight c.
            rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
            forest.trees[t] = DecisionTree::fit(m, rows, weights, params, &rng);
        });
        return {spec.kind, d, counts, std::move(forest)};
    }
    case ClassifierKind::AdaBoost: return {spec.kind, d, counts, fit_adaboost(m, spec)};
    }
    fail(ErrorKind::InvalidSpec, "unknown classifier kind");
}

/// One score per row of `m`.
inline std::vector<double> score(const FittedModel& model, const FeatureMatrix& m) {
    using namespace classify_detail;
    if (m.n_cols() != model.feature_count())
        fail(ErrorKind::ShapeMismatch, "model expects " + std::to_string(model.feature_count()) + " features, got " +
                                           std::to_string(m.n_cols()));
    for (double v : m.values)
        if (!std::isfinite(v)) fail(ErrorKind::NonFiniteInput, "scoring input contains a non-finite entry");
    std::vector<double> out(m.n_rows);
    std::visit(
        [&](const auto& state) {
            using T = std::decay_t<decltype(state)>;
            for (std::size_t r = 0; r < m.n_rows; ++r) {
                const auto x = m.row(r);
                if constexpr (std::is_same_v<T, KnnModel>) {
                    const auto nbs = state.index.query(x, state.k);
                    std::size_t pos = 0;
                    for (const auto& nb : nbs) pos += state.labels[nb.index] == 1;
                    out[r] = static_cast<double>(pos) / static_cast<double>(nbs.size());
                } else if constexpr (std::is_same_v<T, QdaModel>) {
                    out[r] = state.positive.log_joint(x) - state.negative.log_joint(x);
                } else if constexpr (std::is_same_v<T, SvmModel>) {
                    std::vector<double> z(x.size());
                    state.standardizer.apply(x, z);
                    double margin = state.bias;
                    for (std::size_t c = 0; c < z.size(); ++c) margin += state.weights[c] * z[c];
                    out[r] = margin;
                } else if constexpr (std::is_same_v<T, TreeModel>) {
                    out[r] = state.tree.score(x);
                } else if constexpr (std::is_same_v<T, ForestModel>) {
                    double sum = 0.0;
                    for (const auto& t : state.trees) sum += t.score(x);
                    out[r] = sum / static_cast<double>(state.trees.size());
                } else if constexpr (std::is_same_v<T, BoostModel>) {
                    double sum = 0.0, norm = 0.0;
                    for (std::size_t i = 0; i < state.stumps.size(); ++i) {
                        sum += state.alphas[i] * (state.stumps[i].score(x) >= 0.5 ? 1.0 : -1.0);
                        norm += state.alphas[i];
                    }
                    out[r] = norm > 0.0 ? sum / norm : 0.0;
                }
            }
        },
        model.state());
    return out;
}

/// score >= threshold => 1.
inline std::vector<int> predict(const FittedModel& model, const FeatureMatrix& m, double threshold) {
    const auto scores = score(model, m);
    std::vector<int> out(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] >= threshold ? 1 : 0;
    return out;
}

inline std::vector<int> predict(const FittedModel& model, const FeatureMatrix& m) {
    return predict(model, m, model.natural_threshold());
}

} // namespace leakbench
