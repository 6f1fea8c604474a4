#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "leakbench/classify.hpp"

using namespace leakbench;

namespace {

FeatureMatrix blobs(std::size_t n_neg, std::size_t n_pos, std::size_t d, double shift, std::uint64_t seed, double pos_scale = 1.0) {
    Rng rng(seed);
    FeatureMatrix m;
    for (std::size_t c = 0; c < d; ++c) m.feature_names.push_back("f" + std::to_string(c));
    std::vector<double> row(d);
    for (std::size_t i = 0; i < n_neg + n_pos; ++i) {
        const int label = i >= n_neg ? 1 : 0;
        for (auto& v : row) v = label ? shift + pos_scale * rng.normal() : rng.normal();
        m.push_row(row, label, "r" + std::to_string(i));
    }
    return m;
}

double accuracy_of(const std::vector<int>& pred, const FeatureMatrix& m) {
    std::size_t ok = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) ok += pred[i] == m.labels[i];
    return static_cast<double>(ok) / static_cast<double>(pred.size());
}

ClassifierSpec spec_of(ClassifierKind kind, std::map<std::string, double> params = {}, std::uint64_t seed = 3) {
    return {kind, std::move(params), seed};
}

void expect_error(ErrorKind kind, const std::function<void()>& body) {
    try {
        body();
        ADD_FAILURE() << "expected " << error_name(kind);
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), kind) << e.what();
    }
}

// Closed-form 2-d Gaussian log density plus log prior (sample covariance).
double gaussian2_log_joint(const FeatureMatrix& m, int label, double x0, double x1) {
    double n = 0, m0 = 0, m1 = 0;
    for (std::size_t r = 0; r < m.n_rows; ++r)
        if (m.labels[r] == label) {
            ++n;
            m0 += m.at(r, 0);
            m1 += m.at(r, 1);
        }
    m0 /= n;
    m1 /= n;
    double a = 0, b = 0, c = 0;
    for (std::size_t r = 0; r < m.n_rows; ++r)
        if (m.labels[r] == label) {
            const double u = m.at(r, 0) - m0, v = m.at(r, 1) - m1;
            a += u * u;
            b += u * v;
            c += v * v;
        }
    a /= n - 1;
    b /= n - 1;
    c /= n - 1;
    const double det = a * c - b * b;
    const double u = x0 - m0, v = x1 - m1;
    const double quad = (c * u * u - 2 * b * u * v + a * v * v) / det;
    return -0.5 * std::log(det) - 0.5 * quad + std::log(n / double(m.n_rows));
}

// Exhaustive Gini search over midpoints on one feature: returns the best threshold.
double best_gini_threshold(const std::vector<double>& x, const std::vector<int>& y) {
    std::vector<double> values = x;
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    double best = std::numeric_limits<double>::infinity(), best_thr = 0;
    for (std::size_t i = 0; i + 1 < values.size(); ++i) {
        const double thr = 0.5 * (values[i] + values[i + 1]);
        double nl = 0, pl = 0, nr = 0, pr = 0;
        for (std::size_t j = 0; j < x.size(); ++j) (x[j] <= thr ? nl : nr) += 1, (x[j] <= thr ? pl : pr) += y[j];
        const double g = nl * 2 * (pl / nl) * (1 - pl / nl) + nr * 2 * (pr / nr) * (1 - pr / nr);
        if (g < best - 1e-12) {
            best = g;
            best_thr = thr;
        }
    }
    return best_thr;
}

} // namespace

TEST(Knn, ScoreIsNeighbourFraction) {
    const auto train = blobs(40, 20, 3, 1.0, 1);
    const auto test = blobs(10, 10, 3, 1.0, 2);
    const auto model = fit(spec_of(ClassifierKind::KNN, {{"k", 7}}), train);
    const auto scores = score(model, test);
    for (std::size_t q = 0; q < test.n_rows; ++q) {
        std::vector<std::pair<double, std::size_t>> d;
        for (std::size_t j = 0; j < train.n_rows; ++j) d.emplace_back(squared_distance(test.row(q), train.row(j)), j);
        std::sort(d.begin(), d.end());
        double pos = 0;
        for (int i = 0; i < 7; ++i) pos += train.labels[d[i].second];
        EXPECT_DOUBLE_EQ(scores[q], pos / 7.0);
    }
}

TEST(Knn, OneNeighbourMemorisesTraining) {
    const auto train = blobs(30, 30, 2, 0.5, 4);
    const auto model = fit(spec_of(ClassifierKind::KNN, {{"k", 1}}), train);
    EXPECT_DOUBLE_EQ(accuracy_of(predict(model, train), train), 1.0);
}

TEST(Qda, MatchesClosedFormLogOdds) {
    const auto train = blobs(50, 30, 2, 1.0, 5, 2.0);
    const auto model = fit(spec_of(ClassifierKind::QDA, {{"epsilon", 0}}), train);
    const auto test = blobs(5, 5, 2, 0.5, 6);
    const auto scores = score(model, test);
    for (std::size_t r = 0; r < test.n_rows; ++r) {
        const double x0 = test.at(r, 0), x1 = test.at(r, 1);
        EXPECT_NEAR(scores[r], gaussian2_log_joint(train, 1, x0, x1) - gaussian2_log_joint(train, 0, x0, x1), 1e-9);
    }
}

TEST(Qda, SeparatesBlobsAndSurvivesSingularCovariance) {
    const auto train = blobs(200, 200, 4, 2.5, 7);
    const auto test = blobs(200, 200, 4, 2.5, 8);
    EXPECT_GT(accuracy_of(predict(fit(spec_of(ClassifierKind::QDA), train), test), test), 0.95);
    auto collinear = train;
    for (std::size_t r = 0; r < collinear.n_rows; ++r) collinear.at(r, 3) = 2.0 * collinear.at(r, 0);
    const auto scores = score(fit(spec_of(ClassifierKind::QDA), collinear), collinear);
    for (double s : scores) EXPECT_TRUE(std::isfinite(s));
}

TEST(LinearSvm, SeparatesAndIsScaleInvariant) {
    const auto train = blobs(150, 150, 3, 2.0, 9);
    const auto test = blobs(150, 150, 3, 2.0, 10);
    const auto spec = spec_of(ClassifierKind::LinearSVM);
    const auto model = fit(spec, train);
    EXPECT_GT(accuracy_of(predict(model, test), test), 0.9);
    auto scaled_train = train, scaled_test = test;
    for (auto& v : scaled_train.values) v *= 1000.0;
    for (auto& v : scaled_test.values) v *= 1000.0;
    const auto a = score(model, test);
    const auto b = score(fit(spec, scaled_train), scaled_test);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-8);
}

TEST(DecisionTree, RootSplitMatchesExhaustiveGiniSearch) {
    const auto train = blobs(30, 20, 1, 1.0, 11);
    const auto model = fit(spec_of(ClassifierKind::DecisionTree, {{"max_depth", 1}}), train);
    const auto& tree = std::get<classify_detail::TreeModel>(model.state()).tree;
    ASSERT_EQ(tree.node_count(), 3u);
    EXPECT_DOUBLE_EQ(tree.nodes()[0].threshold, best_gini_threshold(train.column(0), train.labels));
}

TEST(DecisionTree, FullyGrownTreeFitsTrainingData) {
    const auto train = blobs(40, 40, 3, 0.3, 12);
    const auto model = fit(spec_of(ClassifierKind::DecisionTree), train);
    EXPECT_DOUBLE_EQ(accuracy_of(predict(model, train), train), 1.0);
    for (double s : score(model, train)) EXPECT_TRUE(s == 0.0 || s == 1.0);
}

TEST(RandomForest, ScoresAreVoteFractionsAndScheduleFree) {
    const auto train = blobs(60, 40, 4, 1.5, 13);
    const auto test = blobs(30, 30, 4, 1.5, 14);
    const auto spec = spec_of(ClassifierKind::RandomForest, {{"n_trees", 25}});
    const auto saved = max_jobs();
    max_jobs() = 1;
    const auto serial = score(fit(spec, train), test);
    max_jobs() = 4;
    const auto parallel = score(fit(spec, train), test);
    max_jobs() = saved;
    EXPECT_EQ(serial, parallel);
    for (double s : serial) {
        EXPECT_GE(s, 0.0);
        EXPECT_LE(s, 1.0);
        EXPECT_NEAR(s * 25.0, std::round(s * 25.0), 1e-9);
    }
    EXPECT_GT(accuracy_of(predict(fit(spec, train), test), test), 0.8);
    EXPECT_NE(score(fit(spec_of(ClassifierKind::RandomForest, {{"n_trees", 25}}, 99), train), test), serial);
}

TEST(AdaBoost, ScoreRangeAndSeparableStop) {
    const auto train = blobs(60, 60, 3, 1.0, 15);
    const auto model = fit(spec_of(ClassifierKind::AdaBoost), train);
    for (double s : score(model, train)) {
        EXPECT_GE(s, -1.0);
        EXPECT_LE(s, 1.0);
    }
    // One perfect stump ends boosting immediately.
    const auto separable = blobs(20, 20, 1, 50.0, 16);
    const auto stop = fit(spec_of(ClassifierKind::AdaBoost), separable);
    EXPECT_EQ(std::get<classify_detail::BoostModel>(stop.state()).stumps.size(), 1u);
    EXPECT_DOUBLE_EQ(accuracy_of(predict(stop, separable), separable), 1.0);
}

TEST(Predict, InfiniteThresholdsAndNaturalThreshold) {
    const auto train = blobs(20, 20, 2, 1.0, 17);
    for (auto kind : {ClassifierKind::KNN, ClassifierKind::QDA, ClassifierKind::LinearSVM, ClassifierKind::DecisionTree,
                      ClassifierKind::RandomForest, ClassifierKind::AdaBoost}) {
        const auto model = fit(spec_of(kind, kind == ClassifierKind::RandomForest ? std::map<std::string, double>{{"n_trees", 5}}
                                                                                    : std::map<std::string, double>{}),
                               train);
        const auto all = predict(model, train, -std::numeric_limits<double>::infinity());
        const auto none = predict(model, train, std::numeric_limits<double>::infinity());
        EXPECT_EQ(std::count(all.begin(), all.end(), 1), 40);
        EXPECT_EQ(std::count(none.begin(), none.end(), 1), 0);
        EXPECT_EQ(predict(model, train), predict(model, train, model.natural_threshold()));
        EXPECT_EQ(model.training_class_counts(), (std::pair<std::size_t, std::size_t>{20, 20}));
        EXPECT_EQ(parse_classifier(classifier_name(kind)), kind);
    }
}

TEST(Fit, DeterministicGivenSeed) {
    const auto train = blobs(30, 30, 3, 1.0, 18);
    for (auto kind : {ClassifierKind::LinearSVM, ClassifierKind::DecisionTree, ClassifierKind::RandomForest}) {
        auto spec = spec_of(kind, kind == ClassifierKind::RandomForest ? std::map<std::string, double>{{"n_trees", 5}}
                                                                        : std::map<std::string, double>{});
        EXPECT_EQ(score(fit(spec, train), train), score(fit(spec, train), train));
    }
}

TEST(Fit, Errors) {
    auto one_class = blobs(10, 0, 2, 0.0, 19);
    expect_error(ErrorKind::SingleClassTraining, [&] { fit(spec_of(ClassifierKind::KNN), one_class); });
    const auto train = blobs(10, 10, 2, 1.0, 20);
    const auto model = fit(spec_of(ClassifierKind::KNN), train);
    expect_error(ErrorKind::ShapeMismatch, [&] { score(model, blobs(2, 2, 3, 0.0, 1)); });
    auto bad = train;
    bad.at(0, 1) = std::numeric_limits<double>::infinity();
    expect_error(ErrorKind::NonFiniteInput, [&] { score(model, bad); });
    expect_error(ErrorKind::InvalidSpec, [&] { fit(spec_of(ClassifierKind::KNN, {{"k", 0}}), train); });
    expect_error(ErrorKind::InvalidSpec, [&] { fit(spec_of(ClassifierKind::QDA, {{"k", 3}}), train); });
    expect_error(ErrorKind::InvalidSpec, [] { parse_classifier("Perceptron"); });
}
