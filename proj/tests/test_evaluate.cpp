#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <set>

#include "leakbench/evaluate.hpp"

using namespace leakbench;

namespace {

FeatureMatrix blobs(std::size_t n_neg, std::size_t n_pos, std::size_t d, double shift, std::uint64_t seed) {
    Rng rng(seed);
    FeatureMatrix m;
    for (std::size_t c = 0; c < d; ++c) m.feature_names.push_back("f" + std::to_string(c));
    std::vector<double> row(d);
    for (std::size_t i = 0; i < n_neg + n_pos; ++i) {
        const int label = i >= n_neg ? 1 : 0;
        for (auto& v : row) v = rng.normal() + (label ? shift : 0.0);
        m.push_row(row, label, "id" + std::to_string(1000 + i));
    }
    return m;
}

std::vector<int> labels_of(std::size_t n_neg, std::size_t n_pos) {
    std::vector<int> y(n_neg, 0);
    y.insert(y.end(), n_pos, 1);
    return y;
}

// P(score_pos > score_neg) + 0.5 P(tie), over all pairs.
double pairwise_auc(const std::vector<double>& s, const std::vector<int>& y) {
    double wins = 0, pairs = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j)
            if (y[i] == 1 && y[j] == 0) {
                pairs += 1;
                wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
            }
    return wins / pairs;
}

void expect_error(ErrorKind kind, const std::function<void()>& body) {
    try {
        body();
        ADD_FAILURE() << "expected " << error_name(kind);
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), kind) << e.what();
    }
}

PipelineSpec pipeline(Placement placement, std::size_t folds = 5) {
    PipelineSpec p;
    p.sampler = {SamplerAlgorithm::SMOTE, 1.0, 5};
    p.sampler.seed = 17;
    p.classifier = {ClassifierKind::KNN, {{"k", 5}}, 23};
    p.placement = placement;
    p.n_folds = folds;
    p.seed = 99;
    p.allow_leakage = placement == Placement::BeforeSplit;
    return p;
}

} // namespace

TEST(StratifiedKFold, CohortShapedFolds) {
    const auto y = labels_of(260, 38);
    const auto folds = stratified_kfold(y, 10, 5);
    ASSERT_EQ(folds.size(), 10u);
    std::vector<int> seen(y.size(), 0);
    std::size_t min_size = 1000, max_size = 0;
    for (const auto& f : folds) {
        std::size_t pos = 0;
        for (auto i : f.test) {
            ++seen[i];
            pos += y[i];
        }
        EXPECT_TRUE(pos == 3 || pos == 4) << pos;
        EXPECT_EQ(f.train.size() + f.test.size(), y.size());
        std::set<std::size_t> test(f.test.begin(), f.test.end());
        for (auto i : f.train) EXPECT_FALSE(test.count(i));
        min_size = std::min(min_size, f.test.size());
        max_size = std::max(max_size, f.test.size());
    }
    for (int s : seen) EXPECT_EQ(s, 1);
    EXPECT_LE(max_size - min_size, 1u);
    EXPECT_EQ(stratified_kfold(y, 10, 5)[3].test, folds[3].test);
    EXPECT_NE(stratified_kfold(y, 10, 6)[3].test, folds[3].test);
}

TEST(StratifiedKFold, OnePositivePerFoldAndErrors) {
    const auto y = labels_of(5, 5);
    for (const auto& f : stratified_kfold(y, 5, 1)) {
        ASSERT_EQ(f.test.size(), 2u);
        EXPECT_NE(y[f.test[0]], y[f.test[1]]);
    }
    expect_error(ErrorKind::TooFewPerClass, [&] { stratified_kfold(labels_of(20, 4), 5, 1); });
    expect_error(ErrorKind::InvalidSpec, [&] { stratified_kfold(y, 1, 1); });
}

TEST(Auc, ReferenceExampleAndExtremes) {
    EXPECT_DOUBLE_EQ(auc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, std::vector<int>{0, 0, 1, 1}), 0.75);
    EXPECT_DOUBLE_EQ(auc(std::vector<double>{3, 4, 1, 2}, std::vector<int>{0, 0, 1, 1}), 0.0);
    EXPECT_DOUBLE_EQ(auc(std::vector<double>{1, 1, 1, 1}, std::vector<int>{0, 1, 0, 1}), 0.5);
    expect_error(ErrorKind::SingleClass, [] { auc(std::vector<double>{1, 2}, std::vector<int>{1, 1}); });
}

TEST(Auc, MatchesPairwiseCountWithTies) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        const std::size_t n = 20 + rng.below(80);
        std::vector<double> s(n);
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = i % 3 == 0;
            s[i] = static_cast<double>(rng.below(8)) + (y[i] ? 1.0 : 0.0);
        }
        EXPECT_NEAR(auc(s, y), pairwise_auc(s, y), 1e-12);
    }
}

TEST(RocCurve, TrapezoidAreaEqualsAuc) {
    Rng rng(3);
    std::vector<double> s(200);
    std::vector<int> y(200);
    for (std::size_t i = 0; i < s.size(); ++i) {
        y[i] = i % 4 == 0;
        s[i] = std::round(4.0 * (rng.normal() + y[i])) / 4.0;
    }
    const auto roc = roc_curve(s, y);
    EXPECT_EQ(roc.front().fpr, 0.0);
    EXPECT_EQ(roc.front().tpr, 0.0);
    EXPECT_TRUE(std::isinf(roc.front().threshold));
    EXPECT_DOUBLE_EQ(roc.back().fpr, 1.0);
    EXPECT_DOUBLE_EQ(roc.back().tpr, 1.0);
    double area = 0;
    for (std::size_t i = 1; i < roc.size(); ++i) {
        area += (roc[i].fpr - roc[i - 1].fpr) * 0.5 * (roc[i].tpr + roc[i - 1].tpr);
        EXPECT_LT(roc[i].threshold, roc[i - 1].threshold);
    }
    EXPECT_NEAR(area, auc(s, y), 1e-12);
}

TEST(ConfusionMetrics, MajorityVoteAndSmallCase) {
    const auto y = labels_of(260, 38);
    const std::vector<int> all_term(y.size(), 0);
    const auto a = confusion_metrics(all_term, y);
    EXPECT_NEAR(a.accuracy, 0.8725, 1e-4);
    EXPECT_EQ(a.sensitivity, 0.0);
    EXPECT_EQ(a.specificity, 1.0);
    const auto b = confusion_metrics(std::vector<int>{1, 1, 0, 0, 1, 0}, std::vector<int>{1, 0, 0, 1, 1, 0});
    EXPECT_DOUBLE_EQ(b.accuracy, 4.0 / 6.0);
    EXPECT_DOUBLE_EQ(b.sensitivity, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(b.specificity, 2.0 / 3.0);
    expect_error(ErrorKind::SingleClass, [] { confusion_metrics(std::vector<int>{1, 0}, std::vector<int>{0, 0}); });
    expect_error(ErrorKind::ShapeMismatch, [] { accuracy(std::vector<int>{1}, std::vector<int>{0, 0}); });
}

TEST(Summarize, SampleStandardDeviation) {
    const auto s = summarize(std::vector<double>{1, 2, 3, 4});
    EXPECT_DOUBLE_EQ(s.mean, 2.5);
    EXPECT_DOUBLE_EQ(s.std, std::sqrt(5.0 / 3.0));
    EXPECT_EQ(summarize(std::vector<double>{7}).std, 0.0);
}

TEST(Pipeline, AfterSplitKeepsSyntheticRowsOutOfTest) {
    const auto m = blobs(120, 20, 3, 1.0, 1);
    const auto report = run_pipeline(m, pipeline(Placement::AfterSplit));
    ASSERT_EQ(report.per_fold.size(), 5u);
    std::multiset<std::string> tested;
    for (const auto& f : report.per_fold) {
        EXPECT_EQ(f.synthetic_in_test, 0u);
        EXPECT_EQ(f.synthetic_in_train, 96u - 16u);
        EXPECT_EQ(f.train_counts.positive, f.train_counts.negative);
        std::set<std::string> train(f.train_ids.begin(), f.train_ids.end());
        for (const auto& id : f.test_ids) {
            tested.insert(id);
            EXPECT_FALSE(train.count(id));
            // Synthetic ids embed their parent id; no synthetic may derive from a test row.
            for (const auto& t : f.train_ids)
                if (t.rfind("~syn", 0) == 0) EXPECT_EQ(t.find(":" + id), std::string::npos);
        }
    }
    EXPECT_EQ(tested.size(), m.n_rows);
    for (const auto& id : m.sample_ids) EXPECT_EQ(tested.count(id), 1u);
    EXPECT_EQ(report.aggregate.size(), 4u);
}

TEST(Pipeline, BeforeSplitLeaksSyntheticRowsIntoTest) {
    const auto m = blobs(120, 20, 3, 0.0, 2);
    const auto report = run_pipeline(m, pipeline(Placement::BeforeSplit));
    std::size_t synthetic_tested = 0;
    for (const auto& f : report.per_fold) synthetic_tested += f.synthetic_in_test;
    EXPECT_EQ(synthetic_tested, 100u);
    auto spec = pipeline(Placement::BeforeSplit);
    spec.allow_leakage = false;
    expect_error(ErrorKind::LeakageNotAcknowledged, [&] { run_pipeline(m, spec); });
}

TEST(Pipeline, NonePlacementAndScheduleIndependence) {
    const auto m = blobs(100, 20, 4, 0.8, 3);
    const auto none = run_pipeline(m, pipeline(Placement::None));
    for (const auto& f : none.per_fold) EXPECT_EQ(f.synthetic_in_train + f.synthetic_in_test, 0u);

    auto spec = pipeline(Placement::AfterSplit);
    spec.classifier = {ClassifierKind::RandomForest, {{"n_trees", 10}}, 4};
    spec.standardize = true;
    const auto saved = max_jobs();
    max_jobs() = 1;
    const auto a = run_pipeline(m, spec);
    max_jobs() = 3;
    const auto b = run_pipeline(m, spec);
    max_jobs() = saved;
    for (std::size_t f = 0; f < a.per_fold.size(); ++f) EXPECT_EQ(a.per_fold[f].test_scores, b.per_fold[f].test_scores);
    EXPECT_EQ(a.aggregate.at("auc").mean, b.aggregate.at("auc").mean);
}

TEST(Pipeline, TrainingRowOrderDoesNotChangeScores) {
    const auto train = blobs(60, 15, 2, 1.0, 4);
    const auto test = blobs(20, 5, 2, 1.0, 40);
    std::vector<std::size_t> reversed(train.n_rows);
    for (std::size_t i = 0; i < train.n_rows; ++i) reversed[i] = train.n_rows - 1 - i;
    for (auto kind : {ClassifierKind::LinearSVM, ClassifierKind::RandomForest, ClassifierKind::KNN}) {
        const ClassifierSpec clf{kind, kind == ClassifierKind::RandomForest ? std::map<std::string, double>{{"n_trees", 5}}
                                                                             : std::map<std::string, double>{},
                                 1};
        const auto a = evaluate_detail::fit_and_score(clf, train, test, true);
        const auto b = evaluate_detail::fit_and_score(clf, train.subset(reversed), test, true);
        for (std::size_t i = 0; i < a.scores.size(); ++i) EXPECT_NEAR(a.scores[i], b.scores[i], 1e-12);
    }
}

TEST(Pipeline, TextAndRocOutputs) {
    const auto m = blobs(40, 10, 2, 1.0, 5);
    const auto report = run_pipeline(m, pipeline(Placement::AfterSplit));
    EXPECT_NE(to_text(report).find("placement after_split"), std::string::npos);
    const auto csv = roc_csv(report, {"note"});
    EXPECT_EQ(csv.rfind("# note\nfold,fpr,tpr,threshold\n0,0,0,inf", 0), 0u) << csv.substr(0, 60);
    for (auto p : {Placement::None, Placement::BeforeSplit, Placement::AfterSplit}) EXPECT_EQ(parse_placement(placement_name(p)), p);
}

TEST(Bootstrap, ReplaysStratifiedResamples) {
    const auto m = blobs(30, 12, 1, 0.7, 6);
    const auto x = m.column(0);
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < x.size(); ++i) (m.labels[i] ? pos : neg).push_back(i);
    std::vector<double> aucs;
    for (std::uint64_t it = 0; it < 3; ++it) {
        Rng rng(derive_seed(77, {it}));
        std::vector<double> s;
        std::vector<int> y;
        for (std::size_t d = 0; d < pos.size(); ++d) s.push_back(x[pos[rng.below(pos.size())]]), y.push_back(1);
        for (std::size_t d = 0; d < neg.size(); ++d) s.push_back(x[neg[rng.below(neg.size())]]), y.push_back(0);
        aucs.push_back(pairwise_auc(s, y));
    }
    const auto b = bootstrap_feature_auc(x, m.labels, 3, 77);
    EXPECT_NEAR(b.mean_auc, summarize(aucs).mean, 1e-12);
    EXPECT_NEAR(b.std_auc, summarize(aucs).std, 1e-12);
}

TEST(Bootstrap, NormalShiftGivesPhiOfDeltaOverRootTwo) {
    const auto m = blobs(3000, 3000, 1, 1.0, 7);
    const double expected = 0.5 * std::erfc(-(1.0 / std::sqrt(2.0)) / std::sqrt(2.0));
    EXPECT_NEAR(expected, 0.7602, 1e-4);
    const auto b = bootstrap_feature_auc(m.column(0), m.labels, 200, 1);
    EXPECT_NEAR(b.mean_auc, expected, 0.015);
    EXPECT_GT(b.std_auc, 0.0);
    EXPECT_LT(b.std_auc, 0.02);
}

TEST(Bootstrap, Errors) {
    const std::vector<double> x{1, 2, 3};
    expect_error(ErrorKind::SingleClass, [&] { bootstrap_feature_auc(x, std::vector<int>{1, 1, 1}, 5, 0); });
    expect_error(ErrorKind::InvalidSpec, [&] { bootstrap_feature_auc(x, std::vector<int>{0, 1, 1}, 0, 0); });
    expect_error(ErrorKind::ShapeMismatch, [&] { bootstrap_feature_auc(x, std::vector<int>{0, 1}, 5, 0); });
}

TEST(RankFeatures, OrdersBySeparationThenName) {
    auto m = blobs(200, 100, 1, 1.5, 8);
    FeatureMatrix r = m.empty_like();
    r.feature_names = {"strong", "inverted", "noise_b", "noise_a"};
    Rng rng(9);
    for (std::size_t i = 0; i < m.n_rows; ++i) {
        const double noise = rng.normal();
        const std::vector<double> row{m.at(i, 0), -0.5 * m.at(i, 0) + rng.normal(), noise, noise};
        r.push_row(row, m.labels[i], m.sample_ids[i]);
    }
    const auto ranks = rank_features(r, 100, 3);
    ASSERT_EQ(ranks.size(), 4u);
    EXPECT_EQ(ranks[0].feature, "strong");
    EXPECT_EQ(ranks[1].feature, "inverted");
    EXPECT_LT(ranks[1].mean_auc, 0.5);
    EXPECT_NEAR(ranks[1].separation, 0.5 - ranks[1].mean_auc, 1e-15);
    const auto csv = ranking_csv(ranks);
    EXPECT_EQ(csv.rfind("rank,feature,mean_auc,std_auc,separation\n1,strong,", 0), 0u);
    // The two noise columns differ only in their bootstrap streams.
    EXPECT_TRUE((ranks[2].feature == "noise_a" || ranks[2].feature == "noise_b"));
}

TEST(RankFeatures, IdenticalColumnsWithIdenticalStreamsTieByName) {
    const auto m = blobs(50, 20, 1, 1.0, 10);
    FeatureMatrix r = m.empty_like();
    r.feature_names = {"b"};
    for (std::size_t i = 0; i < m.n_rows; ++i) r.push_row(m.row(i), m.labels[i], m.sample_ids[i]);
    const auto one = rank_features(r, 50, 4);
    auto copy = r;
    copy.feature_names = {"a"};
    const auto other = rank_features(copy, 50, 4);
    EXPECT_EQ(one[0].mean_auc, other[0].mean_auc);
}

TEST(SamplerSearch, GridOfNineAndWinnerByInnerAuc) {
    const auto m = blobs(100, 20, 3, 1.0, 11);
    SamplerGrid grid;
    grid.algorithm = SamplerAlgorithm::SMOTE;
    grid.proportions = {0.5, 0.75, 1.0};
    grid.k_neighbors = {3, 5, 7};
    const auto candidates = expand_grid(grid);
    ASSERT_EQ(candidates.size(), 9u);
    SearchOptions options;
    options.n_folds = 5;
    const ClassifierSpec knn{ClassifierKind::KNN, {{"k", 5}}, 0};
    const auto result = sampler_search(m, knn, candidates, SearchMode::BestOverall, 12, options);
    ASSERT_EQ(result.candidates.size(), 9u);
    for (std::size_t c = 0; c < 9; ++c) {
        EXPECT_LE(result.candidates[c].inner_auc, result.candidates[result.best_index].inner_auc);
        if (c < result.best_index) EXPECT_LT(result.candidates[c].inner_auc, result.candidates[result.best_index].inner_auc);
        EXPECT_EQ(result.candidates[c].outer_fold_auc.size(), 5u);
    }
    EXPECT_EQ(result.best_config, candidates[result.best_index]);
    EXPECT_EQ(result.best_outer_auc, result.candidates[result.best_index].outer_auc);

    const auto saved = max_jobs();
    max_jobs() = 4;
    const auto again = sampler_search(m, knn, candidates, SearchMode::BestOverall, 12, options);
    max_jobs() = saved;
    for (std::size_t c = 0; c < 9; ++c) EXPECT_EQ(again.candidates[c].outer_fold_auc, result.candidates[c].outer_fold_auc);
}

TEST(SamplerSearch, TunedSameOnlyConsidersBaseAlgorithm) {
    const auto m = blobs(80, 16, 2, 1.0, 13);
    auto candidates = expand_grid({SamplerAlgorithm::ADASYN, {1.0}, {3, 5}, {}});
    const auto smote = expand_grid({SamplerAlgorithm::SMOTE, {0.5, 1.0}, {5}, {}});
    candidates.insert(candidates.end(), smote.begin(), smote.end());
    EXPECT_EQ(expand_grid({SamplerAlgorithm::ClusterSMOTE, {1.0}, {5}, {2, 3}}).size(), 2u);
    SearchOptions options;
    options.n_folds = 4;
    const ClassifierSpec knn{ClassifierKind::KNN, {}, 0};
    const auto tuned = sampler_search(m, knn, candidates, SearchMode::TunedSame, 5, options);
    ASSERT_EQ(tuned.candidates.size(), 2u);
    for (const auto& c : tuned.candidates) EXPECT_EQ(c.config.algorithm, SamplerAlgorithm::SMOTE);
    const auto best = sampler_search(m, knn, candidates, SearchMode::BestOverall, 5, options);
    EXPECT_EQ(best.candidates.size(), 4u);
    options.base_algorithm = SamplerAlgorithm::SMOTETomek;
    expect_error(ErrorKind::InvalidSpec, [&] { sampler_search(m, knn, candidates, SearchMode::TunedSame, 5, options); });
}
