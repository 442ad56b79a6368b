#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "lpart/experiment.hpp"
#include "lpart/report.hpp"

namespace {

using lpart::ExperimentConfig;
using lpart::ModelKind;

lpart::SynthSplit blobs(double spread = 0.02, std::uint64_t seed = 21) {
    return lpart::synth_split({4, 4, 100, spread, seed}, 30);
}

double nearest_centroid_accuracy(const lpart::SynthSplit& s) {
    std::size_t correct = 0;
    for (const auto& x : s.test.samples) {
        std::size_t best = 0;
        double best_d = 1e300;
        for (std::size_t c = 0; c < s.centers.size(); ++c) {
            double d = 0;
            for (std::size_t i = 0; i < x.features.size(); ++i)
                d += (x.features[i] - s.centers[c][i]) * (x.features[i] - s.centers[c][i]);
            if (d < best_d) best_d = d, best = c;
        }
        correct += best == *x.label;
    }
    return static_cast<double>(correct) / static_cast<double>(s.test.samples.size());
}

ExperimentConfig base_config() {
    ExperimentConfig c;
    c.lpart.art.rho = 0.8;
    c.trials = 3;
    c.seed = 100;
    c.threads = 1;
    return c;
}

TEST(Summarize, PopulationStd) {
    const std::vector<double> v{0.5, 0.6, 0.7};
    const auto s = lpart::summarize(v);
    EXPECT_NEAR(s.mean, 0.6, 1e-15);
    EXPECT_NEAR(s.std, 0.0816496580927726, 1e-15);
    const std::vector<double> one{0.42};
    EXPECT_EQ(lpart::summarize(one).std, 0.0);
    EXPECT_EQ(lpart::summarize(one).mean, 0.42);
}

TEST(Config, Validation) {
    auto c = base_config();
    EXPECT_NO_THROW(c.validate());
    c.model = ModelKind::kFam;
    c.use_unlabeled = true;
    EXPECT_THROW(c.validate(), lpart::ConfigError);
    c = base_config();
    c.label_rate = 1.2;
    EXPECT_THROW(c.validate(), lpart::ConfigError);
    c = base_config();
    c.trials = 0;
    EXPECT_THROW(c.validate(), lpart::ConfigError);
    c = base_config();
    c.lpart.c_uncert = 1.0;
    EXPECT_THROW(c.validate(), lpart::ConfigError);
}

TEST(Protocol, SemiSupervisedRequiresOneEpoch) {
    const auto d = blobs();
    auto c = base_config();
    c.epochs = 2;
    EXPECT_THROW(lpart::run_semi_supervised(c, d.train, d.test), lpart::ConfigError);
}

TEST(Protocol, DataChecks) {
    const auto d = blobs();
    auto test = d.test;
    test.samples[0].label.reset();
    EXPECT_THROW(lpart::run_semi_supervised(base_config(), d.train, test), lpart::ConfigError);
    auto narrow = lpart::synth_split({4, 3, 10, 0.02, 1}, 5);
    EXPECT_THROW(lpart::run_semi_supervised(base_config(), d.train, narrow.test), lpart::ConfigError);
}

TEST(Protocol, FullySupervisedSeparableBlobs) {
    const auto d = blobs();
    ASSERT_GE(nearest_centroid_accuracy(d), 0.99);
    for (auto kind : {ModelKind::kLpart, ModelKind::kFam}) {
        auto c = base_config();
        c.model = kind;
        const auto r = lpart::run_semi_supervised(c, d.train, d.test);
        ASSERT_EQ(r.trials.size(), 3u);
        for (const auto& t : r.trials) {
            EXPECT_EQ(t.train_size, d.train.samples.size());
            EXPECT_EQ(t.labeled_count, d.train.samples.size());
            EXPECT_GE(t.epochs[0].accuracy, 0.99) << lpart::to_string(kind);
        }
    }
}

TEST(Protocol, NoLabelsMeansAbstain) {
    const auto d = blobs();
    auto c = base_config();
    c.label_rate = 0.0;
    c.use_unlabeled = true;
    const auto r = lpart::run_semi_supervised(c, d.train, d.test);
    for (const auto& t : r.trials) {
        const auto& m = t.epochs[0];
        EXPECT_EQ(m.accuracy, 0.0);
        EXPECT_EQ(m.abstain_count, d.test.samples.size());
        EXPECT_FALSE(m.filtered_accuracy.has_value());
        EXPECT_EQ(m.uncertain_rate, 1.0);
    }
    EXPECT_FALSE(r.aggregate[0].filtered_accuracy.has_value());

    // Labeled-only with no labels: empty model, every prediction abstains.
    c.use_unlabeled = false;
    const auto e = lpart::run_semi_supervised(c, d.train, d.test);
    EXPECT_EQ(e.trials[0].train_size, 0u);
    EXPECT_EQ(e.trials[0].epochs[0].node_count, 0u);
    EXPECT_EQ(e.trials[0].epochs[0].abstain_count, d.test.samples.size());
}

TEST(Protocol, ContinualOneEpochMatchesSemiSupervised) {
    const auto d = blobs(0.08);
    auto c = base_config();
    c.label_rate = 0.1;
    c.use_unlabeled = true;
    auto semi = lpart::report_json(lpart::run_semi_supervised(c, d.train, d.test));
    auto cont = lpart::report_json(lpart::run_continual(c, d.train, d.test));
    EXPECT_EQ(semi["protocol"], "semi-supervised");
    EXPECT_EQ(cont["protocol"], "continual");
    EXPECT_EQ(semi["trials"], cont["trials"]);
    EXPECT_EQ(semi["aggregate"], cont["aggregate"]);
}

TEST(Protocol, TrialsAreIndependentOfTrialCountAndThreads) {
    const auto d = blobs(0.08);
    auto c = base_config();
    c.label_rate = 0.2;
    c.use_unlabeled = true;
    c.epochs = 3;
    c.reshuffle_epochs = true;
    const auto three = lpart::run_continual(c, d.train, d.test);
    c.trials = 1;
    c.seed = 102;
    const auto single = lpart::run_continual(c, d.train, d.test);
    auto a = lpart::report_json(three)["trials"][2];
    auto b = lpart::report_json(single)["trials"][0];
    a.erase("trial");
    b.erase("trial");
    EXPECT_EQ(a, b);

    c.trials = 3;
    c.seed = 100;
    c.threads = 3;
    EXPECT_EQ(lpart::report_json(lpart::run_continual(c, d.train, d.test))["trials"],
              lpart::report_json(three)["trials"]);
}

TEST(Protocol, AggregateMatchesTrials) {
    const auto d = blobs(0.08);
    auto c = base_config();
    c.label_rate = 0.3;
    c.use_unlabeled = true;
    c.epochs = 2;
    const auto r = lpart::run_continual(c, d.train, d.test);
    ASSERT_EQ(r.aggregate.size(), 2u);
    for (std::uint32_t e = 0; e < 2; ++e) {
        std::vector<double> acc;
        for (const auto& t : r.trials) acc.push_back(t.epochs[e].accuracy);
        const auto s = lpart::summarize(acc);
        EXPECT_EQ(r.aggregate[e].accuracy.mean, s.mean);
        EXPECT_EQ(r.aggregate[e].accuracy.std, s.std);
        EXPECT_EQ(r.aggregate[e].epoch, e + 1);
    }
}

TEST(Evaluate, FilteredMetricsAgreeWithPredictions) {
    const auto d = blobs(0.1);
    auto c = base_config();
    c.trials = 1;
    c.label_rate = 0.05;
    c.use_unlabeled = true;
    const auto r = lpart::run_semi_supervised(c, d.train, d.test);
    const auto& m = r.trials[0].epochs[0];
    EXPECT_EQ(m.test_size, d.test.samples.size());
    EXPECT_NEAR(m.uncertain_rate, 1.0 - static_cast<double>(m.filtered_count) / static_cast<double>(m.test_size),
                1e-15);
    EXPECT_LE(m.filtered_count + m.abstain_count, m.test_size);
}

TEST(Report, JsonIsDeterministic) {
    const auto d = blobs(0.08);
    auto c = base_config();
    c.label_rate = 0.2;
    c.use_unlabeled = true;
    const auto a = lpart::to_json(lpart::run_semi_supervised(c, d.train, d.test));
    const auto b = lpart::to_json(lpart::run_semi_supervised(c, d.train, d.test));
    EXPECT_EQ(a, b);
    const auto j = nlohmann::json::parse(a);
    EXPECT_TRUE(j.contains("protocol"));
    EXPECT_TRUE(j.contains("config"));
    EXPECT_TRUE(j.contains("trials"));
    EXPECT_TRUE(j.contains("aggregate"));
    EXPECT_EQ(j["config"]["rho"], 0.8);
    EXPECT_EQ(j["config"]["num_classes"], 4);
}

TEST(Report, CsvLayout) {
    const auto d = blobs(0.08);
    auto c = base_config();
    c.trials = 2;
    c.epochs = 2;
    const auto csv = lpart::to_csv(lpart::run_continual(c, d.train, d.test));
    std::istringstream in(csv);
    std::string line;
    std::size_t comments = 0, rows = 0;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.rfind("# ", 0) == 0) {
            ++comments;
            continue;
        }
        if (!header) {
            EXPECT_EQ(line, "scope,trial,epoch,statistic,accuracy,filtered_accuracy,uncertain_rate,node_count,abstain_count");
            header = true;
            continue;
        }
        EXPECT_EQ(std::count(line.begin(), line.end(), ','), 8) << line;
        ++rows;
    }
    EXPECT_GT(comments, 1u);
    EXPECT_EQ(rows, 2u * 2u + 2u * 2u);
}

TEST(Report, EmitToUnwritablePath) {
    const auto d = blobs();
    const auto r = lpart::run_semi_supervised(base_config(), d.train, d.test);
    EXPECT_THROW(lpart::report_emit(r, "/nonexistent_dir/x/report.json", lpart::ReportFormat::kJson), lpart::IoError);
    const auto p = std::filesystem::temp_directory_path() / "lpart_report_test.csv";
    lpart::report_emit(r, p, lpart::ReportFormat::kCsv);
    EXPECT_GT(std::filesystem::file_size(p), 0u);
    std::filesystem::remove(p);
}

}  // namespace
