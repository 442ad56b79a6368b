#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "lpart/fam.hpp"

namespace {

using lpart::ArtHyperParams;
using lpart::FamModel;
using Vec = std::vector<double>;

TEST(Fam, EmptyModelCreatesCommittedNode) {
    FamModel m({0.001, 0.9, 1.0}, 4, 2);
    m.observe(Vec{0.3, 0.3}, 2);
    ASSERT_EQ(m.size(), 1u);
    EXPECT_EQ(m.nodes()[0].class_label, 2u);
}

TEST(Fam, CorrectWinnerLearns) {
    FamModel m({0.001, 0.9, 1.0}, 2, 1);
    m.observe(Vec{0.4}, 1);
    EXPECT_EQ(m.observe(Vec{0.4}, 1), 0u);
    EXPECT_EQ(m.size(), 1u);
}

TEST(Fam, MatchTrackingCreatesNodeForConflictingLabel) {
    // V = 1 for the existing node; tracking raises vigilance to 1 + 1e-6, which nothing passes.
    FamModel m({0.001, 0.9, 1.0}, 2, 1);
    m.observe(Vec{0.4}, 1);
    EXPECT_EQ(m.observe(Vec{0.4}, 0), 1u);
    ASSERT_EQ(m.size(), 2u);
    EXPECT_EQ(m.nodes()[0].class_label, 1u);
    EXPECT_EQ(m.nodes()[1].class_label, 0u);
    EXPECT_EQ(m.nodes()[0].weight, (Vec{0.4, 1.0 - 0.4}));
}

TEST(Fam, MatchTrackingFallsThroughToSecondBestCorrectNode) {
    FamModel m({0.001, 0.5, 1.0}, 2, 1);
    m.observe(Vec{0.3}, 0);
    m.observe(Vec{0.7}, 0);  // V = 0.6: node 0 grows to the box [0.3, 0.7], w = [0.3, 0.3]
    m.observe(Vec{0.5}, 1);  // node 0 wins with V = 0.6, wrong; tracking leaves nothing -> node 1
    ASSERT_EQ(m.size(), 2u);
    // x = 0.45: T0 = 0.6/0.601 beats T1 = 0.95/1.001, but node 0 is wrong.
    // Vigilance rises to 0.6 + eps; node 1 (V = 0.95) still passes and is correct.
    EXPECT_EQ(m.observe(Vec{0.45}, 1), 1u);
    EXPECT_EQ(m.size(), 2u);
    EXPECT_NEAR(m.nodes()[1].weight[0], 0.45, 1e-12);
    EXPECT_NEAR(m.nodes()[1].weight[1], 0.5, 1e-12);
}

TEST(Fam, RejectsUnlabeledAndOutOfRange) {
    FamModel m({0.001, 0.9, 1.0}, 2, 1);
    EXPECT_THROW(m.observe(Vec{0.4}, std::nullopt), lpart::DomainError);
    EXPECT_THROW(m.observe(Vec{0.4}, 2), lpart::DomainError);
    EXPECT_THROW(m.observe(Vec{0.4, 0.1}, 0), lpart::DomainError);
}

TEST(Fam, PredictExamples) {
    FamModel single({0.001, 0.9, 1.0}, 4, 2);
    single.observe(Vec{0.1, 0.9}, 3);
    EXPECT_EQ(single.predict(Vec{0.7, 0.2}), 3u);

    FamModel two({0.001, 0.99, 1.0}, 2, 2);
    two.observe(Vec{0.1, 0.9}, 0);
    two.observe(Vec{0.8, 0.3}, 1);
    EXPECT_EQ(two.predict(Vec{0.8, 0.3}), 1u);
    EXPECT_EQ(two.predict(Vec{0.1, 0.9}), 0u);

    FamModel empty({0.001, 0.9, 1.0}, 2, 1);
    EXPECT_THROW(empty.predict(Vec{0.5}), lpart::StateError);
}

TEST(Fam, FallbackUsesHigherChoice) {
    // Trained at rho = 0.85: node A from 0.2 (class 0) = [0.2, 0.8];
    // node B from 0.7 then 0.8 (class 1) = [0.7, 0.2].
    // Query 0.45: V_A = 0.75, V_B = 0.65, neither passes 0.85.
    // T_A = 0.75 / 1.001 = 0.74925..., T_B = 0.65 / 0.901 = 0.72142... -> class 0.
    FamModel m({0.001, 0.85, 1.0}, 2, 1);
    m.observe(Vec{0.2}, 0);
    m.observe(Vec{0.7}, 1);
    m.observe(Vec{0.8}, 1);
    ASSERT_EQ(m.size(), 2u);
    EXPECT_NEAR(m.nodes()[1].weight[0], 0.7, 1e-12);
    EXPECT_NEAR(m.nodes()[1].weight[1], 0.2, 1e-12);
    const Vec I = lpart::complement_code(Vec{0.45});
    EXPECT_NEAR(lpart::choice(std::span<const double>(I), std::span<const double>(m.nodes()[0].weight), 0.001),
                0.75 / 1.001, 1e-12);
    EXPECT_NEAR(lpart::choice(std::span<const double>(I), std::span<const double>(m.nodes()[1].weight), 0.001),
                0.65 / 0.901, 1e-12);
    EXPECT_EQ(m.predict(Vec{0.45}), 0u);
}

TEST(Fam, LearnedSampleIsRecalledAndLabelsNeverChange) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0, 1);
    FamModel m({0.001, 0.75, 1.0}, 3, 2);
    std::vector<lpart::ClassIndex> labels;
    for (int i = 0; i < 500; ++i) {
        const Vec x{u(rng), u(rng)};
        const auto y = static_cast<lpart::ClassIndex>(rng() % 3);
        const auto before = m.size();
        m.observe(x, y);
        EXPECT_GE(m.size(), before);
        EXPECT_EQ(m.predict(x), y);
        for (std::size_t j = 0; j < labels.size(); ++j) EXPECT_EQ(m.nodes()[j].class_label, labels[j]);
        labels.clear();
        for (const auto& n : m.nodes()) labels.push_back(n.class_label);
    }
}

TEST(Fam, SnapshotRoundTrip) {
    FamModel m({0.001, 0.8, 0.5}, 3, 2);
    m.observe(Vec{0.1, 0.2}, 0);
    m.observe(Vec{0.9, 0.8}, 2);
    const auto bytes = m.snapshot();
    const auto r = FamModel::restore(bytes);
    EXPECT_EQ(r.snapshot(), bytes);
    EXPECT_EQ(r.predict(Vec{0.9, 0.8}), 2u);
    auto wrong_magic = bytes;
    wrong_magic[0] = 'L';
    EXPECT_THROW(FamModel::restore(wrong_magic), lpart::FormatError);
    EXPECT_THROW(FamModel::restore(std::span(bytes.data(), bytes.size() - 2)), lpart::FormatError);
}

}  // namespace
