/**
 * @file experiment.hpp
 * @brief Multi-trial semi-supervised and continual-learning protocols.
 *
 * A trial t uses seed = base_seed + t: the training stream is shuffled, its
 * labels are masked at `label_rate`, unlabeled samples are dropped when
 * `use_unlabeled` is off, and the model learns one pass per epoch. The test
 * stream is evaluated after every epoch.
 */

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "fam.hpp"
#include "lpart_model.hpp"
#include "stream_io.hpp"

namespace lpart {

enum class ModelKind { kLpart, kFam };

inline const char* to_string(ModelKind k) { return k == ModelKind::kLpart ? "lpart" : "fam"; }

struct ExperimentConfig {
    ModelKind model = ModelKind::kLpart;
    LpartHyperParams lpart;  // num_classes is taken from the data
    double fam_epsilon = FamModel::kDefaultEpsilon;
    double label_rate = 1.0;
    bool use_unlabeled = false;
    std::uint32_t epochs = 1;
    std::uint32_t trials = 1;
    std::uint64_t seed = 0;
    double theta1 = 0.5;
    double theta2 = 0.5;
    bool reshuffle_epochs = false;
    unsigned threads = 0;  // 0 = hardware concurrency; never affects results
    std::string train_path;
    std::string test_path;

    void validate() const {
        if (trials < 1) throw ConfigError("trials must be >= 1");
        if (epochs < 1) throw ConfigError("epochs must be >= 1");
        if (!(label_rate >= 0.0 && label_rate <= 1.0)) throw ConfigError("label_rate must lie in [0, 1]");
        if (!(theta1 >= 0.0) || !(theta2 >= 0.0)) throw ConfigError("uncertainty thresholds must be >= 0");
        if (model == ModelKind::kFam && use_unlabeled)
            throw ConfigError("FAM is fully supervised and cannot use unlabeled samples");
        try {
            lpart.art.validate();
            if (model == ModelKind::kLpart) {
                auto p = lpart;
                p.num_classes = std::max<std::uint32_t>(p.num_classes, 1);
                p.validate();
            }
        } catch (const DomainError& e) {
            throw ConfigError(e.what());
        }
    }
};

struct EpochMetrics {
    std::uint32_t epoch = 0;  // 1-based
    double accuracy = 0.0;    // abstentions count as wrong
    std::optional<double> filtered_accuracy;  // over samples with u1 <= θ1 and u2 <= θ2; none if no sample passes
    std::size_t filtered_count = 0;
    double uncertain_rate = 0.0;  // 1 - filtered_count / test_size
    std::size_t node_count = 0;
    std::size_t abstain_count = 0;
    std::size_t test_size = 0;
};

struct TrialReport {
    std::uint32_t trial = 0;
    std::uint64_t seed = 0;
    std::size_t train_size = 0;    // samples per epoch after masking / dropping
    std::size_t labeled_count = 0;  // labeled samples per epoch
    std::vector<EpochMetrics> epochs;
};

struct Summary {
    double mean = 0.0;
    double std = 0.0;  // population form
};

/// Mean and population standard deviation.
inline Summary summarize(std::span<const double> values) {
    if (values.empty()) return {};
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(values.size());
    return {mean, std::sqrt(var)};
}

struct EpochAggregate {
    std::uint32_t epoch = 0;
    Summary accuracy;
    std::optional<Summary> filtered_accuracy;  // over the trials where it is defined
    std::size_t filtered_trials = 0;
    Summary uncertain_rate;
    Summary node_count;
    Summary abstain_count;
};

struct ExperimentReport {
    std::string protocol;
    ExperimentConfig config;
    std::vector<TrialReport> trials;
    std::vector<EpochAggregate> aggregate;
};

namespace detail {

// Either learner behind one interface for the protocol loop.
class AnyModel {
public:
    AnyModel(const ExperimentConfig& cfg, std::uint32_t num_classes, std::size_t dim)
        : model_(make(cfg, num_classes, dim)) {}

    void observe(std::span<const double> x, std::optional<ClassIndex> y) {
        if (auto* m = std::get_if<LpartModel>(&model_)) {
            m->observe(x, y);
        } else if (y) {
            std::get<FamModel>(model_).observe(x, y);
        }
    }

    std::size_t size() const {
        return std::visit([](const auto& m) { return m.size(); }, model_);
    }

    // FAM has no uncertainty model: its predictions are always treated as certain.
    Prediction predict(std::span<const double> x) const {
        if (const auto* m = std::get_if<LpartModel>(&model_)) return m->predict(x);
        const auto& fam = std::get<FamModel>(model_);
        Prediction p;
        p.label = fam.predict(x);
        p.u1 = 0.0;
        p.u2 = 0.0;
        return p;
    }

private:
    using Variant = std::variant<LpartModel, FamModel>;

    static Variant make(const ExperimentConfig& cfg, std::uint32_t num_classes, std::size_t dim) {
        if (cfg.model == ModelKind::kFam) return FamModel(cfg.lpart.art, num_classes, dim, cfg.fam_epsilon);
        auto p = cfg.lpart;
        p.num_classes = num_classes;
        return LpartModel(p, dim);
    }

    Variant model_;
};

inline EpochMetrics evaluate(const AnyModel& model, const FeatureSet& test, const ExperimentConfig& cfg) {
    EpochMetrics m;
    m.node_count = model.size();
    m.test_size = test.samples.size();
    std::size_t correct = 0;
    std::size_t filtered_correct = 0;
    std::vector<double> x(test.dim);
    for (const auto& s : test.samples) {
        Prediction p;  // empty model: abstain with maximal uncertainty
        if (model.size() > 0) {
            std::copy(s.features.begin(), s.features.end(), x.begin());
            p = model.predict(x);
        }
        const bool ok = !p.abstained() && *p.label == *s.label;
        if (p.abstained()) ++m.abstain_count;
        if (ok) ++correct;
        if (!p.abstained() && p.u1 <= cfg.theta1 && p.u2 <= cfg.theta2) {
            ++m.filtered_count;
            if (ok) ++filtered_correct;
        }
    }
    if (m.test_size > 0) {
        m.accuracy = static_cast<double>(correct) / static_cast<double>(m.test_size);
        m.uncertain_rate = 1.0 - static_cast<double>(m.filtered_count) / static_cast<double>(m.test_size);
    }
    if (m.filtered_count > 0)
        m.filtered_accuracy = static_cast<double>(filtered_correct) / static_cast<double>(m.filtered_count);
    return m;
}

inline std::uint64_t epoch_shuffle_seed(std::uint64_t trial_seed, std::uint32_t epoch) {
    return trial_seed + 0x9E3779B97F4A7C15ull * epoch;
}

inline TrialReport run_trial(const ExperimentConfig& cfg, const FeatureSet& train, const FeatureSet& test,
                             std::uint32_t t) {
    TrialReport report;
    report.trial = t;
    report.seed = cfg.seed + t;

    FeatureSet stream = mask_labels(shuffle(train, report.seed), {cfg.label_rate, report.seed});
    if (!cfg.use_unlabeled) stream = drop_unlabeled(std::move(stream));
    report.train_size = stream.samples.size();
    report.labeled_count = stream.labeled_count();

    AnyModel model(cfg, train.num_classes, train.dim);
    std::vector<double> x(train.dim);
    for (std::uint32_t e = 0; e < cfg.epochs; ++e) {
        const FeatureSet* order = &stream;
        FeatureSet reshuffled;
        if (cfg.reshuffle_epochs && e > 0) {
            reshuffled = shuffle(stream, epoch_shuffle_seed(report.seed, e));
            order = &reshuffled;
        }
        for (const auto& s : order->samples) {
            std::copy(s.features.begin(), s.features.end(), x.begin());
            model.observe(x, s.label);
        }
        auto metrics = evaluate(model, test, cfg);
        metrics.epoch = e + 1;
        report.epochs.push_back(metrics);
    }
    return report;
}

inline std::vector<EpochAggregate> aggregate(const std::vector<TrialReport>& trials, std::uint32_t epochs) {
    std::vector<EpochAggregate> out;
    for (std::uint32_t e = 0; e < epochs; ++e) {
        std::vector<double> acc, filt, unc, nodes, abst;
        for (const auto& t : trials) {
            const auto& m = t.epochs[e];
            acc.push_back(m.accuracy);
            if (m.filtered_accuracy) filt.push_back(*m.filtered_accuracy);
            unc.push_back(m.uncertain_rate);
            nodes.push_back(static_cast<double>(m.node_count));
            abst.push_back(static_cast<double>(m.abstain_count));
        }
        EpochAggregate a;
        a.epoch = e + 1;
        a.accuracy = summarize(acc);
        if (!filt.empty()) a.filtered_accuracy = summarize(filt);
        a.filtered_trials = filt.size();
        a.uncertain_rate = summarize(unc);
        a.node_count = summarize(nodes);
        a.abstain_count = summarize(abst);
        out.push_back(a);
    }
    return out;
}

inline void check_data(const FeatureSet& train, const FeatureSet& test) {
    if (train.dim == 0) throw ConfigError("training stream has dimension 0");
    if (train.dim != test.dim)
        throw ConfigError("train dimension " + std::to_string(train.dim) + " differs from test dimension " +
                          std::to_string(test.dim));
    if (train.num_classes == 0) throw ConfigError("training stream declares no classes");
    for (const auto& s : test.samples) {
        if (!s.label) throw ConfigError("test stream must be fully labeled");
        if (*s.label >= train.num_classes) throw ConfigError("test label outside the training class range");
    }
}

inline ExperimentReport run_protocol(std::string protocol, const ExperimentConfig& cfg, const FeatureSet& train,
                                     const FeatureSet& test) {
    cfg.validate();
    check_data(train, test);

    ExperimentReport report;
    report.protocol = std::move(protocol);
    report.config = cfg;
    report.config.lpart.num_classes = train.num_classes;
    report.trials.resize(cfg.trials);

    // Trials are independent; results land in trial order whatever the schedule.
    unsigned workers = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, cfg.trials);
    std::atomic<std::uint32_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (std::uint32_t t; (t = next.fetch_add(1)) < cfg.trials;) {
            try {
                report.trials[t] = run_trial(cfg, train, test, t);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < workers; ++i) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);

    report.aggregate = aggregate(report.trials, cfg.epochs);
    return report;
}

}  // namespace detail

/// Single pass over the masked stream per trial; epochs must be 1.
inline ExperimentReport run_semi_supervised(const ExperimentConfig& cfg, const FeatureSet& train,
                                            const FeatureSet& test) {
    if (cfg.epochs != 1) throw ConfigError("the semi-supervised protocol trains for exactly one epoch");
    return detail::run_protocol("semi-supervised", cfg, train, test);
}

/// The same masked stream replayed `epochs` times (fixed order unless reshuffle_epochs),
/// evaluated after every epoch.
inline ExperimentReport run_continual(const ExperimentConfig& cfg, const FeatureSet& train, const FeatureSet& test) {
    return detail::run_protocol("continual", cfg, train, test);
}

}  // namespace lpart
