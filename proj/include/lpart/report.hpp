#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "experiment.hpp"

namespace lpart {

enum class ReportFormat { kJson, kCsv };

namespace detail {

using ordered_json = nlohmann::ordered_json;

inline ordered_json summary_json(const Summary& s) { return {{"mean", s.mean}, {"std", s.std}}; }

template <typename T>
ordered_json optional_json(const std::optional<T>& v) {
    return v ? ordered_json(*v) : ordered_json(nullptr);
}

inline ordered_json config_json(const ExperimentConfig& c) {
    return {
        {"model", to_string(c.model)},
        {"alpha", c.lpart.art.alpha},
        {"rho", c.lpart.art.rho},
        {"beta", c.lpart.art.beta},
        {"delta", c.lpart.delta},
        {"c_uncert", c.lpart.c_uncert},
        {"k_sens", c.lpart.k_sens},
        {"num_classes", c.lpart.num_classes},
        {"fam_epsilon", c.fam_epsilon},
        {"label_rate", c.label_rate},
        {"use_unlabeled", c.use_unlabeled},
        {"epochs", c.epochs},
        {"trials", c.trials},
        {"seed", c.seed},
        {"theta1", c.theta1},
        {"theta2", c.theta2},
        {"reshuffle_epochs", c.reshuffle_epochs},
        {"train", c.train_path},
        {"test", c.test_path},
    };
}

inline ordered_json epoch_json(const EpochMetrics& m) {
    return {
        {"epoch", m.epoch},
        {"accuracy", m.accuracy},
        {"filtered_accuracy", optional_json(m.filtered_accuracy)},
        {"filtered_count", m.filtered_count},
        {"uncertain_rate", m.uncertain_rate},
        {"node_count", m.node_count},
        {"abstain_count", m.abstain_count},
        {"test_size", m.test_size},
    };
}

inline ordered_json aggregate_json(const EpochAggregate& a) {
    return {
        {"epoch", a.epoch},
        {"accuracy", summary_json(a.accuracy)},
        {"filtered_accuracy", a.filtered_accuracy ? summary_json(*a.filtered_accuracy) : ordered_json(nullptr)},
        {"filtered_trials", a.filtered_trials},
        {"uncertain_rate", summary_json(a.uncertain_rate)},
        {"node_count", summary_json(a.node_count)},
        {"abstain_count", summary_json(a.abstain_count)},
    };
}

inline std::string num(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace detail

inline nlohmann::ordered_json report_json(const ExperimentReport& r) {
    using detail::ordered_json;
    ordered_json trials = ordered_json::array();
    for (const auto& t : r.trials) {
        ordered_json epochs = ordered_json::array();
        for (const auto& m : t.epochs) epochs.push_back(detail::epoch_json(m));
        trials.push_back({{"trial", t.trial},
                          {"seed", t.seed},
                          {"train_size", t.train_size},
                          {"labeled_count", t.labeled_count},
                          {"epochs", std::move(epochs)}});
    }
    ordered_json agg = ordered_json::array();
    for (const auto& a : r.aggregate) agg.push_back(detail::aggregate_json(a));
    return {{"protocol", r.protocol},
            {"config", detail::config_json(r.config)},
            {"trials", std::move(trials)},
            {"aggregate", std::move(agg)}};
}

inline std::string to_json(const ExperimentReport& r) { return report_json(r).dump(2) + "\n"; }

/// `# key=value` config lines, then one row per (trial, epoch) and two rows
/// (mean, std) per aggregated epoch. Missing filtered accuracy is an empty cell.
inline std::string to_csv(const ExperimentReport& r) {
    std::ostringstream os;
    os << "# protocol=" << r.protocol << '\n';
    const auto config = detail::config_json(r.config);
    for (const auto& [key, value] : config.items())
        os << "# " << key << '=' << (value.is_string() ? value.get<std::string>() : value.dump()) << '\n';
    os << "scope,trial,epoch,statistic,accuracy,filtered_accuracy,uncertain_rate,node_count,abstain_count\n";
    using detail::num;
    for (const auto& t : r.trials)
        for (const auto& m : t.epochs)
            os << "trial," << t.trial << ',' << m.epoch << ",value," << num(m.accuracy) << ','
               << (m.filtered_accuracy ? num(*m.filtered_accuracy) : "") << ',' << num(m.uncertain_rate) << ','
               << m.node_count << ',' << m.abstain_count << '\n';
    for (const auto& a : r.aggregate) {
        os << "aggregate,," << a.epoch << ",mean," << num(a.accuracy.mean) << ','
           << (a.filtered_accuracy ? num(a.filtered_accuracy->mean) : "") << ',' << num(a.uncertain_rate.mean) << ','
           << num(a.node_count.mean) << ',' << num(a.abstain_count.mean) << '\n';
        os << "aggregate,," << a.epoch << ",std," << num(a.accuracy.std) << ','
           << (a.filtered_accuracy ? num(a.filtered_accuracy->std) : "") << ',' << num(a.uncertain_rate.std) << ','
           << num(a.node_count.std) << ',' << num(a.abstain_count.std) << '\n';
    }
    return os.str();
}

inline void report_emit(const ExperimentReport& r, const std::filesystem::path& path, ReportFormat format) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write report " + path.string());
    out << (format == ReportFormat::kJson ? to_json(r) : to_csv(r));
    out.close();
    if (!out) throw IoError("failed writing report " + path.string());
}

}  // namespace lpart
