// lpart: command-line front end for the LPART learner, the FAM baseline and
// the experiment protocols.
//
// Exit codes: 0 success, 2 configuration error, 3 data format / I/O error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lpart/lpart.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

struct ModelFlags {
    std::string model = "lpart";
    lpart::LpartHyperParams params;
};

void add_model_flags(CLI::App& cmd, ModelFlags& f) {
    cmd.add_option("--model", f.model, "Learner")->check(CLI::IsMember({"lpart", "fam"}))->capture_default_str();
    cmd.add_option("--rho", f.params.art.rho, "Vigilance")->capture_default_str();
    cmd.add_option("--alpha", f.params.art.alpha, "Choice parameter")->capture_default_str();
    cmd.add_option("--beta", f.params.art.beta, "Learning rate")->capture_default_str();
    cmd.add_option("--delta", f.params.delta, "Propagation rate")->capture_default_str();
    cmd.add_option("--c-uncert", f.params.c_uncert, "Propagated-mass divisor C")->capture_default_str();
    cmd.add_option("--k-sens", f.params.k_sens, "Count-uncertainty sensitivity")->capture_default_str();
}

lpart::ModelKind kind_of(const std::string& s) { return s == "fam" ? lpart::ModelKind::kFam : lpart::ModelKind::kLpart; }

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw lpart::IoError("cannot open " + p.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw lpart::IoError("cannot write " + p.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw lpart::IoError("failed writing " + p.string());
}

void print_summary(const lpart::ExperimentReport& r) {
    for (const auto& a : r.aggregate) {
        std::fprintf(stderr, "epoch %u  accuracy %.4f +- %.4f", a.epoch, a.accuracy.mean, a.accuracy.std);
        if (a.filtered_accuracy)
            std::fprintf(stderr, "  filtered %.4f +- %.4f", a.filtered_accuracy->mean, a.filtered_accuracy->std);
        std::fprintf(stderr, "  uncertain %.4f  nodes %.1f\n", a.uncertain_rate.mean, a.node_count.mean);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Label-propagating Fuzzy ART: streaming semi-supervised continual learning"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "Generate labeled Gaussian blobs as a feature file");
    lpart::SynthSpec synth_spec;
    std::uint32_t synth_test_per_class = 100;
    std::string synth_out, synth_test_out;
    synth->add_option("--out", synth_out, "Training file (.csv for CSV)")->required();
    synth->add_option("--test-out", synth_test_out, "Optional test file drawn from the same blobs");
    synth->add_option("--classes", synth_spec.num_classes)->capture_default_str();
    synth->add_option("--dim", synth_spec.dim)->capture_default_str();
    synth->add_option("--per-class", synth_spec.samples_per_class)->capture_default_str();
    synth->add_option("--test-per-class", synth_test_per_class)->capture_default_str();
    synth->add_option("--spread", synth_spec.spread)->capture_default_str();
    synth->add_option("--seed", synth_spec.seed)->capture_default_str();

    // normalize
    auto* norm = app.add_subcommand("normalize", "Per-dimension min-max rescaling to [0,1]");
    std::string norm_in, norm_out;
    norm->add_option("input", norm_in)->required();
    norm->add_option("--out", norm_out)->required();

    // mask
    auto* mask = app.add_subcommand("mask", "Drop labels with a seeded per-sample Bernoulli mask");
    std::string mask_in, mask_out;
    lpart::MaskSchedule mask_schedule;
    mask->add_option("input", mask_in)->required();
    mask->add_option("--out", mask_out)->required();
    mask->add_option("--label-rate", mask_schedule.label_rate)->required();
    mask->add_option("--seed", mask_schedule.seed)->capture_default_str();

    // run-semi / run-continual
    struct RunFlags {
        ModelFlags model;
        lpart::ExperimentConfig cfg;
        std::string out;
        std::string format = "json";
    };
    RunFlags semi_flags, cont_flags;
    cont_flags.cfg.epochs = 10;
    auto add_run_flags = [&](CLI::App* cmd, RunFlags& f) {
        add_model_flags(*cmd, f.model);
        cmd->add_option("--train", f.cfg.train_path)->required();
        cmd->add_option("--test", f.cfg.test_path)->required();
        cmd->add_option("--label-rate", f.cfg.label_rate)->capture_default_str();
        cmd->add_flag("--use-unlabeled", f.cfg.use_unlabeled);
        cmd->add_option("--epochs", f.cfg.epochs)->capture_default_str();
        cmd->add_option("--trials", f.cfg.trials)->capture_default_str();
        cmd->add_option("--seed", f.cfg.seed)->capture_default_str();
        cmd->add_option("--theta1", f.cfg.theta1)->capture_default_str();
        cmd->add_option("--theta2", f.cfg.theta2)->capture_default_str();
        cmd->add_flag("--reshuffle-epochs", f.cfg.reshuffle_epochs);
        cmd->add_option("--threads", f.cfg.threads, "Worker threads for trials (0 = all cores)")
            ->capture_default_str();
        cmd->add_option("--out", f.out, "Report file (stdout when omitted)");
        cmd->add_option("--format", f.format)->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
    };
    auto* semi = app.add_subcommand("run-semi", "Single-epoch semi-supervised protocol over several trials");
    add_run_flags(semi, semi_flags);
    auto* cont = app.add_subcommand("run-continual", "Multi-epoch continual-learning protocol");
    add_run_flags(cont, cont_flags);

    // snapshot
    auto* snap = app.add_subcommand("snapshot", "Train one model on a stream and write its snapshot");
    ModelFlags snap_model;
    std::string snap_train, snap_out;
    std::uint32_t snap_epochs = 1;
    std::optional<double> snap_rate;
    std::uint64_t snap_seed = 0;
    add_model_flags(*snap, snap_model);
    snap->add_option("--train", snap_train)->required();
    snap->add_option("--out", snap_out)->required();
    snap->add_option("--epochs", snap_epochs)->capture_default_str();
    snap->add_option("--label-rate", snap_rate, "Mask labels before training");
    snap->add_option("--seed", snap_seed)->capture_default_str();

    // predict
    auto* pred = app.add_subcommand("predict", "Predict a labeled or unlabeled stream from a snapshot");
    std::string pred_snapshot, pred_test, pred_out;
    pred->add_option("snapshot", pred_snapshot)->required();
    pred->add_option("--test", pred_test)->required();
    pred->add_option("--out", pred_out, "Predictions CSV (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (*synth) {
            auto split = lpart::synth_split(synth_spec, synth_test_out.empty() ? 0 : synth_test_per_class);
            lpart::write_stream(synth_out, split.train);
            if (!synth_test_out.empty()) lpart::write_stream(synth_test_out, split.test);
        } else if (*norm) {
            const auto ranges = lpart::normalize(norm_in, norm_out);
            for (std::size_t i = 0; i < ranges.size(); ++i)
                std::printf("%zu,%.9g,%.9g\n", i, ranges[i].min, ranges[i].max);
        } else if (*mask) {
            if (!(mask_schedule.label_rate >= 0.0 && mask_schedule.label_rate <= 1.0))
                throw lpart::ConfigError("--label-rate must lie in [0, 1]");
            lpart::write_stream(mask_out, lpart::mask_labels(lpart::read_stream(mask_in), mask_schedule));
        } else if (*semi || *cont) {
            RunFlags& f = *semi ? semi_flags : cont_flags;
            f.cfg.model = kind_of(f.model.model);
            f.cfg.lpart = f.model.params;
            f.cfg.validate();
            const auto train = lpart::read_stream(f.cfg.train_path);
            const auto test = lpart::read_stream(f.cfg.test_path);
            const auto report = *semi ? lpart::run_semi_supervised(f.cfg, train, test)
                                      : lpart::run_continual(f.cfg, train, test);
            const auto format = f.format == "csv" ? lpart::ReportFormat::kCsv : lpart::ReportFormat::kJson;
            if (f.out.empty())
                std::cout << (format == lpart::ReportFormat::kJson ? lpart::to_json(report) : lpart::to_csv(report));
            else
                lpart::report_emit(report, f.out, format);
            print_summary(report);
        } else if (*snap) {
            auto train = lpart::read_stream(snap_train);
            if (snap_rate) {
                if (!(*snap_rate >= 0.0 && *snap_rate <= 1.0)) throw lpart::ConfigError("--label-rate must lie in [0, 1]");
                train = lpart::mask_labels(std::move(train), {*snap_rate, snap_seed});
            }
            if (snap_epochs < 1) throw lpart::ConfigError("--epochs must be >= 1");
            auto params = snap_model.params;
            params.num_classes = train.num_classes;
            try {
                params.validate();
            } catch (const lpart::DomainError& e) {
                throw lpart::ConfigError(e.what());
            }
            std::vector<std::uint8_t> bytes;
            if (kind_of(snap_model.model) == lpart::ModelKind::kLpart) {
                lpart::LpartModel model(params, train.dim);
                for (std::uint32_t e = 0; e < snap_epochs; ++e)
                    for (const auto& s : train.samples) model.observe(lpart::to_double(s), s.label);
                bytes = model.snapshot();
            } else {
                lpart::FamModel model(params.art, train.num_classes, train.dim);
                for (std::uint32_t e = 0; e < snap_epochs; ++e)
                    for (const auto& s : train.samples)
                        if (s.label) model.observe(lpart::to_double(s), s.label);
                bytes = model.snapshot();
            }
            write_bytes(snap_out, bytes);
        } else if (*pred) {
            const auto bytes = read_bytes(pred_snapshot);
            const auto test = lpart::read_stream(pred_test);
            std::ofstream file;
            if (!pred_out.empty()) {
                file.open(pred_out, std::ios::trunc);
                if (!file) throw lpart::IoError("cannot write " + pred_out);
            }
            std::ostream& out = pred_out.empty() ? std::cout : file;
            out.precision(17);
            std::size_t labeled = 0, correct = 0;
            auto tally = [&](const lpart::FeatureSample& s, std::optional<lpart::ClassIndex> label) {
                if (!s.label) return;
                ++labeled;
                if (label && *label == *s.label) ++correct;
            };
            const bool is_fam = bytes.size() >= 4 && std::string(bytes.begin(), bytes.begin() + 4) == "FAMS";
            if (is_fam) {
                const auto model = lpart::FamModel::restore(bytes);
                out << "index,label\n";
                for (std::size_t i = 0; i < test.samples.size(); ++i) {
                    const auto label = model.predict(lpart::to_double(test.samples[i]));
                    out << i << ',' << label << '\n';
                    tally(test.samples[i], label);
                }
            } else {
                const auto model = lpart::LpartModel::restore(bytes);
                out << "index,label,u1,u2,winner\n";
                for (std::size_t i = 0; i < test.samples.size(); ++i) {
                    const auto p = model.predict(lpart::to_double(test.samples[i]));
                    out << i << ',' << (p.label ? static_cast<long long>(*p.label) : -1LL) << ',' << p.u1 << ','
                        << p.u2 << ',' << *p.winner << '\n';
                    tally(test.samples[i], p.label);
                }
            }
            if (labeled > 0)
                std::fprintf(stderr, "accuracy %.4f over %zu labeled samples\n",
                             static_cast<double>(correct) / static_cast<double>(labeled), labeled);
        }
    } catch (const lpart::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const lpart::FormatError& e) {
        std::cerr << "format error: " << e.what() << '\n';
        return kExitData;
    } catch (const lpart::IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kExitData;
    } catch (const lpart::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    return 0;
}
