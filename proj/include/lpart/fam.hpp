#pragma once

#include <cstdint>
#include <optional>
#include <ranges>
#include <span>
#include <string>
#include <vector>

#include "binary_io.hpp"
#include "errors.hpp"
#include "fuzzy_art.hpp"
#include "lpart_model.hpp"

namespace lpart {

// Simplified supervised Fuzzy ARTMAP: every category is committed to one class
// at creation, and a wrong winner raises the working vigilance just past its
// match value (match tracking) until a correct winner or a fresh node results.

struct FamNode {
    std::vector<double> weight;
    ClassIndex class_label = 0;
};

class FamModel {
public:
    static constexpr std::string_view kMagic = "FAMS";
    static constexpr std::uint32_t kVersion = 1;
    static constexpr double kDefaultEpsilon = 1e-6;

    FamModel(const ArtHyperParams& params, std::uint32_t num_classes, std::size_t dim,
             double epsilon = kDefaultEpsilon)
        : params_(params), num_classes_(num_classes), dim_(dim), epsilon_(epsilon) {
        params_.validate();
        if (num_classes_ == 0) throw DomainError("num_classes must be >= 1");
        if (dim_ == 0) throw DomainError("feature dimension must be >= 1");
        if (!(epsilon_ >= 0.0)) throw DomainError("match-tracking epsilon must be >= 0");
    }

    const ArtHyperParams& params() const { return params_; }
    std::uint32_t num_classes() const { return num_classes_; }
    std::size_t dim() const { return dim_; }
    double epsilon() const { return epsilon_; }
    std::span<const FamNode> nodes() const { return nodes_; }
    std::size_t size() const { return nodes_.size(); }
    bool empty() const { return nodes_.empty(); }

    /// Supervised step. Returns the index of the node that learned or was created.
    std::size_t observe(std::span<const double> x, std::optional<ClassIndex> y) {
        if (!y) throw DomainError("fam_observe: FAM only learns from labeled samples");
        if (*y >= num_classes_)
            throw DomainError("label " + std::to_string(*y) + " out of range for " + std::to_string(num_classes_) +
                              " classes");
        check_dim(x.size());
        const auto input = complement_code(x);
        const std::span<const double> in(input);

        ArtHyperParams working = params_;
        for (;;) {
            const auto activated = activate(weights_of(nodes_), in, working);
            if (activated.empty()) break;
            const std::size_t winner = select_winner(activated);
            if (nodes_[winner].class_label == *y) {
                learn(std::span<double>(nodes_[winner].weight), in, params_.beta);
                return winner;
            }
            working.rho = match(in, std::span<const double>(nodes_[winner].weight)) + epsilon_;
            // Vigilance above 1 rules out every node, including a perfect match.
            if (working.rho > 1.0) break;
        }
        nodes_.push_back({create_node(in), *y});
        return nodes_.size() - 1;
    }

    ClassIndex predict(std::span<const double> x) const {
        if (nodes_.empty()) throw StateError("fam_predict: model has no nodes");
        check_dim(x.size());
        const auto input = complement_code(x);
        const std::span<const double> in(input);
        const auto activated = activate(weights_of(nodes_), in, params_);
        const std::size_t winner = activated.empty() ? best_choice(weights_of(nodes_), in, params_.alpha) : select_winner(activated);
        return nodes_[winner].class_label;
    }

    std::vector<std::uint8_t> snapshot() const {
        ByteWriter w;
        w.put_magic(kMagic);
        w.put_u32(kVersion);
        w.put_f64(params_.alpha);
        w.put_f64(params_.rho);
        w.put_f64(params_.beta);
        w.put_f64(epsilon_);
        w.put_u32(num_classes_);
        w.put_u32(static_cast<std::uint32_t>(dim_));
        w.put_u64(nodes_.size());
        for (const auto& n : nodes_) {
            for (double v : n.weight) w.put_f64(v);
            w.put_u32(n.class_label);
        }
        return std::move(w).bytes();
    }

    static FamModel restore(std::span<const std::uint8_t> bytes) {
        ByteReader r(bytes);
        r.expect_magic(kMagic);
        const std::size_t version_at = r.offset();
        if (const auto v = r.get_u32(); v != kVersion)
            throw FormatError("unsupported FAMS version " + std::to_string(v), version_at);
        ArtHyperParams p;
        p.alpha = r.get_f64();
        p.rho = r.get_f64();
        p.beta = r.get_f64();
        const double eps = r.get_f64();
        const std::uint32_t classes = r.get_u32();
        const std::uint32_t dim = r.get_u32();
        const std::size_t params_end = r.offset();
        std::optional<FamModel> model;
        try {
            model.emplace(p, classes, dim, eps);
        } catch (const DomainError& e) {
            throw FormatError(std::string("invalid hyperparameters: ") + e.what(), params_end);
        }
        const std::uint64_t count = r.get_u64();
        const std::size_t record = 2 * dim * 8 + 4;
        if (count > r.remaining() / record) throw FormatError("node count exceeds payload", r.offset());
        model->nodes_.reserve(count);
        for (std::uint64_t i = 0; i < count; ++i) {
            FamNode n;
            n.weight.resize(2 * dim);
            for (auto& v : n.weight) {
                const std::size_t at = r.offset();
                v = r.get_f64();
                if (!(v >= 0.0 && v <= 1.0)) throw FormatError("node weight outside [0, 1]", at);
            }
            const std::size_t label_at = r.offset();
            n.class_label = r.get_u32();
            if (n.class_label >= classes) throw FormatError("class label out of range", label_at);
            model->nodes_.push_back(std::move(n));
        }
        r.expect_end();
        return std::move(*model);
    }

private:
    void check_dim(std::size_t got) const {
        if (got != dim_)
            throw DomainError("feature dimension " + std::to_string(got) + " does not match model dimension " +
                              std::to_string(dim_));
    }

    ArtHyperParams params_;
    std::uint32_t num_classes_;
    std::size_t dim_;
    double epsilon_;
    std::vector<FamNode> nodes_;
};

}  // namespace lpart
