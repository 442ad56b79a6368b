/**
 * @file lpart_model.hpp
 * @brief Label-propagating Fuzzy ART learner.
 *
 * Each category node carries a label density q (non-negative mass per class).
 * A labeled sample adds 1 to q(y) of every node it activates. When an input
 * co-activates two or more nodes, every node in the set that never received a
 * direct label has its density replaced by a blend of its neighbours' evidence
 * and its own, shrunk by the uncertainty divisor C:
 *
 *   q_k ← ( δ · Σ_{j∈A∖k} q_j / |Σ_{j∈A∖k} q_j|  +  (1 − δ) · q_k / |q_k| ) / C
 *
 * Prediction picks the winner node, reads its normalized density and reports
 * two uncertainty scores: the entropy of that distribution and 1 − tanh(k·|q|).
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <ranges>
#include <span>
#include <string>
#include <vector>

#include "binary_io.hpp"
#include "errors.hpp"
#include "fuzzy_art.hpp"

namespace lpart {

using ClassIndex = std::uint32_t;

struct LpartHyperParams {
    ArtHyperParams art;
    double delta = 0.5;     // propagation rate
    double c_uncert = 2.0;  // divisor C > 1; propagated mass sums to 1/C
    double k_sens = 1.0;    // sensitivity of the count uncertainty
    std::uint32_t num_classes = 10;

    void validate() const {
        art.validate();
        if (!(delta >= 0.0 && delta <= 1.0))
            throw DomainError("delta must lie in [0, 1], got " + std::to_string(delta));
        if (!(c_uncert > 1.0) || !std::isfinite(c_uncert))
            throw DomainError("c_uncert must be a finite value > 1, got " + std::to_string(c_uncert));
        if (!(k_sens > 0.0) || !std::isfinite(k_sens))
            throw DomainError("k_sens must be a finite value > 0, got " + std::to_string(k_sens));
        if (num_classes == 0) throw DomainError("num_classes must be >= 1");
    }
};

struct LpartNode {
    std::vector<double> weight;   // complement coded, 2d
    std::vector<double> density;  // q, one entry per class
    bool has_direct_label = false;
    std::uint64_t created_at = 0;  // ordinal of the sample that created the node

    double density_sum() const {
        double s = 0.0;
        for (double q : density) s += q;
        return s;
    }
};

struct Prediction {
    std::optional<ClassIndex> label;  // empty means the model abstains
    double u1 = 0.0;                  // entropy of the winner's label distribution
    double u2 = 1.0;                  // 1 - tanh(k * density sum)
    std::optional<std::size_t> winner;

    bool abstained() const { return !label.has_value(); }
};

struct ObserveReport {
    std::size_t node = 0;       // winner, or the index of the created node
    bool created = false;
    std::size_t activated = 0;  // |A|
    bool propagated = false;
};

/// q / Σq, or nullopt when the mass is zero.
inline std::optional<std::vector<double>> label_distribution(std::span<const double> density) {
    double sum = 0.0;
    for (double q : density) sum += q;
    if (!(sum > 0.0)) return std::nullopt;
    std::vector<double> p(density.size());
    for (std::size_t y = 0; y < density.size(); ++y) p[y] = density[y] / sum;
    return p;
}

inline std::optional<std::vector<double>> label_distribution(const LpartNode& node) {
    return label_distribution(std::span<const double>(node.density));
}

/// Shannon entropy in nats, with 0·ln 0 = 0.
inline double uncertainty_entropy(std::span<const double> p) {
    double sum = 0.0;
    for (double v : p) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw DomainError("uncertainty_entropy: probabilities must be finite and non-negative");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw DomainError("uncertainty_entropy: probabilities sum to " + std::to_string(sum) + ", not 1");
    double h = 0.0;
    for (double v : p)
        if (v > 0.0) h -= v * std::log(v);
    return h;
}

inline double uncertainty_count(double density_sum, double k) {
    if (!(density_sum >= 0.0)) throw DomainError("uncertainty_count: density sum must be >= 0");
    if (!(k > 0.0)) throw DomainError("uncertainty_count: k must be > 0");
    return 1.0 - std::tanh(k * density_sum);
}

/// Co-activation label propagation over the node set `activated` (|A| ≥ 2).
/// Targets are the nodes without a direct label; all new densities are computed
/// from the pre-update values and written afterwards. A target whose neighbours
/// carry no mass is skipped; a target with no mass of its own takes only the
/// neighbour term, so its new sum is δ/C instead of 1/C.
/// Returns the number of nodes whose density was replaced.
inline std::size_t propagate_labels(std::span<LpartNode> nodes, std::span<const std::size_t> activated,
                                    double delta, double c_uncert) {
    if (activated.size() < 2) throw PreconditionError("propagate_labels: needs at least two co-activated nodes");
    for (std::size_t a = 0; a < activated.size(); ++a) {
        if (activated[a] >= nodes.size())
            throw PreconditionError("propagate_labels: node index " + std::to_string(activated[a]) + " out of range");
        for (std::size_t b = 0; b < a; ++b)
            if (activated[a] == activated[b]) throw PreconditionError("propagate_labels: duplicate node index");
    }
    const std::size_t classes = nodes[activated.front()].density.size();

    struct Pending {
        std::size_t node;
        std::vector<double> density;
    };
    std::vector<Pending> pending;
    std::vector<double> neighbours(classes);

    for (std::size_t k : activated) {
        const LpartNode& target = nodes[k];
        if (target.has_direct_label) continue;

        std::fill(neighbours.begin(), neighbours.end(), 0.0);
        for (std::size_t j : activated) {
            if (j == k) continue;
            const auto& q = nodes[j].density;
            for (std::size_t y = 0; y < classes; ++y) neighbours[y] += q[y];
        }
        double neighbour_mass = 0.0;
        for (double v : neighbours) neighbour_mass += v;
        if (!(neighbour_mass > 0.0)) continue;

        const double own_mass = target.density_sum();
        std::vector<double> q(classes);
        for (std::size_t y = 0; y < classes; ++y) {
            double v = delta * neighbours[y] / neighbour_mass;
            if (own_mass > 0.0) v += (1.0 - delta) * target.density[y] / own_mass;
            q[y] = v / c_uncert;
        }
        pending.push_back({k, std::move(q)});
    }
    for (auto& p : pending) nodes[p.node].density = std::move(p.density);
    return pending.size();
}

class LpartModel {
public:
    static constexpr std::string_view kMagic = "LPMS";
    static constexpr std::uint32_t kVersion = 1;

    LpartModel(const LpartHyperParams& params, std::size_t dim) : params_(params), dim_(dim) {
        params_.validate();
        if (dim_ == 0) throw DomainError("feature dimension must be >= 1");
    }

    const LpartHyperParams& params() const { return params_; }
    std::size_t dim() const { return dim_; }
    std::span<const LpartNode> nodes() const { return nodes_; }
    std::size_t size() const { return nodes_.size(); }
    bool empty() const { return nodes_.empty(); }
    std::uint64_t samples_seen() const { return seen_; }

    /// One learning step on (x, y). Throws before touching state on invalid input.
    ObserveReport observe(std::span<const double> x, std::optional<ClassIndex> y) {
        check_dim(x.size());
        if (y && *y >= params_.num_classes)
            throw DomainError("label " + std::to_string(*y) + " out of range for " +
                              std::to_string(params_.num_classes) + " classes");
        const auto input = complement_code(x);
        const auto activated = activate(weights_of(nodes_), std::span<const double>(input), params_.art);

        ObserveReport report;
        report.activated = activated.size();
        const std::uint64_t ordinal = seen_++;

        if (activated.empty()) {
            LpartNode node;
            node.weight = create_node(std::span<const double>(input));
            node.density.assign(params_.num_classes, 0.0);
            if (y) {
                node.density[*y] = 1.0;
                node.has_direct_label = true;
            }
            node.created_at = ordinal;
            nodes_.push_back(std::move(node));
            report.node = nodes_.size() - 1;
            report.created = true;
            return report;
        }

        if (y) {
            for (const auto& a : activated) {
                nodes_[a.index].density[*y] += 1.0;
                nodes_[a.index].has_direct_label = true;
            }
        }
        if (activated.size() > 1) {
            std::vector<std::size_t> indices;
            indices.reserve(activated.size());
            for (const auto& a : activated) indices.push_back(a.index);
            propagate_labels(std::span<LpartNode>(nodes_), indices, params_.delta, params_.c_uncert);
            report.propagated = true;
        }
        report.node = select_winner(activated);
        learn(std::span<double>(nodes_[report.node].weight), std::span<const double>(input), params_.art.beta);
        return report;
    }

    /// Inference only. When no node passes vigilance, the highest-choice node overall wins.
    Prediction predict(std::span<const double> x) const {
        if (nodes_.empty()) throw StateError("predict: model has no nodes");
        check_dim(x.size());
        const auto input = complement_code(x);
        const std::span<const double> in(input);
        const auto activated = activate(weights_of(nodes_), in, params_.art);
        const std::size_t winner =
            activated.empty() ? best_choice(weights_of(nodes_), in, params_.art.alpha) : select_winner(activated);

        const LpartNode& node = nodes_[winner];
        Prediction out;
        out.winner = winner;
        out.u2 = uncertainty_count(node.density_sum(), params_.k_sens);
        if (auto p = label_distribution(node)) {
            ClassIndex best = 0;
            for (ClassIndex y = 1; y < p->size(); ++y)
                if ((*p)[y] > (*p)[best]) best = y;
            out.label = best;
            out.u1 = uncertainty_entropy(*p);
        } else {
            // No evidence at all: report the maximum entropy.
            out.u1 = std::log(static_cast<double>(params_.num_classes));
        }
        return out;
    }

    std::vector<std::uint8_t> snapshot() const {
        ByteWriter w;
        w.put_magic(kMagic);
        w.put_u32(kVersion);
        w.put_f64(params_.art.alpha);
        w.put_f64(params_.art.rho);
        w.put_f64(params_.art.beta);
        w.put_f64(params_.delta);
        w.put_f64(params_.c_uncert);
        w.put_f64(params_.k_sens);
        w.put_u32(params_.num_classes);
        w.put_u32(static_cast<std::uint32_t>(dim_));
        w.put_u64(seen_);
        w.put_u64(nodes_.size());
        for (const auto& n : nodes_) {
            for (double v : n.weight) w.put_f64(v);
            for (double v : n.density) w.put_f64(v);
            w.put_u8(n.has_direct_label ? 1 : 0);
            w.put_u64(n.created_at);
        }
        return std::move(w).bytes();
    }

    static LpartModel restore(std::span<const std::uint8_t> bytes) {
        ByteReader r(bytes);
        r.expect_magic(kMagic);
        const std::size_t version_at = r.offset();
        if (const auto v = r.get_u32(); v != kVersion)
            throw FormatError("unsupported LPMS version " + std::to_string(v), version_at);
        LpartHyperParams p;
        p.art.alpha = r.get_f64();
        p.art.rho = r.get_f64();
        p.art.beta = r.get_f64();
        p.delta = r.get_f64();
        p.c_uncert = r.get_f64();
        p.k_sens = r.get_f64();
        p.num_classes = r.get_u32();
        const std::uint32_t dim = r.get_u32();
        const std::size_t params_end = r.offset();
        std::optional<LpartModel> model;
        try {
            model.emplace(p, dim);
        } catch (const DomainError& e) {
            throw FormatError(std::string("invalid hyperparameters: ") + e.what(), params_end);
        }
        model->seen_ = r.get_u64();
        const std::uint64_t count = r.get_u64();
        const std::size_t record = (2 * dim + p.num_classes) * 8 + 1 + 8;
        if (count > r.remaining() / record) throw FormatError("node count exceeds payload", r.offset());
        model->nodes_.reserve(count);
        for (std::uint64_t i = 0; i < count; ++i) {
            LpartNode n;
            n.weight.resize(2 * dim);
            n.density.resize(p.num_classes);
            for (auto& v : n.weight) {
                const std::size_t at = r.offset();
                v = r.get_f64();
                if (!(v >= 0.0 && v <= 1.0)) throw FormatError("node weight outside [0, 1]", at);
            }
            for (auto& v : n.density) {
                const std::size_t at = r.offset();
                v = r.get_f64();
                if (!(v >= 0.0) || !std::isfinite(v)) throw FormatError("negative or non-finite density", at);
            }
            const std::size_t flag_at = r.offset();
            const auto flag = r.get_u8();
            if (flag > 1) throw FormatError("invalid direct-label flag", flag_at);
            n.has_direct_label = flag == 1;
            n.created_at = r.get_u64();
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

    LpartHyperParams params_;
    std::size_t dim_;
    std::vector<LpartNode> nodes_;
    std::uint64_t seen_ = 0;
};

}  // namespace lpart
