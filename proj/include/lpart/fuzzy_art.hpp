/**
 * @file fuzzy_art.hpp
 * @brief Fuzzy ART kernel: complement coding, choice/match scoring, activation,
 * winner selection and the learning rule.
 *
 * Everything here is a pure function over its arguments. Category state with
 * labels lives in lpart_model.hpp and fam.hpp.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <ranges>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace lpart {

/// Choice parameter, vigilance and learning rate of a Fuzzy ART layer.
struct ArtHyperParams {
    double alpha = 0.001;  // choice parameter, > 0
    double rho = 0.9;      // vigilance, [0, 1]
    double beta = 1.0;     // learning rate, [0, 1]; 1 is fast learning

    void validate() const {
        if (!(alpha > 0.0) || !std::isfinite(alpha))
            throw DomainError("alpha must be a finite value > 0, got " + std::to_string(alpha));
        if (!(rho >= 0.0 && rho <= 1.0))
            throw DomainError("rho must lie in [0, 1], got " + std::to_string(rho));
        if (!(beta >= 0.0 && beta <= 1.0))
            throw DomainError("beta must lie in [0, 1], got " + std::to_string(beta));
    }
};

/// One node that passed the vigilance test, with its choice value.
struct Activation {
    std::size_t index;
    double choice;

    friend bool operator==(const Activation&, const Activation&) = default;
};

namespace detail {

inline void require_same_size(std::size_t a, std::size_t b, const char* what) {
    if (a != b)
        throw StructuralError(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                              " vs " + std::to_string(b) + ")");
}

// ‖I ∧ w‖₁ and ‖w‖₁ in a single pass.
struct Overlap {
    double meet = 0.0;
    double weight = 0.0;
};

template <std::floating_point T>
Overlap overlap(std::span<const T> input, std::span<const T> weight) noexcept {
    Overlap o;
    for (std::size_t i = 0; i < input.size(); ++i) {
        o.meet += std::min(input[i], weight[i]);
        o.weight += weight[i];
    }
    return o;
}

}  // namespace detail

template <std::floating_point T>
T l1_norm(std::span<const T> v) noexcept {
    T s = 0;
    for (T x : v) s += x;
    return s;
}

/// ‖a ∧ b‖₁ where ∧ is the element-wise minimum.
template <std::floating_point T>
T fuzzy_and_norm(std::span<const T> a, std::span<const T> b) {
    detail::require_same_size(a.size(), b.size(), "fuzzy_and_norm");
    T s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::min(a[i], b[i]);
    return s;
}

/// Returns [r, 1 - r]. Throws DomainError naming the first element outside [0,1].
template <std::floating_point T>
std::vector<T> complement_code(std::span<const T> r) {
    if (r.empty()) throw DomainError("complement_code: feature vector must have dimension >= 1");
    const std::size_t d = r.size();
    std::vector<T> out(2 * d);
    for (std::size_t i = 0; i < d; ++i) {
        const T v = r[i];
        if (!(v >= T(0) && v <= T(1)))
            throw DomainError("complement_code: element " + std::to_string(i) + " = " +
                              std::to_string(v) + " is outside [0, 1]");
        out[i] = v;
        out[i + d] = T(1) - v;
    }
    return out;
}

template <std::floating_point T>
std::vector<T> complement_code(const std::vector<T>& r) {
    return complement_code(std::span<const T>(r));
}

/// T = ‖I ∧ w‖₁ / (α + ‖w‖₁)
template <std::floating_point T>
T choice(std::span<const T> input, std::span<const T> weight, T alpha) {
    detail::require_same_size(input.size(), weight.size(), "choice");
    if (!(alpha > T(0))) throw DomainError("choice: alpha must be > 0");
    const auto o = detail::overlap(input, weight);
    return o.meet / (alpha + o.weight);
}

/// V = ‖I ∧ w‖₁ / ‖I‖₁
template <std::floating_point T>
T match(std::span<const T> input, std::span<const T> weight) {
    detail::require_same_size(input.size(), weight.size(), "match");
    const T norm = l1_norm(input);
    if (!(norm > T(0))) throw DomainError("match: input has zero L1 norm");
    return fuzzy_and_norm(input, weight) / norm;
}

/// In-place learning step w ← β(I ∧ w) + (1 − β)w.
template <std::floating_point T>
void learn(std::span<T> weight, std::span<const T> input, T beta) {
    detail::require_same_size(input.size(), weight.size(), "learn");
    if (!(beta >= T(0) && beta <= T(1)))
        throw DomainError("learn: beta must lie in [0, 1], got " + std::to_string(beta));
    if (beta == T(1)) {
        for (std::size_t i = 0; i < weight.size(); ++i) weight[i] = std::min(input[i], weight[i]);
        return;
    }
    for (std::size_t i = 0; i < weight.size(); ++i) {
        const T w = weight[i];
        const T m = std::min(input[i], w);
        if (m == w) continue;  // I ∧ w = w is a fixed point for every β
        // The outer min() keeps the result <= w under rounding.
        weight[i] = std::min(w, beta * m + (T(1) - beta) * w);
    }
}

template <std::floating_point T>
std::vector<T> update_weight(std::span<const T> weight, std::span<const T> input, T beta) {
    std::vector<T> out(weight.begin(), weight.end());
    learn(std::span<T>(out), input, beta);
    return out;
}

/// A new category's weight is the input itself.
template <std::floating_point T>
std::vector<T> create_node(std::span<const T> input) {
    return std::vector<T>(input.begin(), input.end());
}

template <typename R>
concept WeightRange = std::ranges::forward_range<R> &&
                      std::convertible_to<std::ranges::range_reference_t<R>, std::span<const double>>;

/// Every node with V ≥ ρ, in node order, paired with its choice value.
/// `nodes` is any forward range whose elements view as span<const double>.
template <WeightRange R>
std::vector<Activation> activate(const R& nodes, std::span<const double> input,
                                 const ArtHyperParams& params) {
    std::vector<Activation> out;
    const double input_norm = l1_norm(input);
    if (!(input_norm > 0.0)) throw DomainError("activate: input has zero L1 norm");
    std::size_t j = 0;
    for (auto&& node : nodes) {
        const std::span<const double> w = node;
        detail::require_same_size(input.size(), w.size(), "activate");
        const auto o = detail::overlap(input, w);
        if (o.meet / input_norm >= params.rho) out.push_back({j, o.meet / (params.alpha + o.weight)});
        ++j;
    }
    return out;
}

/// View of a node container as weight spans, for activate() / best_choice().
template <std::ranges::forward_range Nodes>
auto weights_of(const Nodes& nodes) {
    return nodes | std::views::transform([](const auto& n) { return std::span<const double>(n.weight); });
}

/// Index of the highest choice value; ties go to the lowest node index.
inline std::size_t select_winner(std::span<const Activation> activated) {
    if (activated.empty()) throw PreconditionError("select_winner: activated set is empty");
    const Activation* best = &activated.front();
    for (const auto& a : activated.subspan(1)) {
        if (a.choice > best->choice || (a.choice == best->choice && a.index < best->index)) best = &a;
    }
    return best->index;
}

/// Highest-choice node over all nodes regardless of vigilance. Ties go to the lowest index.
/// Used as the inference fallback when nothing passes the vigilance test.
template <WeightRange R>
std::size_t best_choice(const R& nodes, std::span<const double> input, double alpha) {
    std::size_t best = 0;
    double best_t = -1.0;
    std::size_t j = 0;
    for (auto&& node : nodes) {
        const double t = choice(input, std::span<const double>(node), alpha);
        if (t > best_t) {
            best_t = t;
            best = j;
        }
        ++j;
    }
    if (j == 0) throw PreconditionError("best_choice: no nodes");
    return best;
}

}  // namespace lpart
