#pragma once

// Hard-thresholding projections: head(v, k) keeps the k largest-magnitude entries,
// tail(v, k) = v - head(v, k). Ties are broken towards the lower index.

#include "l0robust/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace l0robust {

/// Sorted set of distinct coordinates in [0, universe).
class SupportSet {
  public:
    SupportSet() = default;

    SupportSet(std::vector<std::size_t> indices, std::size_t universe)
        : indices_(std::move(indices)), universe_(universe) {
        std::sort(indices_.begin(), indices_.end());
        indices_.erase(std::unique(indices_.begin(), indices_.end()), indices_.end());
        if (!indices_.empty() && indices_.back() >= universe_) {
            throw invalid_input("support index " + std::to_string(indices_.back()) + " out of range for length " +
                                std::to_string(universe_));
        }
    }

    static SupportSet all(std::size_t universe) {
        std::vector<std::size_t> idx(universe);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        return {std::move(idx), universe};
    }

    [[nodiscard]] const std::vector<std::size_t> &indices() const { return indices_; }
    [[nodiscard]] std::size_t size() const { return indices_.size(); }
    [[nodiscard]] bool empty() const { return indices_.empty(); }
    [[nodiscard]] std::size_t universe() const { return universe_; }

    [[nodiscard]] bool contains(std::size_t i) const {
        return std::binary_search(indices_.begin(), indices_.end(), i);
    }

    /// True when every index of `other` is also in this set.
    [[nodiscard]] bool includes(const SupportSet &other) const {
        return std::includes(indices_.begin(), indices_.end(), other.indices_.begin(), other.indices_.end());
    }

    [[nodiscard]] bool intersects(const SupportSet &other) const {
        auto a = indices_.begin();
        auto b = other.indices_.begin();
        while (a != indices_.end() && b != other.indices_.end()) {
            if (*a == *b) {
                return true;
            }
            *a < *b ? ++a : ++b;
        }
        return false;
    }

    bool operator==(const SupportSet &) const = default;

  private:
    std::vector<std::size_t> indices_;
    std::size_t universe_ = 0;
};

namespace detail {

template <typename T>
double magnitude(const T &a) {
    return static_cast<double>(std::abs(a));
}

inline void check_budget(std::size_t k, std::size_t n) {
    if (k > n) {
        throw invalid_input("sparsity " + std::to_string(k) + " exceeds vector length " + std::to_string(n));
    }
}

}  // namespace detail

/// Indices of the k largest-magnitude entries, ties towards lower index, returned ascending.
template <typename T>
std::vector<std::size_t> top_k_indices(const std::vector<T> &v, std::size_t k) {
    detail::check_budget(k, v.size());
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> mag(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        mag[i] = detail::magnitude(v[i]);
    }
    const auto before = [&](std::size_t a, std::size_t b) { return mag[a] > mag[b] || (mag[a] == mag[b] && a < b); };
    if (k < order.size()) {
        std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), before);
    }
    order.resize(k);
    std::sort(order.begin(), order.end());
    return order;
}

template <typename T>
std::vector<T> head(const std::vector<T> &v, std::size_t k) {
    std::vector<T> out(v.size(), T{});
    for (std::size_t i : top_k_indices(v, k)) {
        out[i] = v[i];
    }
    return out;
}

template <typename T>
std::vector<T> tail(const std::vector<T> &v, std::size_t k) {
    std::vector<T> out = v;
    for (std::size_t i : top_k_indices(v, k)) {
        out[i] = T{};
    }
    return out;
}

template <typename T>
std::vector<T> restrict_to(const std::vector<T> &v, const SupportSet &support) {
    if (support.universe() != v.size()) {
        throw shape_error("support universe " + std::to_string(support.universe()) + " does not match length " +
                          std::to_string(v.size()));
    }
    std::vector<T> out(v.size(), T{});
    for (std::size_t i : support.indices()) {
        out[i] = v[i];
    }
    return out;
}

template <typename T>
SupportSet support_of(const std::vector<T> &v) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] != T{}) {
            idx.push_back(i);
        }
    }
    return {std::move(idx), v.size()};
}

/// |tail(v, k)| <= eps * |v|
template <typename T>
bool is_approximately_sparse(const std::vector<T> &v, std::size_t k, double eps) {
    return l2_norm(tail(v, k)) <= eps * l2_norm(v);
}

/// Index of the conjugate partner of DFT coefficient i on a rows x cols grid
/// (1D spectra use cols == 1).
inline std::size_t conjugate_partner(std::size_t i, std::size_t rows, std::size_t cols) {
    const std::size_t r = i / cols;
    const std::size_t c = i % cols;
    return ((rows - r) % rows) * cols + (cols - c) % cols;
}

/// Top-k selection for DFT spectra of real signals: each coefficient is chosen together with
/// its conjugate partner, a pair costing two of the k slots and a self-conjugate coefficient
/// one slot. Groups are ranked by the larger modulus of the pair, ties by lower index; a group
/// that no longer fits is skipped so later self-conjugate groups may still fill the budget.
inline ComplexVector head_conjugate_pairs(const ComplexVector &v, std::size_t k, std::size_t rows, std::size_t cols) {
    detail::check_budget(k, v.size());
    if (rows * cols != v.size()) {
        throw shape_error("conjugate-pair head: grid " + std::to_string(rows) + "x" + std::to_string(cols) +
                          " does not match length " + std::to_string(v.size()));
    }
    struct Group {
        std::size_t lead;
        std::size_t partner;
        double mag;
    };
    std::vector<Group> groups;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const std::size_t p = conjugate_partner(i, rows, cols);
        if (p < i) {
            continue;
        }
        groups.push_back({i, p, std::max(std::abs(v[i]), std::abs(v[p]))});
    }
    std::stable_sort(groups.begin(), groups.end(), [](const Group &a, const Group &b) { return a.mag > b.mag; });
    ComplexVector out(v.size(), complex_t{});
    std::size_t slots = k;
    for (const Group &g : groups) {
        if (slots == 0) {
            break;
        }
        const std::size_t cost = g.lead == g.partner ? 1 : 2;
        if (cost > slots) {
            continue;
        }
        out[g.lead] = v[g.lead];
        out[g.partner] = v[g.partner];
        slots -= cost;
    }
    return out;
}

}  // namespace l0robust
