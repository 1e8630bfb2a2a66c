#pragma once

// Seeded L0 adversaries: random supports, largest-pixel supports, a greedy worst-case
// heuristic, and contiguous patches that replace pixel values.

#include "l0robust/core.hpp"
#include "l0robust/patchwise.hpp"
#include "l0robust/sparsity.hpp"
#include "l0robust/transforms.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace l0robust {

enum class CorruptionMode { RandomSupport, LargestPixels, ContiguousPatch };
enum class MagnitudeKind { Gaussian, Constant, Extreme };

struct Magnitude {
    MagnitudeKind kind = MagnitudeKind::Extreme;
    /// sigma for Gaussian, the value for Constant, the multiplier of max|x| for Extreme.
    double value = 10.0;

    static Magnitude gaussian(double sigma) { return {MagnitudeKind::Gaussian, sigma}; }
    static Magnitude constant(double c) { return {MagnitudeKind::Constant, c}; }
    static Magnitude extreme(double multiplier) { return {MagnitudeKind::Extreme, multiplier}; }

    void validate() const {
        if (!std::isfinite(value) || value == 0.0 || (kind != MagnitudeKind::Constant && value < 0.0)) {
            throw invalid_input("corruption magnitude must be finite and nonzero (positive for gaussian/extreme)");
        }
    }

    bool operator==(const Magnitude &) const = default;
};

struct PatchGeometry {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t side = 1;
    /// Drawn from the seed when absent.
    std::optional<Anchor> anchor;
    bool circular = false;

    bool operator==(const PatchGeometry &) const = default;
};

struct CorruptionSpec {
    CorruptionMode mode = CorruptionMode::RandomSupport;
    std::size_t t = 0;
    PatchGeometry patch;
    Magnitude magnitude;
    std::uint64_t seed = 0;

    bool operator==(const CorruptionSpec &) const = default;
};

struct Corruption {
    Signal y;
    Signal e;  // realized y - x
    SupportSet support;
};

namespace detail {

inline double max_abs(const Signal &x) { return linf_norm(x); }

/// One signed spike value. Extreme spikes are +-multiplier * max|x| (or +-multiplier for x = 0).
inline double draw_spike(const Magnitude &m, double peak, std::mt19937_64 &rng) {
    switch (m.kind) {
        case MagnitudeKind::Gaussian: {
            std::normal_distribution<double> g(0.0, m.value);
            double v = 0.0;
            while (v == 0.0) {
                v = g(rng);
            }
            return v;
        }
        case MagnitudeKind::Constant: return m.value;
        case MagnitudeKind::Extreme: {
            std::bernoulli_distribution coin(0.5);
            const double mag = m.value * (peak > 0.0 ? peak : 1.0);
            return coin(rng) ? mag : -mag;
        }
    }
    return m.value;
}

inline Corruption apply_spikes(const Signal &x, const std::vector<std::size_t> &support,
                               const std::vector<double> &values) {
    Corruption c;
    c.y = x;
    c.e.assign(x.size(), 0.0);
    for (std::size_t i = 0; i < support.size(); ++i) {
        const std::size_t j = support[i];
        c.y[j] = x[j] + values[i];
        if (c.y[j] == x[j]) {
            // Spike below the resolution of x[j]; nudge so the support size stays exact.
            c.y[j] = std::nextafter(x[j], values[i] > 0 ? std::numeric_limits<double>::infinity()
                                                        : -std::numeric_limits<double>::infinity());
        }
        c.e[j] = c.y[j] - x[j];
    }
    c.support = SupportSet(support, x.size());
    return c;
}

inline void check_t(std::size_t t, std::size_t n) {
    if (t > n) {
        throw invalid_input("corruption budget t = " + std::to_string(t) + " exceeds n = " + std::to_string(n));
    }
}

}  // namespace detail

/// t spikes on a support drawn uniformly without replacement.
inline Corruption random_l0(const Signal &x, const CorruptionSpec &spec) {
    detail::check_t(spec.t, x.size());
    spec.magnitude.validate();
    std::mt19937_64 rng(spec.seed);
    std::vector<std::size_t> pool(x.size());
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < spec.t; ++i) {
        std::uniform_int_distribution<std::size_t> d(i, x.size() - 1);
        std::swap(pool[i], pool[d(rng)]);
    }
    std::vector<std::size_t> support(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(spec.t));
    std::sort(support.begin(), support.end());
    const double peak = detail::max_abs(x);
    std::vector<double> values(support.size());
    for (double &v : values) {
        v = detail::draw_spike(spec.magnitude, peak, rng);
    }
    return detail::apply_spikes(x, support, values);
}

/// t spikes on the t largest-magnitude samples of x (ties towards lower index).
inline Corruption largest_l0(const Signal &x, const CorruptionSpec &spec) {
    detail::check_t(spec.t, x.size());
    spec.magnitude.validate();
    std::mt19937_64 rng(spec.seed);
    const std::vector<std::size_t> support = top_k_indices(x, spec.t);
    const double peak = detail::max_abs(x);
    std::vector<double> values(support.size());
    for (double &v : values) {
        v = detail::draw_spike(spec.magnitude, peak, rng);
    }
    return detail::apply_spikes(x, support, values);
}

/// Greedy stress generator, not an optimal adversary: places the t spikes on the samples where
/// the top-k part of x's spectrum, mapped back to the sample domain, is largest in modulus,
/// with the spike sign matching that sample.
inline Corruption worst_support_l0(const Signal &x, const TransformKind &kind, std::size_t k, std::size_t t,
                                   const Magnitude &magnitude, std::uint64_t seed) {
    const std::size_t n = kind.size();
    if (x.size() != n) {
        throw shape_error("worst_support_l0: signal length does not match transform");
    }
    detail::check_t(t, n);
    if (k + t >= n) {
        throw invalid_input("worst_support_l0: k + t >= n leaves no identifiable decomposition");
    }
    magnitude.validate();
    const Transform transform(kind);
    ComplexVector top = head(transform.forward(to_complex(x)), k);
    const ComplexVector basis = transform.inverse(top);
    std::vector<double> score(n);
    for (std::size_t j = 0; j < n; ++j) {
        score[j] = std::abs(basis[j]);
    }
    const std::vector<std::size_t> support = top_k_indices(score, t);
    std::mt19937_64 rng(seed);
    const double peak = detail::max_abs(x);
    std::vector<double> values(support.size());
    for (std::size_t i = 0; i < support.size(); ++i) {
        const double v = std::abs(detail::draw_spike(magnitude, peak, rng));
        values[i] = basis[support[i]].real() < 0.0 ? -v : v;
    }
    return detail::apply_spikes(x, support, values);
}

/// A rectangular block of replacement values; `mask[i] == 0` leaves the image pixel untouched.
struct PatchPixels {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;
    std::vector<std::uint8_t> mask;

    static PatchPixels filled(std::size_t side, double value, bool circular = false) {
        PatchPixels p{side, side, std::vector<double>(side * side, value), std::vector<std::uint8_t>(side * side, 1)};
        if (circular) {
            const double centre = (static_cast<double>(side) - 1.0) / 2.0;
            const double radius = static_cast<double>(side) / 2.0;
            for (std::size_t r = 0; r < side; ++r) {
                for (std::size_t c = 0; c < side; ++c) {
                    const double dr = static_cast<double>(r) - centre;
                    const double dc = static_cast<double>(c) - centre;
                    p.mask[r * side + c] = (dr * dr + dc * dc <= radius * radius) ? 1 : 0;
                }
            }
        }
        return p;
    }
};

/// Replaces the covered pixels of a rows x cols image with the patch values.
/// `support` is the covered pixel set; e = y - x is zero outside it.
inline Corruption overlay_patch(const Signal &image, std::size_t rows, std::size_t cols, const PatchPixels &patch,
                                Anchor anchor) {
    if (image.size() != rows * cols) {
        throw shape_error("overlay_patch: image length does not match shape");
    }
    if (patch.values.size() != patch.rows * patch.cols ||
        (!patch.mask.empty() && patch.mask.size() != patch.values.size())) {
        throw shape_error("overlay_patch: malformed patch");
    }
    if (anchor.row + patch.rows > rows || anchor.col + patch.cols > cols) {
        throw invalid_input("overlay_patch: patch at (" + std::to_string(anchor.row) + "," +
                            std::to_string(anchor.col) + ") does not fit in " + std::to_string(rows) + "x" +
                            std::to_string(cols) + " image");
    }
    Corruption c;
    c.y = image;
    c.e.assign(image.size(), 0.0);
    std::vector<std::size_t> covered;
    for (std::size_t r = 0; r < patch.rows; ++r) {
        for (std::size_t col = 0; col < patch.cols; ++col) {
            const std::size_t p = r * patch.cols + col;
            if (!patch.mask.empty() && patch.mask[p] == 0) {
                continue;
            }
            const std::size_t i = (anchor.row + r) * cols + anchor.col + col;
            c.y[i] = patch.values[p];
            c.e[i] = c.y[i] - image[i];
            covered.push_back(i);
        }
    }
    c.support = SupportSet(std::move(covered), image.size());
    return c;
}

/// Dispatches on spec.mode. Patch mode fills the block from spec.magnitude: Constant(c) uses c,
/// Extreme(m) uses m * max|x|, Gaussian(sigma) draws each pixel from N(0.5, sigma) clamped to [0, 1].
inline Corruption corrupt(const Signal &x, std::size_t rows, std::size_t cols, const CorruptionSpec &spec) {
    if (x.size() != rows * cols) {
        throw shape_error("corrupt: image length does not match shape");
    }
    switch (spec.mode) {
        case CorruptionMode::RandomSupport: return random_l0(x, spec);
        case CorruptionMode::LargestPixels: return largest_l0(x, spec);
        case CorruptionMode::ContiguousPatch: break;
    }
    spec.magnitude.validate();
    const std::size_t side = spec.patch.side;
    if (side == 0 || side > rows || side > cols) {
        throw invalid_input("corrupt: patch side must be in [1, min(rows, cols)]");
    }
    std::mt19937_64 rng(spec.seed);
    Anchor anchor;
    if (spec.patch.anchor) {
        anchor = *spec.patch.anchor;
    } else {
        std::uniform_int_distribution<std::size_t> dr(0, rows - side);
        std::uniform_int_distribution<std::size_t> dc(0, cols - side);
        anchor.row = dr(rng);
        anchor.col = dc(rng);
    }
    PatchPixels patch = PatchPixels::filled(side, 0.0, spec.patch.circular);
    const double peak = detail::max_abs(x);
    std::normal_distribution<double> g(0.5, spec.magnitude.value);
    for (double &v : patch.values) {
        switch (spec.magnitude.kind) {
            case MagnitudeKind::Constant: v = spec.magnitude.value; break;
            case MagnitudeKind::Extreme: v = spec.magnitude.value * (peak > 0.0 ? peak : 1.0); break;
            case MagnitudeKind::Gaussian: v = std::clamp(g(rng), 0.0, 1.0); break;
        }
    }
    return overlay_patch(x, rows, cols, patch, anchor);
}

// JSON round trip for CorruptionSpec (the CLI config format).

inline std::string to_string(CorruptionMode m) {
    switch (m) {
        case CorruptionMode::RandomSupport: return "random";
        case CorruptionMode::LargestPixels: return "largest";
        case CorruptionMode::ContiguousPatch: return "patch";
    }
    return "random";
}

inline CorruptionMode corruption_mode_from_string(const std::string &s) {
    if (s == "random") return CorruptionMode::RandomSupport;
    if (s == "largest") return CorruptionMode::LargestPixels;
    if (s == "patch") return CorruptionMode::ContiguousPatch;
    throw invalid_input("unknown corruption mode '" + s + "' (expected random|largest|patch)");
}

inline std::string to_string(MagnitudeKind m) {
    switch (m) {
        case MagnitudeKind::Gaussian: return "gaussian";
        case MagnitudeKind::Constant: return "constant";
        case MagnitudeKind::Extreme: return "extreme";
    }
    return "extreme";
}

inline MagnitudeKind magnitude_kind_from_string(const std::string &s) {
    if (s == "gaussian") return MagnitudeKind::Gaussian;
    if (s == "constant") return MagnitudeKind::Constant;
    if (s == "extreme") return MagnitudeKind::Extreme;
    throw invalid_input("unknown magnitude '" + s + "' (expected gaussian|constant|extreme)");
}

inline void to_json(nlohmann::json &j, const CorruptionSpec &s) {
    j = nlohmann::json{{"mode", to_string(s.mode)},
                       {"t", s.t},
                       {"magnitude", {{"kind", to_string(s.magnitude.kind)}, {"value", s.magnitude.value}}},
                       {"seed", s.seed}};
    if (s.mode == CorruptionMode::ContiguousPatch) {
        nlohmann::json p{{"rows", s.patch.rows}, {"cols", s.patch.cols}, {"side", s.patch.side},
                         {"circular", s.patch.circular}};
        if (s.patch.anchor) {
            p["anchor"] = {s.patch.anchor->row, s.patch.anchor->col};
        }
        j["patch"] = p;
    }
}

inline void from_json(const nlohmann::json &j, CorruptionSpec &s) {
    s = CorruptionSpec{};
    s.mode = corruption_mode_from_string(j.value("mode", std::string("random")));
    s.t = j.value("t", std::size_t{0});
    s.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("magnitude")) {
        const auto &m = j.at("magnitude");
        s.magnitude.kind = magnitude_kind_from_string(m.value("kind", std::string("extreme")));
        s.magnitude.value = m.value("value", 10.0);
    }
    if (j.contains("patch")) {
        const auto &p = j.at("patch");
        s.patch.rows = p.value("rows", std::size_t{0});
        s.patch.cols = p.value("cols", std::size_t{0});
        s.patch.side = p.value("side", std::size_t{1});
        s.patch.circular = p.value("circular", false);
        if (p.contains("anchor")) {
            s.patch.anchor = Anchor{p.at("anchor").at(0).get<std::size_t>(), p.at("anchor").at(1).get<std::size_t>()};
        }
    }
}

}  // namespace l0robust
