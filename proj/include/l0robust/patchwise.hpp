#pragma once

// Patchwise IHT: localize one contiguous square block of corruption by running IHT once per
// candidate block, with the noise estimate confined to that block, and keeping the candidate
// whose recovered sparse spectrum has the smallest norm.

#include "l0robust/core.hpp"
#include "l0robust/recovery.hpp"
#include "l0robust/sparsity.hpp"
#include "l0robust/transforms.hpp"

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace l0robust {

struct PatchGrid {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t patch_side = 1;
    std::size_t stride = 1;

    /// Grid with the default half-overlapping stride max(1, side / 2).
    static PatchGrid with_default_stride(std::size_t rows, std::size_t cols, std::size_t side) {
        return {rows, cols, side, std::max<std::size_t>(1, side / 2)};
    }

    void validate() const {
        if (rows == 0 || cols == 0) {
            throw invalid_input("patch grid: image shape must be positive");
        }
        if (patch_side == 0 || stride == 0) {
            throw invalid_input("patch grid: patch side and stride must be positive");
        }
        if (patch_side > std::min(rows, cols)) {
            throw invalid_input("patch side " + std::to_string(patch_side) + " exceeds image side " +
                                std::to_string(std::min(rows, cols)));
        }
    }
};

struct Anchor {
    std::size_t row = 0;
    std::size_t col = 0;
    bool operator==(const Anchor &) const = default;
};

struct PatchCandidate {
    Anchor anchor;
    SupportSet pixels;
};

/// Noise update inside each candidate run.
/// Block: e = restrict(y - F^{-1} xhat, block). HeadInBlock: e = head(y - F^{-1} xhat, t).
enum class PatchNoiseUpdate { Block, HeadInBlock };

/// How the winning candidate is chosen.
enum class PatchSelector { SpectrumNorm, Residual };

struct PatchwiseOptions {
    UpdateOrder order = UpdateOrder::Paper;
    PatchNoiseUpdate noise_update = PatchNoiseUpdate::Block;
    /// Only read with PatchNoiseUpdate::HeadInBlock.
    std::size_t t = 0;
    PatchSelector selector = PatchSelector::SpectrumNorm;
    double stop_tol = 1e-9;
    std::size_t threads = 1;
};

struct CandidateScore {
    Anchor anchor;
    double norm = 0.0;      // |xhat^{[T+1]}|
    double residual = 0.0;  // |y - F^{-1} xhat - e|
};

struct PatchReport {
    SupportSet best_patch;
    Anchor best_anchor;
    std::size_t best_index = 0;
    Signal recovered_signal;
    double best_norm = 0.0;
    std::vector<CandidateScore> per_candidate;
};

namespace detail {

inline std::vector<std::size_t> axis_anchors(std::size_t side, std::size_t patch, std::size_t stride) {
    std::vector<std::size_t> anchors;
    std::size_t a = 0;
    for (; a + patch <= side; a += stride) {
        anchors.push_back(a);
    }
    if (anchors.back() + patch < side) {
        anchors.push_back(side - patch);  // clamp so the far edge is covered
    }
    return anchors;
}

}  // namespace detail

/// Row-major enumeration of the square candidate blocks.
inline std::vector<PatchCandidate> patch_candidates(const PatchGrid &grid) {
    grid.validate();
    const auto row_anchors = detail::axis_anchors(grid.rows, grid.patch_side, grid.stride);
    const auto col_anchors = detail::axis_anchors(grid.cols, grid.patch_side, grid.stride);
    std::vector<PatchCandidate> out;
    out.reserve(row_anchors.size() * col_anchors.size());
    const std::size_t n = grid.rows * grid.cols;
    for (std::size_t r0 : row_anchors) {
        for (std::size_t c0 : col_anchors) {
            std::vector<std::size_t> idx;
            idx.reserve(grid.patch_side * grid.patch_side);
            for (std::size_t r = r0; r < r0 + grid.patch_side; ++r) {
                for (std::size_t c = c0; c < c0 + grid.patch_side; ++c) {
                    idx.push_back(r * grid.cols + c);
                }
            }
            out.push_back({{r0, c0}, SupportSet(std::move(idx), n)});
        }
    }
    return out;
}

inline PatchReport patchwise_iht(const Signal &y, const TransformKind &kind, std::size_t k,
                                 std::size_t max_iterations, const PatchGrid &grid,
                                 const PatchwiseOptions &options = {}) {
    if (!kind.is_2d()) {
        throw invalid_input("patchwise IHT needs a 2D transform kind");
    }
    if (kind.rows != grid.rows || kind.cols != grid.cols) {
        throw shape_error("patch grid " + std::to_string(grid.rows) + "x" + std::to_string(grid.cols) +
                          " does not match transform " + to_string(kind));
    }
    if (y.size() != kind.size()) {
        throw shape_error("signal length does not match transform " + to_string(kind));
    }
    if (k == 0 || k >= kind.size()) {
        throw invalid_input("k must satisfy 0 < k < n");
    }
    if (max_iterations == 0) {
        throw invalid_input("iteration cap T must be positive");
    }
    const std::vector<PatchCandidate> candidates = patch_candidates(grid);
    const Transform transform(kind);
    const ComplexVector yc = to_complex(y);
    const std::size_t n = kind.size();
    if (options.noise_update == PatchNoiseUpdate::HeadInBlock && options.t > n) {
        throw invalid_input("t exceeds n");
    }

    struct Outcome {
        double norm = 0.0;
        double residual = 0.0;
        ComplexVector inverse;
    };
    std::vector<Outcome> outcomes(candidates.size());

    parallel_for(candidates.size(), options.threads, [&](std::size_t c) {
        const SupportSet &block = candidates[c].pixels;
        detail::NoiseProjector project;
        if (options.noise_update == PatchNoiseUpdate::Block) {
            project = [&block](const ComplexVector &r) { return restrict_to(r, block); };
        } else if (options.t > 0) {
            const std::size_t t = options.t;
            project = [t](const ComplexVector &r) { return head(r, t); };
        }
        detail::LoopResult loop =
            detail::run_iht_loop(transform, yc, k, project, max_iterations, options.stop_tol, options.order,
                                 Thresholding::TopK, ComplexVector(n), ComplexVector(n), {});
        outcomes[c].norm = l2_norm(loop.spectrum);
        outcomes[c].residual = loop.residual_trace.empty() ? l2_norm(yc) : loop.residual_trace.back();
        outcomes[c].inverse = std::move(loop.spectrum_inverse);
    });

    // Reduction in scan order; strict comparison keeps the earliest candidate on ties.
    PatchReport report;
    report.per_candidate.reserve(candidates.size());
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        report.per_candidate.push_back({candidates[c].anchor, outcomes[c].norm, outcomes[c].residual});
        const double score = options.selector == PatchSelector::SpectrumNorm ? outcomes[c].norm : outcomes[c].residual;
        if (score < best_score) {
            best_score = score;
            report.best_index = c;
        }
    }
    const std::size_t b = report.best_index;
    report.best_patch = candidates[b].pixels;
    report.best_anchor = candidates[b].anchor;
    report.best_norm = outcomes[b].norm;
    double ignored = 0.0;
    report.recovered_signal = detail::real_part(outcomes[b].inverse, ignored);
    return report;
}

}  // namespace l0robust
