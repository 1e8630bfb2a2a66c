#pragma once

// Model-based iterative hard thresholding for y = F^{-1} xhat + e with xhat k-sparse
// and e t-sparse, plus the top-k projection used to build "compressed" signals.

#include "l0robust/core.hpp"
#include "l0robust/sparsity.hpp"
#include "l0robust/transforms.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace l0robust {

struct SparsityBudget {
    std::size_t k = 1;
    std::size_t t = 0;
    std::size_t max_iterations = 50;
    double stop_tol = 1e-9;

    /// Throws on invalid budgets and returns warnings for budgets outside the
    /// regime t <= n / (4k) in which the model-RIP argument applies.
    std::vector<std::string> validate(std::size_t n) const {
        if (k == 0) {
            throw invalid_input("k must be positive");
        }
        if (max_iterations == 0) {
            throw invalid_input("iteration cap T must be positive");
        }
        if (!(stop_tol >= 0.0)) {
            throw invalid_input("stop_tol must be nonnegative");
        }
        if (k > n || t > n) {
            throw invalid_input("k = " + std::to_string(k) + ", t = " + std::to_string(t) +
                                " must not exceed n = " + std::to_string(n));
        }
        std::vector<std::string> warnings;
        if (static_cast<double>(t) > static_cast<double>(n) / (4.0 * static_cast<double>(k))) {
            warnings.push_back("t = " + std::to_string(t) + " exceeds n/(4k) = " +
                               std::to_string(static_cast<double>(n) / (4.0 * static_cast<double>(k))) +
                               "; recovery guarantees do not apply");
        }
        return warnings;
    }
};

enum class InitKind { Zeros, Random };

struct Init {
    InitKind kind = InitKind::Zeros;
    std::uint64_t seed = 0;

    static Init zeros() { return {}; }
    static Init random(std::uint64_t seed) { return {InitKind::Random, seed}; }
};

/// Paper: the noise update reads the previous spectrum iterate (both updates computed from
/// iterate i). Sequential: the noise update reads the spectrum iterate just produced.
enum class UpdateOrder { Paper, Sequential };

/// TopK: plain head(k). ConjugatePairs: DFT-only, keeps conjugate-symmetric pairs together.
enum class Thresholding { TopK, ConjugatePairs };

inline std::string to_string(UpdateOrder o) { return o == UpdateOrder::Paper ? "paper" : "sequential"; }
inline std::string to_string(InitKind i) { return i == InitKind::Zeros ? "zeros" : "random"; }
inline std::string to_string(Thresholding t) { return t == Thresholding::TopK ? "topk" : "pairs"; }

inline UpdateOrder update_order_from_string(const std::string &s) {
    if (s == "paper") return UpdateOrder::Paper;
    if (s == "sequential") return UpdateOrder::Sequential;
    throw invalid_input("unknown update order '" + s + "' (expected paper|sequential)");
}

inline InitKind init_kind_from_string(const std::string &s) {
    if (s == "zeros") return InitKind::Zeros;
    if (s == "random") return InitKind::Random;
    throw invalid_input("unknown init '" + s + "' (expected zeros|random)");
}

inline Thresholding thresholding_from_string(const std::string &s) {
    if (s == "topk") return Thresholding::TopK;
    if (s == "pairs") return Thresholding::ConjugatePairs;
    throw invalid_input("unknown thresholding '" + s + "' (expected topk|pairs)");
}

/// Called once with the starting pair (iteration 0) and after every iteration i with the
/// same-index state (xhat^{[i+1]}, e^{[i+1]}) in both update orders.
using IterateObserver =
    std::function<void(std::size_t iteration, const ComplexVector &spectrum, const ComplexVector &noise)>;

struct IhtOptions {
    Init init;
    UpdateOrder order = UpdateOrder::Paper;
    Thresholding thresholding = Thresholding::TopK;
    /// Ground-truth spectrum for synthetic runs; fills RecoveryReport::tail_energy.
    std::optional<Spectrum> truth;
    IterateObserver observer;
};

struct RecoveryReport {
    Spectrum spectrum_estimate;
    Signal noise_estimate;
    Signal recovered_signal;
    std::size_t iterations_run = 0;
    /// |y - F^{-1} xhat - e| for the returned pair after each executed iteration.
    std::vector<double> residual_trace;
    std::optional<double> tail_energy;
    /// Largest imaginary part dropped when forming the real-valued outputs.
    double discarded_imag = 0.0;
    std::vector<std::string> warnings;
};

namespace detail {

using NoiseProjector = std::function<ComplexVector(const ComplexVector &residual)>;

inline ComplexVector threshold_spectrum(const ComplexVector &z, std::size_t k, Thresholding mode,
                                        const TransformKind &kind) {
    if (mode == Thresholding::ConjugatePairs) {
        return head_conjugate_pairs(z, k, kind.rows, kind.cols);
    }
    return head(z, k);
}

inline double relative_change(const ComplexVector &a, const ComplexVector &b) {
    double diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += std::norm(a[i] - b[i]);
    }
    diff = std::sqrt(diff);
    if (diff == 0.0) {
        return 0.0;
    }
    return diff / std::max(l2_norm(a), l2_norm(b));
}

struct LoopResult {
    ComplexVector spectrum;
    ComplexVector noise;
    ComplexVector spectrum_inverse;  // F^{-1} spectrum
    std::size_t iterations = 0;
    std::vector<double> residual_trace;
};

/// The shared iteration. `project_noise` empty means the noise estimate stays at zero.
inline LoopResult run_iht_loop(const Transform &transform, const ComplexVector &y, std::size_t k,
                               const NoiseProjector &project_noise, std::size_t max_iterations, double stop_tol,
                               UpdateOrder order, Thresholding thresholding, ComplexVector spectrum,
                               ComplexVector noise, const IterateObserver &observer) {
    const std::size_t n = y.size();
    ComplexVector spectrum_inverse = transform.inverse(spectrum);
    ComplexVector work(n);
    LoopResult out;
    if (observer) {
        observer(0, spectrum, noise);
    }
    for (std::size_t it = 1; it <= max_iterations; ++it) {
        for (std::size_t j = 0; j < n; ++j) {
            work[j] = y[j] - noise[j];
        }
        ComplexVector next_spectrum = threshold_spectrum(transform.forward(work), k, thresholding, transform.kind());
        ComplexVector next_inverse = transform.inverse(next_spectrum);

        ComplexVector next_noise;
        if (project_noise) {
            const ComplexVector &basis = order == UpdateOrder::Paper ? spectrum_inverse : next_inverse;
            for (std::size_t j = 0; j < n; ++j) {
                work[j] = y[j] - basis[j];
            }
            next_noise = project_noise(work);
        } else {
            next_noise = noise;
        }

        // In Paper order the spectrum iterate was produced from the old noise iterate, and
        // that is the consistent pair to report.
        const ComplexVector &paired_noise = order == UpdateOrder::Paper ? noise : next_noise;
        double res = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            res += std::norm(y[j] - next_inverse[j] - paired_noise[j]);
        }
        out.residual_trace.push_back(std::sqrt(res));
        if (observer) {
            observer(it, next_spectrum, next_noise);
        }

        const double dx = relative_change(next_spectrum, spectrum);
        const double de = relative_change(next_noise, noise);
        out.iterations = it;

        if (order == UpdateOrder::Paper) {
            out.noise = noise;
        } else {
            out.noise = next_noise;
        }
        spectrum = std::move(next_spectrum);
        spectrum_inverse = std::move(next_inverse);
        noise = std::move(next_noise);
        if ((dx == 0.0 && de == 0.0) || (dx < stop_tol && de < stop_tol)) {
            break;
        }
    }
    out.spectrum = std::move(spectrum);
    out.spectrum_inverse = std::move(spectrum_inverse);
    return out;
}

inline ComplexVector random_start(std::size_t n, double target_norm, std::mt19937_64 &rng) {
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    ComplexVector v(n);
    for (auto &a : v) {
        a = unif(rng);
    }
    const double nrm = l2_norm(v);
    if (nrm > 0.0 && target_norm > 0.0) {
        for (auto &a : v) {
            a *= target_norm / nrm;
        }
    } else {
        std::fill(v.begin(), v.end(), complex_t{});
    }
    return v;
}

inline void check_thresholding(Thresholding mode, const TransformKind &kind) {
    if (mode == Thresholding::ConjugatePairs && kind.family != Family::DFT) {
        throw invalid_input("conjugate-pair thresholding applies to DFT spectra only");
    }
}

inline Signal real_part(const ComplexVector &v, double &max_imag) {
    Signal out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = v[i].real();
        max_imag = std::max(max_imag, std::abs(v[i].imag()));
    }
    return out;
}

}  // namespace detail

inline RecoveryReport iht(const Signal &y, const Transform &transform, const SparsityBudget &budget,
                          const IhtOptions &options = {}) {
    const TransformKind &kind = transform.kind();
    const std::size_t n = kind.size();
    if (y.size() != n) {
        throw shape_error("signal of length " + std::to_string(y.size()) + " does not match transform " +
                          to_string(kind));
    }
    RecoveryReport report;
    report.warnings = budget.validate(n);
    if (budget.k + budget.t >= n) {
        throw invalid_input("k + t = " + std::to_string(budget.k + budget.t) + " >= n = " + std::to_string(n) +
                            ": decomposition is not identifiable");
    }
    detail::check_thresholding(options.thresholding, kind);
    if (options.truth && options.truth->size() != n) {
        throw shape_error("ground-truth spectrum length does not match transform");
    }

    const ComplexVector yc = to_complex(y);
    ComplexVector spectrum(n, complex_t{});
    ComplexVector noise(n, complex_t{});
    if (options.init.kind == InitKind::Random) {
        std::mt19937_64 rng(options.init.seed);
        const double ny = l2_norm(y);
        spectrum = detail::random_start(n, ny, rng);
        ComplexVector e0 = detail::random_start(n, ny, rng);
        if (budget.t > 0) {
            noise = std::move(e0);
        }
    }

    detail::NoiseProjector project;
    if (budget.t > 0) {
        const std::size_t t = budget.t;
        project = [t](const ComplexVector &r) { return head(r, t); };
    }
    detail::LoopResult loop =
        detail::run_iht_loop(transform, yc, budget.k, project, budget.max_iterations, budget.stop_tol, options.order,
                             options.thresholding, std::move(spectrum), std::move(noise), options.observer);

    report.recovered_signal = detail::real_part(loop.spectrum_inverse, report.discarded_imag);
    report.noise_estimate = detail::real_part(loop.noise, report.discarded_imag);
    report.spectrum_estimate = Spectrum{std::move(loop.spectrum), kind};
    report.iterations_run = loop.iterations;
    report.residual_trace = std::move(loop.residual_trace);
    if (options.truth) {
        report.tail_energy = l2_norm(tail(options.truth->values, budget.k));
    }
    return report;
}

inline RecoveryReport iht(const Signal &y, const TransformKind &kind, const SparsityBudget &budget,
                          const IhtOptions &options = {}) {
    return iht(y, Transform(kind), budget, options);
}

/// F^{-1}(head(F x, k)): projection of x onto its top-k transform coefficients.
inline Signal compress(const Signal &x, const Transform &transform, std::size_t k,
                       Thresholding mode = Thresholding::TopK) {
    detail::check_thresholding(mode, transform.kind());
    Spectrum s = transform.forward(x);
    s.values = detail::threshold_spectrum(s.values, k, mode, transform.kind());
    return transform.inverse_real(s);
}

inline Signal compress(const Signal &x, const TransformKind &kind, std::size_t k,
                       Thresholding mode = Thresholding::TopK) {
    return compress(x, Transform(kind), k, mode);
}

}  // namespace l0robust
