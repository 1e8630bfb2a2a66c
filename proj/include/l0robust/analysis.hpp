#pragma once

// Verification oracles and metrics: the uncertainty principle |Fx|_inf <= alpha sqrt(k) |x|,
// restricted-isometry constants of M = [F^{-1} I] over the (k, t) model, an exhaustive
// decoder for tiny instances, and the L-infinity bound check for IHT output.

#include "l0robust/core.hpp"
#include "l0robust/corruption.hpp"
#include "l0robust/recovery.hpp"
#include "l0robust/sparsity.hpp"
#include "l0robust/transforms.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace l0robust {

enum class UncertaintyProbe {
    Random,   // uniform support, standard normal values
    Aligned,  // unit moduli, phases lined up with one row of F (the Cauchy-Schwarz worst case)
};

/// Worst observed |Fx|_inf / (alpha sqrt(k) |x|) over `trials` random k-sparse x.
inline double uncertainty_check(const TransformKind &kind, std::size_t k, std::size_t trials, std::uint64_t seed,
                                UncertaintyProbe probe = UncertaintyProbe::Random) {
    const std::size_t n = kind.size();
    if (k == 0 || k > n) {
        throw invalid_input("uncertainty_check: need 0 < k <= n");
    }
    const Eigen::MatrixXcd f = materialize(kind);
    const double alpha = f.cwiseAbs().maxCoeff();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::uniform_int_distribution<std::size_t> pick_row(0, n - 1);
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    double worst = 0.0;
    Eigen::VectorXcd fx(static_cast<Eigen::Index>(n));
    for (std::size_t trial = 0; trial < trials; ++trial) {
        // Partial Fisher-Yates draw of the support.
        for (std::size_t i = 0; i < k; ++i) {
            std::uniform_int_distribution<std::size_t> d(i, n - 1);
            std::swap(pool[i], pool[d(rng)]);
        }
        const std::size_t row = probe == UncertaintyProbe::Aligned ? pick_row(rng) : 0;
        fx.setZero();
        double norm_sq = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const auto j = static_cast<Eigen::Index>(pool[i]);
            complex_t value = normal(rng);
            if (probe == UncertaintyProbe::Aligned) {
                const complex_t entry = f(static_cast<Eigen::Index>(row), j);
                const double mag = std::abs(entry);
                value = mag > 0.0 ? std::conj(entry) / mag : complex_t(1.0);
            }
            norm_sq += std::norm(value);
            fx += f.col(j) * value;
        }
        const double denom = alpha * std::sqrt(static_cast<double>(k)) * std::sqrt(norm_sq);
        if (denom > 0.0) {
            worst = std::max(worst, fx.cwiseAbs().maxCoeff() / denom);
        }
    }
    return worst;
}

struct RipReport {
    double delta = 0.0;
    SupportSet worst_spectrum_support;
    SupportSet worst_signal_support;
    std::size_t supports_checked = 0;
    bool exhaustive = false;
};

enum class RipMode { Auto, Exhaustive, Sampled };

struct RipOptions {
    RipMode mode = RipMode::Auto;
    std::size_t samples = 10000;
    std::uint64_t seed = 0;
    /// Enumerate combinations in reverse lexicographic order (an independent re-enumeration).
    bool reversed = false;
    std::size_t threads = 1;
};

namespace detail {

inline std::vector<std::vector<std::size_t>> combinations(std::size_t n, std::size_t k) {
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> c(k);
    std::iota(c.begin(), c.end(), std::size_t{0});
    if (k > n) {
        return out;
    }
    while (true) {
        out.push_back(c);
        std::size_t i = k;
        while (i > 0 && c[i - 1] == n - k + (i - 1)) {
            --i;
        }
        if (i == 0) {
            break;
        }
        ++c[i - 1];
        for (std::size_t j = i; j < k; ++j) {
            c[j] = c[j - 1] + 1;
        }
    }
    return out;
}

/// [F^{-1}_{:,S}  I_{:,Q}] as a dense n x (|S| + |Q|) matrix.
inline Eigen::MatrixXcd model_submatrix(const Eigen::MatrixXcd &finv, const std::vector<std::size_t> &spectrum_support,
                                        const std::vector<std::size_t> &signal_support) {
    const Eigen::Index n = finv.rows();
    const auto ks = static_cast<Eigen::Index>(spectrum_support.size());
    const auto ts = static_cast<Eigen::Index>(signal_support.size());
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(n, ks + ts);
    for (Eigen::Index c = 0; c < ks; ++c) {
        a.col(c) = finv.col(static_cast<Eigen::Index>(spectrum_support[static_cast<std::size_t>(c)]));
    }
    for (Eigen::Index c = 0; c < ts; ++c) {
        a(static_cast<Eigen::Index>(signal_support[static_cast<std::size_t>(c)]), ks + c) = 1.0;
    }
    return a;
}

inline double isometry_defect(const Eigen::MatrixXcd &a) {
    const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a);
    const auto &s = svd.singularValues();
    const double smax = s.maxCoeff();
    const double smin = s.minCoeff();
    return std::max(1.0 - smin, smax - 1.0);
}

}  // namespace detail

/// Restricted-isometry constant of M = [F^{-1} I] over supports |S| = k (spectrum side) and
/// |Q| = t (signal side): delta = max over pairs of max(1 - sigma_min, sigma_max - 1).
inline RipReport model_rip_constant(const TransformKind &kind, std::size_t k, std::size_t t,
                                    std::size_t exhaustive_limit, const RipOptions &options = {}) {
    const std::size_t n = kind.size();
    if (k == 0 || k > n || t > n) {
        throw invalid_input("model_rip_constant: need 0 < k <= n and t <= n");
    }
    const std::size_t outer_count = binomial_capped(n, k, exhaustive_limit);
    const std::size_t inner_count = binomial_capped(n, t, exhaustive_limit);
    const bool fits = outer_count <= exhaustive_limit && inner_count <= exhaustive_limit &&
                      static_cast<long double>(outer_count) * static_cast<long double>(inner_count) <=
                          static_cast<long double>(exhaustive_limit);
    if (options.mode == RipMode::Exhaustive && !fits) {
        throw combinatorial_limit("exhaustive RIP enumeration over C(" + std::to_string(n) + "," + std::to_string(k) +
                                  ") x C(" + std::to_string(n) + "," + std::to_string(t) + ") pairs exceeds limit " +
                                  std::to_string(exhaustive_limit));
    }
    const Eigen::MatrixXcd finv = materialize(kind).adjoint();
    RipReport report;

    if (options.mode != RipMode::Sampled && fits) {
        auto outer = detail::combinations(n, k);
        auto inner = detail::combinations(n, t);
        if (options.reversed) {
            std::reverse(outer.begin(), outer.end());
            std::reverse(inner.begin(), inner.end());
        }
        struct Best {
            double delta = -1.0;
            std::size_t inner = 0;
        };
        std::vector<Best> best(outer.size());
        parallel_for(outer.size(), options.threads, [&](std::size_t o) {
            for (std::size_t q = 0; q < inner.size(); ++q) {
                const double d = detail::isometry_defect(detail::model_submatrix(finv, outer[o], inner[q]));
                if (d > best[o].delta) {
                    best[o] = {d, q};
                }
            }
        });
        std::size_t arg = 0;
        for (std::size_t o = 1; o < best.size(); ++o) {
            if (best[o].delta > best[arg].delta) {
                arg = o;
            }
        }
        report.delta = std::max(0.0, best[arg].delta);
        report.worst_spectrum_support = SupportSet(outer[arg], n);
        report.worst_signal_support = SupportSet(inner[best[arg].inner], n);
        report.supports_checked = outer.size() * inner.size();
        report.exhaustive = true;
        return report;
    }

    std::mt19937_64 rng(options.seed);
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    const auto draw = [&](std::size_t m) {
        for (std::size_t i = 0; i < m; ++i) {
            std::uniform_int_distribution<std::size_t> d(i, n - 1);
            std::swap(pool[i], pool[d(rng)]);
        }
        std::vector<std::size_t> s(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(m));
        std::sort(s.begin(), s.end());
        return s;
    };
    report.delta = -1.0;
    for (std::size_t i = 0; i < options.samples; ++i) {
        auto s = draw(k);
        auto q = draw(t);
        const double d = detail::isometry_defect(detail::model_submatrix(finv, s, q));
        if (d > report.delta) {
            report.delta = d;
            report.worst_spectrum_support = SupportSet(s, n);
            report.worst_signal_support = SupportSet(q, n);
        }
    }
    report.delta = std::max(0.0, report.delta);
    report.supports_checked = options.samples;
    report.exhaustive = false;
    return report;
}

struct DecodeResult {
    Spectrum spectrum;
    Signal noise;
    double residual = 0.0;
    SupportSet spectrum_support;
    SupportSet noise_support;
    std::size_t pairs_checked = 0;
    /// Another support pair fits y to within the residual tolerance with a different decomposition.
    bool ambiguous = false;
};

inline constexpr std::size_t kBruteForceLimit = 1000000;

/// Exhaustive least-squares decoder for y ~ F^{-1} xhat_S + e_Q over all |S| = k, |Q| = t.
/// Returns the first minimizer in lexicographic (S, Q) order.
inline DecodeResult bruteforce_decode(const Signal &y, const TransformKind &kind, std::size_t k, std::size_t t,
                                      std::size_t limit = kBruteForceLimit) {
    const std::size_t n = kind.size();
    if (y.size() != n) {
        throw shape_error("bruteforce_decode: signal length does not match transform");
    }
    if (k > n || t > n) {
        throw invalid_input("bruteforce_decode: k and t must not exceed n");
    }
    const std::size_t c_k = binomial_capped(n, k, limit);
    const std::size_t c_t = binomial_capped(n, t, limit);
    if (c_k > limit || c_t > limit ||
        static_cast<long double>(c_k) * static_cast<long double>(c_t) > static_cast<long double>(limit)) {
        throw combinatorial_limit("bruteforce_decode: C(n,k) * C(n,t) exceeds " + std::to_string(limit));
    }
    const Eigen::MatrixXcd finv = materialize(kind).adjoint();
    Eigen::VectorXcd yv(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        yv[static_cast<Eigen::Index>(i)] = y[i];
    }
    const auto spectrum_sets = detail::combinations(n, k);
    const auto noise_sets = detail::combinations(n, t);

    const auto solve = [&](const std::vector<std::size_t> &s, const std::vector<std::size_t> &q,
                           Eigen::VectorXcd &coef) {
        if (s.empty() && q.empty()) {
            coef.resize(0);
            return yv.norm();
        }
        const Eigen::MatrixXcd a = detail::model_submatrix(finv, s, q);
        coef = a.colPivHouseholderQr().solve(yv);
        return (yv - a * coef).norm();
    };

    DecodeResult out;
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_s = 0;
    std::size_t best_q = 0;
    Eigen::VectorXcd coef;
    Eigen::VectorXcd best_coef;
    for (std::size_t si = 0; si < spectrum_sets.size(); ++si) {
        for (std::size_t qi = 0; qi < noise_sets.size(); ++qi) {
            const double r = solve(spectrum_sets[si], noise_sets[qi], coef);
            if (r < best) {
                best = r;
                best_s = si;
                best_q = qi;
                best_coef = coef;
            }
        }
    }
    out.pairs_checked = spectrum_sets.size() * noise_sets.size();
    out.residual = best;

    const auto assemble = [&](const std::vector<std::size_t> &s, const std::vector<std::size_t> &q,
                              const Eigen::VectorXcd &c) {
        ComplexVector spec(n, complex_t{});
        ComplexVector noise(n, complex_t{});
        for (std::size_t i = 0; i < s.size(); ++i) {
            spec[s[i]] = c[static_cast<Eigen::Index>(i)];
        }
        for (std::size_t i = 0; i < q.size(); ++i) {
            noise[q[i]] = c[static_cast<Eigen::Index>(s.size() + i)];
        }
        return std::pair{spec, noise};
    };
    auto [spec, noise] = assemble(spectrum_sets[best_s], noise_sets[best_q], best_coef);

    const double tol = 1e-9 * std::max(1.0, yv.norm());
    if (best <= tol) {
        const double scale = std::max(1.0, std::sqrt(std::pow(l2_norm(spec), 2) + std::pow(l2_norm(noise), 2)));
        for (std::size_t si = 0; si < spectrum_sets.size() && !out.ambiguous; ++si) {
            for (std::size_t qi = 0; qi < noise_sets.size(); ++qi) {
                if (solve(spectrum_sets[si], noise_sets[qi], coef) > tol) {
                    continue;
                }
                auto [s2, e2] = assemble(spectrum_sets[si], noise_sets[qi], coef);
                double d = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    d += std::norm(s2[i] - spec[i]) + std::norm(e2[i] - noise[i]);
                }
                if (std::sqrt(d) > 1e-6 * scale) {
                    out.ambiguous = true;
                    break;
                }
            }
        }
    }

    out.spectrum = Spectrum{std::move(spec), kind};
    out.noise.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.noise[i] = noise[i].real();
    }
    out.spectrum_support = SupportSet(spectrum_sets[best_s], n);
    out.noise_support = SupportSet(noise_sets[best_q], n);
    return out;
}

struct ErrorMetrics {
    double linf = 0.0;
    double l2 = 0.0;
    /// Against peak 1.0; +infinity when the two inputs are identical.
    double psnr_db = std::numeric_limits<double>::infinity();
};

template <typename T>
ErrorMetrics error_metrics(const std::vector<T> &estimate, const std::vector<T> &reference) {
    if (estimate.size() != reference.size()) {
        throw shape_error("error_metrics: length mismatch " + std::to_string(estimate.size()) + " vs " +
                          std::to_string(reference.size()));
    }
    ErrorMetrics m;
    double sq = 0.0;
    for (std::size_t i = 0; i < estimate.size(); ++i) {
        const double d = static_cast<double>(std::abs(estimate[i] - reference[i]));
        m.linf = std::max(m.linf, d);
        sq += d * d;
    }
    m.l2 = std::sqrt(sq);
    if (m.linf > 0.0 && !estimate.empty()) {
        m.psnr_db = -10.0 * std::log10(sq / static_cast<double>(estimate.size()));
    }
    return m;
}

struct BoundCheck {
    double measured_linf = 0.0;
    /// sqrt(t/n) |tail(xhat, k)|
    double bound_value = 0.0;
    /// measured / bound; 0 when both vanish, +infinity when only the bound does.
    double constant = 0.0;
};

/// Errors at or below `1e-9 * max(1, |truth|)` count as exact recovery.
inline BoundCheck theorem1_ratio(const RecoveryReport &report, const Spectrum &truth, std::size_t k, std::size_t t) {
    const std::size_t n = truth.size();
    if (report.spectrum_estimate.size() != n) {
        throw shape_error("theorem1_ratio: estimate and truth lengths differ");
    }
    const ComplexVector truth_head = head(truth.values, k);
    BoundCheck b;
    for (std::size_t i = 0; i < n; ++i) {
        b.measured_linf = std::max(b.measured_linf, std::abs(report.spectrum_estimate.values[i] - truth_head[i]));
    }
    b.bound_value = std::sqrt(static_cast<double>(t) / static_cast<double>(n)) * l2_norm(tail(truth.values, k));
    const double zero_tol = 1e-9 * std::max(1.0, l2_norm(truth.values));
    if (b.bound_value > 0.0) {
        b.constant = b.measured_linf / b.bound_value;
    } else {
        b.constant = b.measured_linf <= zero_tol ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return b;
}

/// Quantities from the L-infinity argument, evaluated on a synthetic run where the full
/// truth (spectrum including its tail, and the exact noise) is known.
struct ProofQuantities {
    double beta_norm = 0.0;     // |F^{-1} tail(xhat, k)| = |tail(xhat, k)|
    double z_gap_linf = 0.0;    // |xhat - z|_inf with z = F(y - e_est)
    double z_gap_bound = 0.0;   // alpha * sqrt(|supp(e_est) u supp(e)|) * |e_est - e|
};

inline ProofQuantities proof_quantities(const Signal &y, const Transform &transform, const Spectrum &truth,
                                        const Signal &truth_noise, const RecoveryReport &report, std::size_t k) {
    const std::size_t n = y.size();
    if (truth.size() != n || truth_noise.size() != n || report.noise_estimate.size() != n) {
        throw shape_error("proof_quantities: length mismatch");
    }
    ProofQuantities q;
    q.beta_norm = l2_norm(tail(truth.values, k));
    Signal r(n);
    for (std::size_t i = 0; i < n; ++i) {
        r[i] = y[i] - report.noise_estimate[i];
    }
    const Spectrum z = transform.forward(r);
    Signal diff(n);
    std::size_t union_size = 0;
    for (std::size_t i = 0; i < n; ++i) {
        q.z_gap_linf = std::max(q.z_gap_linf, std::abs(truth.values[i] - z.values[i]));
        diff[i] = report.noise_estimate[i] - truth_noise[i];
        union_size += (report.noise_estimate[i] != 0.0 || truth_noise[i] != 0.0) ? 1 : 0;
    }
    q.z_gap_bound = coherence(transform.kind()) * std::sqrt(static_cast<double>(union_size)) * l2_norm(diff);
    return q;
}

struct InstanceSpec {
    std::size_t k = 1;
    std::size_t t = 0;
    /// Relative tail energy: |tail(xhat, k)| = eps * |xhat|. Zero gives an exactly k-sparse spectrum.
    double eps = 0.0;
    Magnitude noise = Magnitude::extreme(10.0);
    std::uint64_t seed = 0;
};

/// A synthetic recovery problem with known decomposition y = F^{-1} xhat + e.
struct SyntheticInstance {
    Spectrum truth;  // full spectrum including its tail
    Signal x;        // F^{-1} truth, real
    Signal e;
    Signal y;
    SupportSet head_support;
};

/// Head coefficients have modulus in [1, 2] with random sign (random phase for the DFT, where
/// coefficients are placed in conjugate pairs so x stays real; the head may then hold k - 1
/// entries when only pair slots remain). The noise support is uniform and independent of x.
inline SyntheticInstance make_instance(const TransformKind &kind, const InstanceSpec &spec) {
    const std::size_t n = kind.size();
    if (spec.k == 0 || spec.k > n || spec.t > n) {
        throw invalid_input("make_instance: need 0 < k <= n and t <= n");
    }
    if (!(spec.eps >= 0.0 && spec.eps < 1.0)) {
        throw invalid_input("make_instance: eps must be in [0, 1)");
    }
    const Transform transform(kind);
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> mag(1.0, 2.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * detail::pi);
    std::bernoulli_distribution coin(0.5);

    ComplexVector head_values(n, complex_t{});
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t slots = spec.k;
    for (std::size_t idx : order) {
        if (slots == 0) {
            break;
        }
        if (kind.family != Family::DFT) {
            head_values[idx] = (coin(rng) ? 1.0 : -1.0) * mag(rng);
            --slots;
            continue;
        }
        const std::size_t partner = conjugate_partner(idx, kind.rows, kind.cols);
        if (head_values[idx] != complex_t{}) {
            continue;
        }
        if (partner == idx) {
            head_values[idx] = (coin(rng) ? 1.0 : -1.0) * mag(rng);
            --slots;
        } else if (slots >= 2) {
            const complex_t v = std::polar(mag(rng), phase(rng));
            head_values[idx] = v;
            head_values[partner] = std::conj(v);
            slots -= 2;
        }
    }
    SyntheticInstance inst;
    inst.head_support = support_of(head_values);

    ComplexVector full = head_values;
    if (spec.eps > 0.0) {
        std::normal_distribution<double> g;
        Signal noise_signal(n);
        for (double &v : noise_signal) {
            v = g(rng);
        }
        ComplexVector tail_values = transform.forward(to_complex(noise_signal));
        for (std::size_t i : inst.head_support.indices()) {
            tail_values[i] = complex_t{};
        }
        const double target = spec.eps / std::sqrt(1.0 - spec.eps * spec.eps) * l2_norm(head_values);
        const double scale = target / l2_norm(tail_values);
        for (std::size_t i = 0; i < n; ++i) {
            full[i] += tail_values[i] * scale;
        }
    }
    inst.truth = Spectrum{full, kind};
    const ComplexVector xc = transform.inverse(full);
    inst.x.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        inst.x[i] = xc[i].real();
    }
    CorruptionSpec cs;
    cs.t = spec.t;
    cs.magnitude = spec.noise;
    cs.seed = rng();
    Corruption c = random_l0(inst.x, cs);
    inst.e = std::move(c.e);
    inst.y = std::move(c.y);
    return inst;
}

/// Largest per-iteration contraction err[i+1] / err[i] over the steps that start above `floor`.
/// Returns 0 when the first error is already at or below the floor.
inline double max_contraction_ratio(const std::vector<double> &errors, double floor) {
    double worst = 0.0;
    for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
        if (errors[i] <= floor) {
            break;
        }
        worst = std::max(worst, errors[i + 1] / errors[i]);
    }
    return worst;
}

/// Distance |[spectrum; noise] - [truth_head; truth_noise]| of one iterate pair.
inline double model_error(const ComplexVector &spectrum, const ComplexVector &noise, const ComplexVector &truth_head,
                          const Signal &truth_noise) {
    double s = 0.0;
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
        s += std::norm(spectrum[i] - truth_head[i]) + std::norm(noise[i] - truth_noise[i]);
    }
    return std::sqrt(s);
}

}  // namespace l0robust
