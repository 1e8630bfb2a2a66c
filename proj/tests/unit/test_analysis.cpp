#include "l0robust/analysis.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace l0robust;
using l0test::max_abs_diff;

namespace {

const Family kFamilies[] = {Family::DFT, Family::DCT2, Family::DST, Family::Hadamard};

using l0test::closed_form_delta;

}  // namespace

TEST(Uncertainty, ImpulseIsTight) {
    for (std::size_t n : {4u, 16u, 64u}) {
        const TransformKind kind = TransformKind::one_d(Family::DFT, n);
        EXPECT_NEAR(uncertainty_check(kind, 1, 50, 1), 1.0, 1e-12);
    }
}

TEST(Uncertainty, RatioNeverExceedsOne) {
    EXPECT_LE(uncertainty_check(TransformKind::one_d(Family::DCT2, 64), 3, 1000, 7), 1.0 + 1e-12);
    for (Family f : kFamilies) {
        for (std::size_t n : {8u, 16u, 32u}) {
            for (UncertaintyProbe p : {UncertaintyProbe::Random, UncertaintyProbe::Aligned}) {
                EXPECT_LE(uncertainty_check(TransformKind::one_d(f, n), 4, 200, n, p), 1.0 + 1e-12);
            }
        }
    }
}

TEST(Uncertainty, HadamardAllOnesIsTight) {
    // For x = all ones, Fx = 4 e_0 and alpha sqrt(16) |x| = (1/4) 4 4 = 4.
    const TransformKind kind = TransformKind::one_d(Family::Hadamard, 16);
    const Spectrum s = forward(Signal(16, 1.0), kind);
    double peak = 0.0;
    for (const complex_t &v : s.values) {
        peak = std::max(peak, std::abs(v));
    }
    EXPECT_NEAR(peak / (coherence(kind) * 4.0 * 4.0), 1.0, 1e-12);
    // Unit moduli with phases matched to a row reach the bound; random values stay below it.
    EXPECT_NEAR(uncertainty_check(kind, 16, 20, 3, UncertaintyProbe::Aligned), 1.0, 1e-12);
    EXPECT_LT(uncertainty_check(kind, 16, 20, 3, UncertaintyProbe::Random), 1.0);
}

TEST(Rip, NoCorruptionGivesZero) {
    for (Family f : kFamilies) {
        const RipReport r = model_rip_constant(TransformKind::one_d(f, 8), 3, 0, 1000000);
        EXPECT_NEAR(r.delta, 0.0, 1e-12);
    }
}

TEST(Rip, ExhaustiveMatchesClosedForm) {
    for (Family f : kFamilies) {
        for (std::size_t t = 1; t <= 2; ++t) {
            const TransformKind kind = TransformKind::one_d(f, 8);
            RipOptions o;
            o.mode = RipMode::Exhaustive;
            const RipReport r = model_rip_constant(kind, 2, t, 1000000, o);
            EXPECT_TRUE(r.exhaustive);
            EXPECT_EQ(r.supports_checked, 28u * (t == 1 ? 8u : 28u));
            EXPECT_NEAR(r.delta, closed_form_delta(kind, 2, t), 1e-10) << to_string(kind) << " t=" << t;
        }
    }
}

TEST(Rip, DftSixteenThreeThree) {
    const TransformKind kind = TransformKind::one_d(Family::DFT, 16);
    RipOptions o;
    o.mode = RipMode::Exhaustive;
    o.threads = 2;
    const RipReport a = model_rip_constant(kind, 3, 3, 1000000, o);
    const RipReport b = model_rip_constant(kind, 3, 3, 1000000, o);
    EXPECT_EQ(a.delta, b.delta);
    EXPECT_LT(a.delta, 1.0);
    EXPECT_NEAR(a.delta, closed_form_delta(kind, 3, 3), 1e-10);
    const RipReport t1 = model_rip_constant(kind, 3, 1, 1000000, o);
    EXPECT_GE(a.delta, t1.delta);
}

TEST(Rip, ReversedEnumerationAgrees) {
    const TransformKind kind = TransformKind::one_d(Family::DCT2, 12);
    RipOptions fwd;
    fwd.mode = RipMode::Exhaustive;
    RipOptions rev = fwd;
    rev.reversed = true;
    EXPECT_EQ(model_rip_constant(kind, 2, 2, 1000000, fwd).delta, model_rip_constant(kind, 2, 2, 1000000, rev).delta);
}

TEST(Rip, ExhaustiveGuard) {
    RipOptions o;
    o.mode = RipMode::Exhaustive;
    EXPECT_THROW((void)model_rip_constant(TransformKind::one_d(Family::DCT2, 64), 3, 3, 1000000, o),
                 combinatorial_limit);
    const RipReport sampled = model_rip_constant(TransformKind::one_d(Family::DCT2, 64), 3, 3, 1000000);
    EXPECT_FALSE(sampled.exhaustive);
    EXPECT_EQ(sampled.supports_checked, 10000u);
    EXPECT_GT(sampled.delta, 0.0);
    EXPECT_LT(sampled.delta, 1.0);
}

TEST(Rip, SampledIsSeeded) {
    RipOptions o;
    o.mode = RipMode::Sampled;
    o.samples = 500;
    o.seed = 4;
    const TransformKind kind = TransformKind::one_d(Family::DST, 32);
    EXPECT_EQ(model_rip_constant(kind, 2, 2, 0, o).delta, model_rip_constant(kind, 2, 2, 0, o).delta);
    o.threads = 3;
    EXPECT_EQ(model_rip_constant(kind, 2, 2, 0, o).delta, model_rip_constant(kind, 2, 2, 0, {RipMode::Sampled, 500, 4}).delta);
}

TEST(Rip, SmallDeltaImpliesRecovery) {
    // n = 16, k = 1: wherever the measured delta is at most 0.1, IHT recovers every sampled instance.
    for (Family f : kFamilies) {
        const TransformKind kind = TransformKind::one_d(f, 16);
        double previous = 0.0;
        for (std::size_t t = 1; t <= 4; ++t) {
            const double delta = model_rip_constant(kind, 1, t, 1000000).delta;
            EXPECT_GE(delta, previous - 1e-15);
            previous = delta;
            if (delta > 0.1) {
                continue;
            }
            for (std::uint64_t seed = 0; seed < 20; ++seed) {
                InstanceSpec spec{1, t, 0.0, Magnitude::extreme(10.0), seed};
                const SyntheticInstance inst = make_instance(kind, spec);
                const RecoveryReport r = iht(inst.y, kind, SparsityBudget{1, t, 100, 0.0});
                EXPECT_LT(max_abs_diff(r.recovered_signal, inst.x), 1e-9);
            }
        }
    }
}

TEST(BruteForce, ZeroSignal) {
    const DecodeResult r = bruteforce_decode(Signal(8, 0.0), TransformKind::one_d(Family::DCT2, 8), 1, 1);
    EXPECT_EQ(r.residual, 0.0);
    EXPECT_LT(l2_norm(r.spectrum.values), 1e-15);
    EXPECT_LT(l2_norm(r.noise), 1e-15);
}

TEST(BruteForce, AgreesWithIht) {
    const TransformKind kind = TransformKind::one_d(Family::DCT2, 12);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        InstanceSpec spec{2, 1, 0.0, Magnitude::extreme(10.0), seed};
        const SyntheticInstance inst = make_instance(kind, spec);
        const DecodeResult oracle = bruteforce_decode(inst.y, kind, 2, 1);
        const RecoveryReport r = iht(inst.y, kind, SparsityBudget{2, 1, 200, 0.0});
        EXPECT_LT(max_abs_diff(r.spectrum_estimate.values, oracle.spectrum.values), 1e-6) << "seed " << seed;
        EXPECT_LT(max_abs_diff(r.noise_estimate, oracle.noise), 1e-6) << "seed " << seed;
        // Residual lower bound.
        EXPECT_GE(r.residual_trace.back(), oracle.residual - 1e-9);
    }
}

TEST(BruteForce, ResidualIsLowerBoundOnNoisyData) {
    const TransformKind kind = TransformKind::one_d(Family::DST, 10);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Signal y = l0test::random_signal(10, seed);
        const DecodeResult oracle = bruteforce_decode(y, kind, 2, 2);
        for (UpdateOrder order : {UpdateOrder::Paper, UpdateOrder::Sequential}) {
            IhtOptions o;
            o.order = order;
            const RecoveryReport r = iht(y, kind, SparsityBudget{2, 2, 50, 1e-9}, o);
            EXPECT_GE(r.residual_trace.back(), oracle.residual - 1e-9);
        }
    }
}

TEST(BruteForce, Guard) {
    EXPECT_THROW((void)bruteforce_decode(Signal(64, 0.0), TransformKind::one_d(Family::DCT2, 64), 4, 4), invalid_input);
}

TEST(Metrics, Examples) {
    const ErrorMetrics same = error_metrics(Signal{1, 2}, Signal{1, 2});
    EXPECT_EQ(same.linf, 0.0);
    EXPECT_EQ(same.l2, 0.0);
    EXPECT_TRUE(std::isinf(same.psnr_db) && same.psnr_db > 0);
    const ErrorMetrics m = error_metrics(Signal{-3, 2, 1}, Signal{0, 0, 0});
    EXPECT_EQ(m.linf, 3.0);
    EXPECT_NEAR(m.l2, std::sqrt(14.0), 1e-15);
    EXPECT_NEAR(error_metrics(Signal(100, 0.01), Signal(100, 0.0)).psnr_db, 40.0, 1e-9);
    EXPECT_THROW((void)error_metrics(Signal(2), Signal(3)), shape_error);
}

TEST(LinfBound, ExactRecoveryHasZeroConstant) {
    const TransformKind kind = TransformKind::one_d(Family::DCT2, 32);
    InstanceSpec spec{2, 2, 0.0, Magnitude::extreme(10.0), 3};
    const SyntheticInstance inst = make_instance(kind, spec);
    const RecoveryReport r = iht(inst.y, kind, SparsityBudget{2, 2, 100, 0.0});
    const BoundCheck b = theorem1_ratio(r, inst.truth, 2, 2);
    EXPECT_EQ(b.bound_value, 0.0);
    EXPECT_EQ(b.constant, 0.0);
    // No corruption at all: the projection is exact.
    const RecoveryReport clean = iht(inst.x, kind, SparsityBudget{2, 0, 5, 0.0});
    const BoundCheck c = theorem1_ratio(clean, inst.truth, 2, 0);
    EXPECT_LE(c.measured_linf, 1e-9);
}

TEST(LinfBound, InfiniteConstantWhenOnlyBoundVanishes) {
    const TransformKind kind = TransformKind::one_d(Family::DCT2, 8);
    ComplexVector truth(8);
    truth[0] = 1.0;
    RecoveryReport fake;
    fake.spectrum_estimate = Spectrum{ComplexVector(8), kind};
    const BoundCheck b = theorem1_ratio(fake, Spectrum{truth, kind}, 1, 1);
    EXPECT_TRUE(std::isinf(b.constant));
}

TEST(LinfBound, CalibrationRuns) {
    const TransformKind kind = TransformKind::one_d(Family::DCT2, 256);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        InstanceSpec spec{5, 4, 0.05, Magnitude::extreme(10.0), seed};
        const SyntheticInstance inst = make_instance(kind, spec);
        EXPECT_NEAR(l2_norm(tail(inst.truth.values, 5)) / l2_norm(inst.truth.values), 0.05, 1e-9);
        const RecoveryReport r = iht(inst.y, kind, SparsityBudget{5, 4, 50, 1e-9});
        EXPECT_LE(theorem1_ratio(r, inst.truth, 5, 4).constant, 10.0);
    }
}

TEST(ProofQuantities, ZGapWithinBound) {
    const TransformKind kind = TransformKind::one_d(Family::DCT2, 128);
    const Transform transform(kind);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        InstanceSpec spec{4, 3, 0.05, Magnitude::extreme(10.0), seed};
        const SyntheticInstance inst = make_instance(kind, spec);
        const RecoveryReport r = iht(inst.y, kind, SparsityBudget{4, 3, 50, 1e-9});
        const ProofQuantities q = proof_quantities(inst.y, transform, inst.truth, inst.e, r, 4);
        EXPECT_NEAR(q.beta_norm, l2_norm(tail(inst.truth.values, 4)), 1e-12);
        EXPECT_LE(q.z_gap_linf, q.z_gap_bound + 1e-12);
    }
}

TEST(Instances, ExactlySparseAndReal) {
    for (Family f : kFamilies) {
        const TransformKind kind = TransformKind::one_d(f, 16);
        InstanceSpec spec{3, 2, 0.0, Magnitude::extreme(10.0), 1};
        const SyntheticInstance inst = make_instance(kind, spec);
        EXPECT_LE(support_of(inst.truth.values).size(), 3u);
        EXPECT_GE(support_of(inst.truth.values).size(), 2u);
        EXPECT_EQ(support_of(inst.e).size(), 2u);
        EXPECT_LT(max_abs_diff(forward(inst.x, kind).values, inst.truth.values), 1e-12);
    }
}

TEST(Contraction, RatioHelper) {
    EXPECT_EQ(max_contraction_ratio({1.0, 0.5, 0.2, 1e-15, 1e-16}, 1e-12), 0.5);
    EXPECT_EQ(max_contraction_ratio({1e-13, 1.0}, 1e-12), 0.0);
}
