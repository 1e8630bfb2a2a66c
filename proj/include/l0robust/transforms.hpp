#pragma once

// Orthonormal transforms F: unitary DFT, orthonormal DCT-II and DST-II, and the
// normalized Sylvester-Hadamard transform, in 1D and separable 2D form.
//
// 2D signals are row-major flattened grids. The 2D transform applies the 1D
// transform along every row and then along every column.

#include "l0robust/core.hpp"

#include <Eigen/Dense>

#include <bit>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace l0robust {

enum class Family { DFT, DCT2, DST, Hadamard };
enum class Dimensionality { OneD, TwoD };

inline std::string to_string(Family f) {
    switch (f) {
        case Family::DFT: return "dft";
        case Family::DCT2: return "dct2";
        case Family::DST: return "dst";
        case Family::Hadamard: return "hadamard";
    }
    return "unknown";
}

inline Family family_from_string(std::string_view s) {
    if (s == "dft") return Family::DFT;
    if (s == "dct2" || s == "dct") return Family::DCT2;
    if (s == "dst") return Family::DST;
    if (s == "hadamard") return Family::Hadamard;
    throw invalid_input("unknown transform family '" + std::string(s) + "'");
}

/// Which transform, and on what shape. For OneD kinds `cols == 1` and `rows == n`.
struct TransformKind {
    Family family = Family::DCT2;
    Dimensionality dims = Dimensionality::OneD;
    std::size_t rows = 1;
    std::size_t cols = 1;

    static TransformKind one_d(Family f, std::size_t n) {
        TransformKind k{f, Dimensionality::OneD, n, 1};
        k.validate();
        return k;
    }

    static TransformKind two_d(Family f, std::size_t rows, std::size_t cols) {
        TransformKind k{f, Dimensionality::TwoD, rows, cols};
        k.validate();
        return k;
    }

    [[nodiscard]] std::size_t size() const { return rows * cols; }
    [[nodiscard]] bool is_2d() const { return dims == Dimensionality::TwoD; }
    /// DCT2, DST and Hadamard matrices are real; only the DFT is genuinely complex.
    [[nodiscard]] bool real_matrix() const { return family != Family::DFT; }

    void validate() const {
        if (rows == 0 || cols == 0) {
            throw invalid_input("transform shape must be positive");
        }
        if (dims == Dimensionality::OneD && cols != 1) {
            throw invalid_input("1D transform kinds must have cols == 1");
        }
        if (family == Family::Hadamard && (!is_power_of_two(rows) || !is_power_of_two(cols))) {
            throw invalid_input("Hadamard transform requires power-of-two axis lengths, got " +
                                std::to_string(rows) + "x" + std::to_string(cols));
        }
    }

    bool operator==(const TransformKind &) const = default;
};

inline std::string to_string(const TransformKind &k) {
    return to_string(k.family) + (k.is_2d() ? "-2d " + std::to_string(k.rows) + "x" + std::to_string(k.cols)
                                            : "-1d " + std::to_string(k.rows));
}

/// Transform-domain coefficients together with the transform that produced them.
struct Spectrum {
    ComplexVector values;
    TransformKind kind;

    [[nodiscard]] std::size_t size() const { return values.size(); }
};

namespace detail {

inline constexpr double pi = std::numbers::pi;

/// Unnormalized complex FFT of arbitrary length: radix-2 for powers of two, Bluestein otherwise.
class FftPlan {
  public:
    FftPlan() = default;

    explicit FftPlan(std::size_t n) : n_(n) {
        if (n_ <= 1) {
            return;
        }
        if (is_power_of_two(n_)) {
            init_radix2(n_, twiddles_, bitrev_);
            return;
        }
        m_ = 1;
        while (m_ < 2 * n_ - 1) {
            m_ <<= 1;
        }
        init_radix2(m_, twiddles_, bitrev_);
        chirp_.resize(n_);
        const std::size_t period = 2 * n_;
        for (std::size_t j = 0; j < n_; ++j) {
            // j^2 mod 2n keeps the phase argument small and exact.
            const std::size_t sq = static_cast<std::size_t>((static_cast<unsigned long long>(j) * j) % period);
            chirp_[j] = std::polar(1.0, -pi * static_cast<double>(sq) / static_cast<double>(n_));
        }
        kernel_.assign(m_, complex_t{});
        kernel_[0] = std::conj(chirp_[0]);
        for (std::size_t l = 1; l < n_; ++l) {
            kernel_[l] = std::conj(chirp_[l]);
            kernel_[m_ - l] = std::conj(chirp_[l]);
        }
        radix2(kernel_.data(), m_);
    }

    [[nodiscard]] std::size_t size() const { return n_; }

    /// data[k] <- sum_j data[j] exp(-2 pi i jk / n)
    void forward(complex_t *data) const {
        if (n_ <= 1) {
            return;
        }
        if (m_ == 0) {
            radix2(data, n_);
            return;
        }
        ComplexVector a(m_, complex_t{});
        for (std::size_t j = 0; j < n_; ++j) {
            a[j] = data[j] * chirp_[j];
        }
        radix2(a.data(), m_);
        for (std::size_t i = 0; i < m_; ++i) {
            a[i] = std::conj(a[i] * kernel_[i]);
        }
        radix2(a.data(), m_);  // conj(FFT(conj(.))) is the unnormalized inverse
        const double scale = 1.0 / static_cast<double>(m_);
        for (std::size_t k = 0; k < n_; ++k) {
            data[k] = std::conj(a[k]) * scale * chirp_[k];
        }
    }

    /// data[k] <- sum_j data[j] exp(+2 pi i jk / n)
    void backward(complex_t *data) const {
        for (std::size_t i = 0; i < n_; ++i) {
            data[i] = std::conj(data[i]);
        }
        forward(data);
        for (std::size_t i = 0; i < n_; ++i) {
            data[i] = std::conj(data[i]);
        }
    }

  private:
    static void init_radix2(std::size_t m, ComplexVector &tw, std::vector<std::size_t> &rev) {
        tw.resize(m / 2);
        for (std::size_t j = 0; j < m / 2; ++j) {
            tw[j] = std::polar(1.0, -2.0 * pi * static_cast<double>(j) / static_cast<double>(m));
        }
        rev.assign(m, 0);
        std::size_t bits = 0;
        while ((std::size_t{1} << bits) < m) {
            ++bits;
        }
        for (std::size_t i = 0; i < m; ++i) {
            std::size_t r = 0;
            for (std::size_t b = 0; b < bits; ++b) {
                if (i & (std::size_t{1} << b)) {
                    r |= std::size_t{1} << (bits - 1 - b);
                }
            }
            rev[i] = r;
        }
    }

    void radix2(complex_t *a, std::size_t m) const {
        for (std::size_t i = 0; i < m; ++i) {
            if (i < bitrev_[i]) {
                std::swap(a[i], a[bitrev_[i]]);
            }
        }
        for (std::size_t len = 2; len <= m; len <<= 1) {
            const std::size_t half = len / 2;
            const std::size_t step = m / len;
            for (std::size_t start = 0; start < m; start += len) {
                for (std::size_t j = 0; j < half; ++j) {
                    const complex_t w = twiddles_[j * step];
                    const complex_t u = a[start + j];
                    const complex_t v = a[start + j + half] * w;
                    a[start + j] = u + v;
                    a[start + j + half] = u - v;
                }
            }
        }
    }

    std::size_t n_ = 0;
    std::size_t m_ = 0;  // Bluestein convolution length, 0 when radix-2 applies directly
    ComplexVector twiddles_;
    std::vector<std::size_t> bitrev_;
    ComplexVector chirp_;
    ComplexVector kernel_;
};

/// One orthonormal 1D transform of fixed family and length, applied in place.
class AxisTransform {
  public:
    AxisTransform() = default;

    AxisTransform(Family family, std::size_t n) : family_(family), n_(n) {
        if (family_ != Family::Hadamard) {
            fft_ = FftPlan(n_);
        }
        if (family_ == Family::DCT2 || family_ == Family::DST) {
            half_shift_.resize(n_);
            scale_.resize(n_);
            for (std::size_t k = 0; k < n_; ++k) {
                half_shift_[k] = std::polar(1.0, -pi * static_cast<double>(k) / (2.0 * static_cast<double>(n_)));
                scale_[k] = std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(n_));
            }
        }
    }

    [[nodiscard]] std::size_t size() const { return n_; }

    void forward(complex_t *line) const {
        switch (family_) {
            case Family::DFT: {
                fft_.forward(line);
                scale_all(line, 1.0 / std::sqrt(static_cast<double>(n_)));
                break;
            }
            case Family::DCT2: dct2(line); break;
            case Family::DST: {
                alternate_signs(line);
                dct2(line);
                std::reverse(line, line + n_);
                break;
            }
            case Family::Hadamard: hadamard(line); break;
        }
    }

    void inverse(complex_t *line) const {
        switch (family_) {
            case Family::DFT: {
                fft_.backward(line);
                scale_all(line, 1.0 / std::sqrt(static_cast<double>(n_)));
                break;
            }
            case Family::DCT2: dct3(line); break;
            case Family::DST: {
                std::reverse(line, line + n_);
                dct3(line);
                alternate_signs(line);
                break;
            }
            case Family::Hadamard: hadamard(line); break;  // symmetric and orthogonal
        }
    }

  private:
    void scale_all(complex_t *line, double s) const {
        for (std::size_t i = 0; i < n_; ++i) {
            line[i] *= s;
        }
    }

    void alternate_signs(complex_t *line) const {
        for (std::size_t i = 1; i < n_; i += 2) {
            line[i] = -line[i];
        }
    }

    void hadamard(complex_t *line) const {
        for (std::size_t len = 1; len < n_; len <<= 1) {
            for (std::size_t start = 0; start < n_; start += 2 * len) {
                for (std::size_t j = start; j < start + len; ++j) {
                    const complex_t u = line[j];
                    const complex_t v = line[j + len];
                    line[j] = u + v;
                    line[j + len] = u - v;
                }
            }
        }
        scale_all(line, 1.0 / std::sqrt(static_cast<double>(n_)));
    }

    // DCT-II through one length-n complex FFT (even/odd reordering). The real and
    // imaginary parts of the input are two independent real signals packed together.
    void dct2(complex_t *line) const {
        ComplexVector v(n_);
        for (std::size_t j = 0; 2 * j < n_; ++j) {
            v[j] = line[2 * j];
        }
        for (std::size_t j = 0; 2 * j + 1 < n_; ++j) {
            v[n_ - 1 - j] = line[2 * j + 1];
        }
        fft_.forward(v.data());
        for (std::size_t k = 0; k < n_; ++k) {
            const complex_t vk = v[k];
            const complex_t vnk = std::conj(v[(n_ - k) % n_]);
            const complex_t re_part = 0.5 * (vk + vnk);
            const complex_t im_part = complex_t(0.0, -0.5) * (vk - vnk);
            line[k] = complex_t((re_part * half_shift_[k]).real(), (im_part * half_shift_[k]).real()) * scale_[k];
        }
    }

    // DCT-III, the inverse of the orthonormal DCT-II; valid for complex input directly.
    void dct3(complex_t *line) const {
        ComplexVector u(n_ + 1, complex_t{});
        for (std::size_t k = 0; k < n_; ++k) {
            u[k] = line[k] / scale_[k];
        }
        ComplexVector v(n_);
        for (std::size_t k = 0; k < n_; ++k) {
            v[k] = std::conj(half_shift_[k]) * (u[k] - complex_t(0.0, 1.0) * u[n_ - k]);
        }
        fft_.backward(v.data());
        const double inv_n = 1.0 / static_cast<double>(n_);
        for (std::size_t j = 0; 2 * j < n_; ++j) {
            line[2 * j] = v[j] * inv_n;
        }
        for (std::size_t j = 0; 2 * j + 1 < n_; ++j) {
            line[2 * j + 1] = v[n_ - 1 - j] * inv_n;
        }
    }

    Family family_ = Family::DCT2;
    std::size_t n_ = 0;
    FftPlan fft_;
    ComplexVector half_shift_;
    std::vector<double> scale_;
};

/// Closed-form entry (k, j) of the 1D orthonormal matrix: row k is frequency, column j is sample.
inline complex_t axis_entry(Family family, std::size_t n, std::size_t k, std::size_t j) {
    const double nd = static_cast<double>(n);
    switch (family) {
        case Family::DFT: {
            const auto phase = static_cast<double>((static_cast<unsigned long long>(k) * j) % n);
            return std::polar(1.0 / std::sqrt(nd), -2.0 * pi * phase / nd);
        }
        case Family::DCT2: {
            const double c = std::sqrt((k == 0 ? 1.0 : 2.0) / nd);
            return c * std::cos(pi * (2.0 * static_cast<double>(j) + 1.0) * static_cast<double>(k) / (2.0 * nd));
        }
        case Family::DST: {
            const double c = std::sqrt((k + 1 == n ? 1.0 : 2.0) / nd);
            return c * std::sin(pi * (2.0 * static_cast<double>(j) + 1.0) * static_cast<double>(k + 1) / (2.0 * nd));
        }
        case Family::Hadamard: {
            const int parity = std::popcount(static_cast<unsigned long long>(k & j)) & 1;
            return (parity ? -1.0 : 1.0) / std::sqrt(nd);
        }
    }
    return {};
}

inline double axis_coherence(Family family, std::size_t n) {
    const double nd = static_cast<double>(n);
    if (family == Family::DFT || family == Family::Hadamard) {
        return 1.0 / std::sqrt(nd);
    }
    if (n > 4096) {
        return std::sqrt(2.0 / nd);  // upper bound; exact scan is quadratic
    }
    double m = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t j = 0; j < n; ++j) {
            m = std::max(m, std::abs(axis_entry(family, n, k, j)));
        }
    }
    return m;
}

}  // namespace detail

/// A ready-to-apply transform. Construction precomputes FFT plans; afterwards the object is
/// immutable, so one instance may be shared by any number of threads.
class Transform {
  public:
    explicit Transform(const TransformKind &kind) : kind_(kind) {
        kind_.validate();
        row_axis_ = detail::AxisTransform(kind_.family, kind_.is_2d() ? kind_.cols : kind_.rows);
        if (kind_.is_2d()) {
            col_axis_ = detail::AxisTransform(kind_.family, kind_.rows);
        }
    }

    [[nodiscard]] const TransformKind &kind() const { return kind_; }
    [[nodiscard]] std::size_t size() const { return kind_.size(); }

    [[nodiscard]] ComplexVector forward(std::span<const complex_t> x) const { return apply(x, false); }
    [[nodiscard]] ComplexVector inverse(std::span<const complex_t> x) const { return apply(x, true); }

    [[nodiscard]] Spectrum forward(const Signal &x) const {
        check_size(x.size());
        Spectrum s{apply(to_complex(x), false), kind_};
        if (kind_.family != Family::DFT) {
            // Real bases map real signals to real spectra; drop the rounding residue.
            for (complex_t &v : s.values) {
                v.imag(0.0);
            }
        }
        return s;
    }

    /// Inverse for a spectrum that must correspond to a real signal.
    /// Throws when the discarded imaginary part exceeds `1e-9 * max(1, |spectrum|)`.
    [[nodiscard]] Signal inverse_real(const Spectrum &s) const {
        if (!(s.kind == kind_)) {
            throw shape_error("spectrum kind " + to_string(s.kind) + " does not match transform " + to_string(kind_));
        }
        const ComplexVector z = apply(s.values, true);
        const double tol = 1e-9 * std::max(1.0, l2_norm(s.values));
        Signal out(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) {
            if (std::abs(z[i].imag()) > tol) {
                throw invalid_input("spectrum is not conjugate symmetric; inverse is not a real signal");
            }
            out[i] = z[i].real();
        }
        return out;
    }

  private:
    void check_size(std::size_t n) const {
        if (n != kind_.size()) {
            throw shape_error("vector of length " + std::to_string(n) + " does not match transform " +
                              to_string(kind_));
        }
    }

    ComplexVector apply(std::span<const complex_t> x, bool inverse) const {
        check_size(x.size());
        ComplexVector out(x.begin(), x.end());
        if (!kind_.is_2d()) {
            inverse ? row_axis_.inverse(out.data()) : row_axis_.forward(out.data());
            return out;
        }
        const std::size_t rows = kind_.rows;
        const std::size_t cols = kind_.cols;
        for (std::size_t r = 0; r < rows; ++r) {
            complex_t *line = out.data() + r * cols;
            inverse ? row_axis_.inverse(line) : row_axis_.forward(line);
        }
        ComplexVector column(rows);
        for (std::size_t c = 0; c < cols; ++c) {
            for (std::size_t r = 0; r < rows; ++r) {
                column[r] = out[r * cols + c];
            }
            inverse ? col_axis_.inverse(column.data()) : col_axis_.forward(column.data());
            for (std::size_t r = 0; r < rows; ++r) {
                out[r * cols + c] = column[r];
            }
        }
        return out;
    }

    TransformKind kind_;
    detail::AxisTransform row_axis_;
    detail::AxisTransform col_axis_;
};

inline Spectrum forward(const Signal &x, const TransformKind &kind) { return Transform(kind).forward(x); }

inline Signal inverse(const Spectrum &s, const TransformKind &kind) { return Transform(kind).inverse_real(s); }

inline Signal inverse(const Spectrum &s) { return inverse(s, s.kind); }

/// Largest entry modulus of F. For 2D kinds this is the product of the two axis maxima.
inline double coherence(const TransformKind &kind) {
    kind.validate();
    if (!kind.is_2d()) {
        return detail::axis_coherence(kind.family, kind.rows);
    }
    return detail::axis_coherence(kind.family, kind.rows) * detail::axis_coherence(kind.family, kind.cols);
}

inline constexpr std::size_t kMaterializeLimit = 4096;

/// Dense F evaluated from closed-form entries (not from the fast path), so it can serve
/// as an independent check on `Transform`. Row i, column j holds F_ij.
inline Eigen::MatrixXcd materialize(const TransformKind &kind) {
    kind.validate();
    const std::size_t n = kind.size();
    if (n > kMaterializeLimit) {
        throw invalid_input("materialize: n = " + std::to_string(n) + " exceeds limit " +
                            std::to_string(kMaterializeLimit));
    }
    const auto ni = static_cast<Eigen::Index>(n);
    Eigen::MatrixXcd m(ni, ni);
    if (!kind.is_2d()) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    detail::axis_entry(kind.family, n, i, j);
            }
        }
        return m;
    }
    const std::size_t rows = kind.rows;
    const std::size_t cols = kind.cols;
    // G[(k1, k2), (r, c)] = A_rows[k1][r] * A_cols[k2][c]
    for (std::size_t k1 = 0; k1 < rows; ++k1) {
        for (std::size_t k2 = 0; k2 < cols; ++k2) {
            for (std::size_t r = 0; r < rows; ++r) {
                const complex_t a = detail::axis_entry(kind.family, rows, k1, r);
                for (std::size_t c = 0; c < cols; ++c) {
                    m(static_cast<Eigen::Index>(k1 * cols + k2), static_cast<Eigen::Index>(r * cols + c)) =
                        a * detail::axis_entry(kind.family, cols, k2, c);
                }
            }
        }
    }
    return m;
}

}  // namespace l0robust
