#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstddef>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

namespace l0robust {

using complex_t = std::complex<double>;

/// A real-valued vector in the sample (pixel) domain.
using Signal = std::vector<double>;

/// A complex-valued vector, used for iterates that may leave the real line.
using ComplexVector = std::vector<complex_t>;

/// Raised for caller mistakes: wrong shapes, out-of-range parameters, bad files.
class invalid_input : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Shape mismatch between a vector and the transform it is used with.
class shape_error : public invalid_input {
  public:
    using invalid_input::invalid_input;
};

/// Raised when an enumeration would exceed the configured combinatorial guard.
class combinatorial_limit : public invalid_input {
  public:
    using invalid_input::invalid_input;
};

/// I/O failures: missing, unreadable or unwritable files and unsupported formats.
class io_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline ComplexVector to_complex(const Signal &x) { return ComplexVector(x.begin(), x.end()); }

template <typename Vec>
double l2_norm(const Vec &v) {
    double s = 0.0;
    for (const auto &a : v) {
        s += std::norm(a);
    }
    return std::sqrt(s);
}

template <typename Vec>
double linf_norm(const Vec &v) {
    double m = 0.0;
    for (const auto &a : v) {
        m = std::max(m, static_cast<double>(std::abs(a)));
    }
    return m;
}

template <typename Vec>
std::size_t count_nonzero(const Vec &v) {
    return static_cast<std::size_t>(
        std::count_if(v.begin(), v.end(), [](const auto &a) { return a != std::remove_cvref_t<decltype(a)>{}; }));
}

/// Binomial coefficient saturating at `cap + 1` so callers can compare against a limit.
inline std::size_t binomial_capped(std::size_t n, std::size_t k, std::size_t cap) {
    if (k > n) {
        return 0;
    }
    k = std::min(k, n - k);
    long double r = 1.0L;
    for (std::size_t i = 1; i <= k; ++i) {
        r = r * static_cast<long double>(n - k + i) / static_cast<long double>(i);
        if (r > static_cast<long double>(cap)) {
            return cap + 1;
        }
    }
    return static_cast<std::size_t>(r + 0.5L);
}

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Each index is visited once;
/// callers write results by index so the outcome does not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn &&fn) {
    threads = std::max<std::size_t>(1, std::min(threads, count));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> workers;
        workers.reserve(threads);
        for (std::size_t w = 0; w < threads; ++w) {
            workers.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
                    try {
                        fn(i);
                    } catch (...) {
                        std::scoped_lock lock(failure_mutex);
                        if (!failure) {
                            failure = std::current_exception();
                        }
                        next.store(count);
                    }
                }
            });
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

}  // namespace l0robust
