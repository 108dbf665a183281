#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gwf {

// Every parallel kernel has a serial twin selected by this flag. The serial
// path is the reference the tests compare against.
enum class Exec { Serial, Parallel };

// Worker cap for all parallel kernels. 0 restores the default (logical cores).
void set_thread_count(int n);
int thread_count();

// Reads --threads style settings from GWFRACT_THREADS when no explicit value was given.
void init_threads_from_env();

// Evaluates f(i) for every i in [0, n) and stores the result at index i.
// Trials carry their own seeds, so the output is independent of scheduling.
template <class T, class F>
std::vector<T> map_indexed(std::size_t n, F&& f, Exec exec = Exec::Parallel) {
    std::vector<T> out(n);
    if (exec == Exec::Serial || n < 2) {
        for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
        return out;
    }
    std::exception_ptr first_error;
    std::mutex error_mutex;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 16) num_threads(thread_count())
#endif
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
        try {
            out[static_cast<std::size_t>(i)] = f(static_cast<std::size_t>(i));
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
        }
    }
    if (first_error) std::rethrow_exception(first_error);
    return out;
}

// Number of indices in [0, n) for which pred(i) holds.
template <class F>
std::uint64_t count_indexed(std::size_t n, F&& pred, Exec exec = Exec::Parallel) {
    if (exec == Exec::Serial || n < 2) {
        std::uint64_t hits = 0;
        for (std::size_t i = 0; i < n; ++i) hits += pred(i) ? 1 : 0;
        return hits;
    }
    std::uint64_t hits = 0;
    std::exception_ptr first_error;
    std::mutex error_mutex;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 64) reduction(+ : hits) num_threads(thread_count())
#endif
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
        try {
            hits += pred(static_cast<std::size_t>(i)) ? 1 : 0;
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
        }
    }
    if (first_error) std::rethrow_exception(first_error);
    return hits;
}

// Binomial proportion with its standard error.
struct Proportion {
    std::uint64_t hits = 0;
    std::uint64_t trials = 0;
    double value() const { return trials ? static_cast<double>(hits) / static_cast<double>(trials) : 0.0; }
    double std_error() const;
};

}  // namespace gwf
