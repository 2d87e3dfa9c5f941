#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

#include "inaccess/errors.hpp"

namespace inaccess {

/// Calls fn(i) for every i in [0, n) using up to `workers` threads.
///
/// Indices are split into contiguous ranges, one per worker. fn must write
/// its result into per-index storage; callers reduce afterwards in index
/// order, so the outcome does not depend on the worker count. If several
/// indices throw, the exception from the lowest index is rethrown.
template <class Fn>
void for_each_index(std::size_t n, unsigned workers, Fn&& fn) {
    if (n == 0) return;
    const std::size_t w = std::clamp<std::size_t>(workers == 0 ? 1 : workers, 1, n);
    if (w == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(w);
    std::vector<std::thread> pool;
    pool.reserve(w);
    for (std::size_t t = 0; t < w; ++t) {
        const std::size_t lo = n * t / w;
        const std::size_t hi = n * (t + 1) / w;
        pool.emplace_back([&, t, lo, hi] {
            for (std::size_t i = lo; i < hi; ++i) {
                try {
                    fn(i);
                } catch (...) {
                    errors[t] = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    for (std::size_t t = 0; t < w; ++t)
        if (errors[t]) std::rethrow_exception(errors[t]);
}

/// Runs a per-path Monte Carlo body, tagging numerical blowups with the path index.
template <class Fn>
void for_each_path(std::size_t n_paths, unsigned workers, Fn&& fn) {
    for_each_index(n_paths, workers, [&](std::size_t i) {
        try {
            fn(i);
        } catch (const numerical_blowup& e) {
            if (e.path_index() != numerical_blowup::no_path) throw;
            throw e.with_path(i);
        }
    });
}

}  // namespace inaccess
