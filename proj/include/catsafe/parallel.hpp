#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace catsafe {

/// Worker count from CATSAFE_THREADS, falling back to the hardware concurrency.
inline std::size_t default_threads() {
    if (const char* env = std::getenv("CATSAFE_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) {
                return static_cast<std::size_t>(v);
            }
        } catch (...) {
        }
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Runs body(begin, end) over contiguous chunks of [0, count). Each index is
/// visited exactly once, so callers that write results by index get output
/// independent of the worker count. The exception from the lowest-numbered
/// failing chunk is rethrown.
template <typename Body>
void parallel_chunks(std::size_t count, std::size_t threads, Body&& body) {
    if (count == 0) {
        return;
    }
    threads = std::clamp<std::size_t>(threads, 1, count);
    if (threads == 1) {
        body(std::size_t{0}, count);
        return;
    }
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    pool.reserve(threads);
    const std::size_t step = count / threads, extra = count % threads;
    std::size_t begin = 0;
    for (std::size_t w = 0; w < threads; ++w) {
        const std::size_t end = begin + step + (w < extra ? 1 : 0);
        pool.emplace_back([&, w, begin, end] {
            try {
                body(begin, end);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
        begin = end;
    }
    for (auto& t : pool) {
        t.join();
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

} // namespace catsafe
