#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <optional>
#include <thread>
#include <vector>

namespace fbk::util {

template <class T>
struct Outcome {
    std::optional<T> value;
    std::exception_ptr error;
    bool ok() const noexcept { return value.has_value(); }
};

// Runs fn(i) for i in [0, n) on up to `workers` threads. Results are
// returned in index order; exceptions are captured per item.
template <class Fn>
auto parallel_map(std::size_t n, std::size_t workers, Fn&& fn) -> std::vector<Outcome<decltype(fn(std::size_t{}))>> {
    using T = decltype(fn(std::size_t{}));
    std::vector<Outcome<T>> out(n);
    auto run_one = [&](std::size_t i) {
        try {
            out[i].value.emplace(fn(i));
        } catch (...) {
            out[i].error = std::current_exception();
        }
    };
    workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) run_one(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) run_one(i);
            });
        }
    }
    return out;
}

}  // namespace fbk::util
