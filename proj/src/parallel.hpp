#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace spotvol::detail {

inline std::size_t resolve_workers(int requested) {
    return requested > 0 ? static_cast<std::size_t>(requested)
                         : std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Tasks write only to
/// their own slots, so results do not depend on scheduling. The first
/// exception (lowest index) is rethrown after all tasks finish.
template <class Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t count = std::min(resolve_workers(workers), n);
    if (count <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < count; ++w) pool.emplace_back(worker);
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace spotvol::detail
