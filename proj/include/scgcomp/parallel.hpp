#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace scgcomp {

/// Worker count: explicit request, else SCGCOMP_THREADS, else hardware.
inline int resolve_threads(std::optional<int> requested = std::nullopt)
{
    if (requested && *requested > 0)
        return *requested;
    if (const char* env = std::getenv("SCGCOMP_THREADS")) {
        try {
            const int v = std::stoi(env);
            if (v > 0)
                return v;
        } catch (const std::exception&) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls f(i) for i in [0, n) on up to `threads` workers. Work items must
/// write only to their own slots; the first exception is rethrown.
template<typename F>
void parallel_for(std::int64_t n, int threads, F&& f)
{
    if (n <= 0)
        return;
    const auto workers = static_cast<std::int64_t>(std::max(1, threads));
    if (workers == 1 || n == 1) {
        for (std::int64_t i = 0; i < n; ++i)
            f(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> pool;
        for (std::int64_t w = 0; w < std::min(workers, n); ++w) {
            pool.emplace_back([&] {
                for (std::int64_t i = next++; i < n; i = next++) {
                    try {
                        f(i);
                    } catch (...) {
                        std::lock_guard lock(error_mutex);
                        if (!error)
                            error = std::current_exception();
                        next = n;
                    }
                }
            });
        }
    }
    if (error)
        std::rethrow_exception(error);
}

}  // namespace scgcomp
