// SPDX-License-Identifier: Apache-2.0
//
// pilotspoof: pilot-level location spoofing for single-anchor mmWave positioning
// ------------------------------------------------------------------------

#ifndef PILOTSPOOF_PARALLEL_HPP
#define PILOTSPOOF_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace pilotspoof
{
    // Runs fn(i) for i in [0, n) on up to `threads` workers (0 = hardware
    // concurrency). Each index is visited exactly once; fn must write only to
    // slot i of its outputs. The first exception thrown is rethrown.
    template <typename Fn>
    void parallel_for(std::size_t n, std::size_t threads, Fn &&fn)
    {
        if (threads == 0)
            threads = std::max<std::size_t>(1, std::thread::hardware_concurrency());
        threads = std::min(threads, n);
        if (threads <= 1)
        {
            for (std::size_t i = 0; i < n; ++i)
                fn(i);
            return;
        }
        std::atomic<std::size_t> next{0};
        std::exception_ptr err;
        std::mutex err_mutex;
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t)
            pool.emplace_back([&]
            {
                for (std::size_t i = next++; i < n; i = next++)
                {
                    try
                    {
                        fn(i);
                    }
                    catch (...)
                    {
                        std::lock_guard<std::mutex> lock(err_mutex);
                        if (!err)
                            err = std::current_exception();
                        next = n;
                    }
                }
            });
        for (std::thread &th : pool)
            th.join();
        if (err)
            std::rethrow_exception(err);
    }
} // namespace pilotspoof

#endif
