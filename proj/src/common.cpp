#include "nilm/common.hpp"

#include <exception>
#include <mutex>

namespace nilm {

const char* err_name(Err code) {
    switch (code) {
        case Err::TooShort: return "TooShort";
        case Err::AllZero: return "AllZero";
        case Err::LengthMismatch: return "LengthMismatch";
        case Err::BadLevel: return "BadLevel";
        case Err::ScheduleOutOfRange: return "ScheduleOutOfRange";
        case Err::EmptyData: return "EmptyData";
        case Err::DimMismatch: return "DimMismatch";
        case Err::OutOfRange: return "OutOfRange";
        case Err::BadId: return "BadId";
        case Err::EmptyGrid: return "EmptyGrid";
        case Err::DegenerateColumn: return "DegenerateColumn";
        case Err::NonFiniteLoss: return "NonFiniteLoss";
        case Err::CycleTooShort: return "CycleTooShort";
        case Err::BadFile: return "BadFile";
        case Err::BadConfig: return "BadConfig";
    }
    return "Unknown";
}

void parallel_for(size_t n, const std::function<void(size_t)>& fn, unsigned n_threads) {
    if (n == 0) return;
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 2;
    unsigned workers = n_threads ? n_threads : hw;
    if (workers > n) workers = unsigned(n);
    if (workers <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }

    std::atomic<size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto body = [&]() {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= n || failed.load(std::memory_order_relaxed)) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                failed.store(true, std::memory_order_relaxed);
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (unsigned t = 1; t < workers; ++t) pool.emplace_back(body);
    body();
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace nilm
