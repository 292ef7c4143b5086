#include "perfusion/parallel.hpp"

#include <atomic>

namespace perfusion {

namespace {
std::atomic<int> g_threads{0}; // 0 = not set yet, use hardware count
}

int parallel_threads() {
    const int n = g_threads.load();
    if (n > 0) return n;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

void set_parallel_threads(int n) { g_threads.store(n > 0 ? n : 1); }

} // namespace perfusion
