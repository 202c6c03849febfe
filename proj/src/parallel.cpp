#include "njode/parallel.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <string>

namespace njode::par {

int max_threads() {
    int n = omp_get_max_threads();
    if (const char* env = std::getenv("NJODE_THREADS")) {
        try {
            const int cap = std::stoi(env);
            if (cap >= 1) n = std::min(n, cap);
        } catch (...) {
            // ignore malformed values, keep hardware default
        }
    }
    return std::max(1, n);
}

void for_each_index(int n, Exec exec, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    if (exec == Exec::Serial || max_threads() == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    const int threads = std::min(max_threads(), n);
#pragma omp parallel for schedule(static) num_threads(threads)
    for (int i = 0; i < n; ++i) fn(i);
}

double sum_indexed(int n, Exec exec, const std::function<double(int)>& term) {
    double total = 0.0;
    chunked_reduce<double>(
        n, 64, exec, [&](double& acc, int i) { acc += term(i); }, [](double& acc) { acc = 0.0; },
        [&](const double& acc) { total += acc; });
    return total;
}

}  // namespace njode::par
