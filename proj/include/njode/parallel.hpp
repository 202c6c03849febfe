#pragma once

#include <functional>
#include <vector>

namespace njode::par {

/// Execution policy for the data-parallel kernels. Serial is the reference
/// implementation; OpenMP must produce bit-identical results (all reductions
/// run in fixed index order over fixed-size chunks).
enum class Exec { Serial, OpenMP };

/// Thread cap: min(hardware, NJODE_THREADS env var when set).
int max_threads();

/// Parallel loop over [0, n). Item order of side effects must not matter;
/// each index writes only its own slots.
void for_each_index(int n, Exec exec, const std::function<void(int)>& fn);

/// Deterministic sum reduction: items are grouped into fixed chunks of size
/// `chunk`, each chunk is accumulated serially in index order, and the chunk
/// results are combined in chunk order. The result is independent of the
/// thread count, including the serial policy.
template <typename Acc>
void chunked_reduce(int n, int chunk, Exec exec, const std::function<void(Acc&, int)>& item,
                    const std::function<void(Acc&)>& make, const std::function<void(const Acc&)>& fold) {
    if (n <= 0) return;
    if (chunk < 1) chunk = 1;
    const int n_chunks = (n + chunk - 1) / chunk;
    std::vector<Acc> accs(n_chunks);
    for_each_index(n_chunks, exec, [&](int c) {
        make(accs[c]);
        const int lo = c * chunk, hi = std::min(n, lo + chunk);
        for (int i = lo; i < hi; ++i) item(accs[c], i);
    });
    for (int c = 0; c < n_chunks; ++c) fold(accs[c]);
}

/// Convenience: double sum with fixed 64-item chunks.
double sum_indexed(int n, Exec exec, const std::function<double(int)>& term);

}  // namespace njode::par
