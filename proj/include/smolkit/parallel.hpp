#pragma once

#include <cstddef>

namespace smolkit {

/// Cap on worker threads used by data-parallel loops. Results never depend on it:
/// parallel loops write disjoint indices and every reduction runs serially in index order.
void set_workers(int n);
int workers();

/// Calls body(i) for i in [0, n), spread over the configured workers.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
    const long long count = static_cast<long long>(n);
#pragma omp parallel for schedule(static) num_threads(workers()) if (count > 1 && workers() > 1)
    for (long long i = 0; i < count; ++i) {
        body(static_cast<std::size_t>(i));
    }
}

}  // namespace smolkit
