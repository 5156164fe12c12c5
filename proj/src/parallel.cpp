#include "smolkit/parallel.hpp"

#include <algorithm>
#include <atomic>

namespace smolkit {

namespace {
std::atomic<int> g_workers{1};
}

void set_workers(int n) { g_workers.store(std::max(1, n)); }

int workers() { return g_workers.load(); }

}  // namespace smolkit
