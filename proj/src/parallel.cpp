#include "rigidity/parallel.hpp"

namespace rigidity::parallel {

namespace {
std::atomic<unsigned> g_jobs{1};
}

void set_jobs(unsigned jobs) { g_jobs.store(jobs == 0 ? 1 : jobs); }

unsigned jobs() { return g_jobs.load(); }

} // namespace rigidity::parallel
