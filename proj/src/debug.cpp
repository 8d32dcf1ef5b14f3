#include "exdiff/debug.hpp"

#include <atomic>

namespace exdiff::debug {

namespace {
std::atomic<Mutation> g_mutation{Mutation::None};
}

void set_mutation(Mutation m) { g_mutation.store(m, std::memory_order_relaxed); }
Mutation current_mutation() { return g_mutation.load(std::memory_order_relaxed); }
bool mutation_active(Mutation m) { return m != Mutation::None && current_mutation() == m; }

}  // namespace exdiff::debug
