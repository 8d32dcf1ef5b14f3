#pragma once

// Test-only fault injection. Lets the validation suite prove it can detect a
// broken formula. Never enabled by normal library use.

namespace exdiff::debug {

enum class Mutation { None, CorruptP1 };

void set_mutation(Mutation m);
Mutation current_mutation();
bool mutation_active(Mutation m);

/// Enables a mutation for the lifetime of the guard.
class ScopedMutation {
  public:
    explicit ScopedMutation(Mutation m) : previous_(current_mutation()) { set_mutation(m); }
    ~ScopedMutation() { set_mutation(previous_); }
    ScopedMutation(const ScopedMutation&) = delete;
    ScopedMutation& operator=(const ScopedMutation&) = delete;

  private:
    Mutation previous_;
};

}  // namespace exdiff::debug
