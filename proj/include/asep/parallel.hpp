#pragma once

#include <cstdint>
#include <functional>

namespace asep {

// Worker-count control.  0 means "one worker per hardware thread".  All
// parallel loops in the library are written so the result is bit-identical
// for every worker count: work is split into fixed chunks, each chunk's
// partial result lands in a slot indexed by chunk id, and the slots are
// combined by a deterministic reduction.
void set_worker_count(int n);
int worker_count();

// Runs fn(chunk) for chunk = 0 .. n_chunks-1, distributing chunks over the
// active workers.  fn must only write to state owned by its chunk id.
void parallel_chunks(std::int64_t n_chunks,
                     const std::function<void(std::int64_t)>& fn);

}  // namespace asep
