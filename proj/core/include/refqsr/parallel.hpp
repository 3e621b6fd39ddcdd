// Copyright 2026 The refqsr authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>

namespace refqsr {

// Worker count for a job of n independent items: hardware concurrency,
// capped by the REFQSR_THREADS environment variable when set.
int worker_count(int n);

// Run fn(0..n-1) across workers. Each index is processed exactly once;
// callers must write only to index-owned slots so results stay
// deterministic. The first exception thrown by any worker is rethrown
// on the calling thread after all workers join.
void parallel_for(int n, const std::function<void(int)>& fn);

} // namespace refqsr
