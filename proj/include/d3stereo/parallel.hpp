#pragma once

#include <functional>

namespace d3stereo {

// Worker count used by every parallel kernel. Defaults to the D3STEREO_THREADS
// environment variable when set, otherwise 1.
int worker_count();
void set_worker_count(int n);

/// Runs body(begin_row, end_row) over contiguous chunks of [begin, end).
/// Chunks are disjoint, so kernels that write only their own rows produce
/// output independent of the worker count.
void parallel_rows(int begin, int end, const std::function<void(int, int)>& body);

}  // namespace d3stereo
