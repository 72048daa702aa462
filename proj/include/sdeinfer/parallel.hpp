#pragma once

#include <cstddef>
#include <exception>
#include <functional>

namespace sdeinfer {

/// Runs body(i) for i in [0, count) on up to `threads` workers. Each index is
/// processed by exactly one worker; the first exception thrown is rethrown
/// on the calling thread after all workers join.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& body);

/// 0 means "use hardware concurrency".
std::size_t resolve_threads(std::size_t requested) noexcept;

}  // namespace sdeinfer
