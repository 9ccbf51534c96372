#pragma once

#include <cstddef>
#include <exception>
#include <numeric>
#include <vector>

#if AIMD_HAVE_PARALLEL_STL
#include <algorithm>
#include <execution>
#endif

namespace aimd::detail {

/// Calls fn(i) for i in [0, n). In parallel mode the first exception (by
/// index) is rethrown after all calls finish.
template <typename Fn>
void for_each_index(std::size_t n, bool parallel, Fn&& fn) {
#if AIMD_HAVE_PARALLEL_STL
  if (parallel && n > 1) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::vector<std::exception_ptr> errors(n);
    std::for_each(std::execution::par, idx.begin(), idx.end(), [&](std::size_t i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    });
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
    return;
  }
#else
  (void)parallel;
#endif
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

}  // namespace aimd::detail
