#pragma once

// Trial-parallel map over disorder realizations.
//
// Each trial writes only its own slot, and randomness is keyed on the trial
// index, so the OpenMP kernel and the serial reference give bit-identical
// results for any worker count.

#include <cstddef>
#include <exception>
#include <type_traits>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mpa::parallel {

template <class F>
using trial_result_t = std::invoke_result_t<F&, std::size_t>;

/// Serial reference: fn(0), fn(1), ..., fn(count-1).
template <class F>
std::vector<trial_result_t<F>> map_trials_serial(std::size_t count, F&& fn) {
  std::vector<trial_result_t<F>> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(fn(i));
  return out;
}

/// OpenMP kernel. The first failing trial (lowest index) rethrows after the loop.
template <class F>
std::vector<trial_result_t<F>> map_trials(std::size_t count, int workers, F&& fn) {
  if (workers <= 1 || count < 2) return map_trials_serial(count, fn);
  std::vector<trial_result_t<F>> out(count);
  std::vector<std::exception_ptr> errors(count);
  const auto n = static_cast<long long>(count);
#pragma omp parallel for schedule(dynamic) num_threads(workers)
  for (long long i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      out[k] = fn(k);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

inline int available_workers() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace mpa::parallel
