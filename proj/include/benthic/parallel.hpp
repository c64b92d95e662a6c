#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace benthic {

/// Runs fn(i) for i in [0, n) on up to `jobs` threads (0 means hardware
/// concurrency). Each index runs exactly once. If any call throws, the
/// exception from the lowest failing index is rethrown after all workers
/// finish, so failures do not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn &&fn) {
	if (jobs == 0) {
		jobs = std::max(1u, std::thread::hardware_concurrency());
	}
	jobs = std::min(jobs, n);
	if (jobs <= 1) {
		for (std::size_t i = 0; i < n; ++i) {
			fn(i);
		}
		return;
	}
	std::atomic<std::size_t> next{0};
	std::vector<std::exception_ptr> errors(n);
	auto worker = [&] {
		for (std::size_t i = next++; i < n; i = next++) {
			try {
				fn(i);
			} catch (...) {
				errors[i] = std::current_exception();
			}
		}
	};
	std::vector<std::thread> pool;
	pool.reserve(jobs);
	for (std::size_t t = 0; t < jobs; ++t) {
		pool.emplace_back(worker);
	}
	for (auto &t : pool) {
		t.join();
	}
	for (auto &e : errors) {
		if (e) {
			std::rethrow_exception(e);
		}
	}
}

} // namespace benthic
