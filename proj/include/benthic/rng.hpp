#pragma once

// Portable random helpers. The standard <random> distributions are
// implementation-defined, so everything that feeds a frozen test value or a
// results file draws through these instead.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace benthic {

inline std::uint64_t splitmix64(std::uint64_t x) {
	x += 0x9e3779b97f4a7c15ULL;
	x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
	x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
	return x ^ (x >> 31);
}

// Order-sensitive mix of a base seed with any number of integer salts.
template <typename... Salts>
std::uint64_t derive_seed(std::uint64_t base, Salts... salts) {
	std::uint64_t h = splitmix64(base);
	((h = splitmix64(h ^ splitmix64(static_cast<std::uint64_t>(salts) + 0x632be59bd9b4e019ULL))), ...);
	return h;
}

inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
	for (unsigned char c : bytes) {
		h ^= c;
		h *= 0x100000001b3ULL;
	}
	return h;
}

class Rng {
public:
	explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {
	}

	std::uint64_t next() {
		return engine_();
	}

	// Uniform in [0, 1) with 53 random bits.
	double uniform() {
		return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
	}

	double uniform(double lo, double hi) {
		return lo + (hi - lo) * uniform();
	}

	// Uniform integer in [0, n) without modulo bias.
	std::uint64_t below(std::uint64_t n) {
		const std::uint64_t limit = -n % n;
		std::uint64_t r = engine_();
		while (r < limit) {
			r = engine_();
		}
		return r % n;
	}

	double normal() {
		if (has_spare_) {
			has_spare_ = false;
			return spare_;
		}
		double u1 = uniform();
		while (u1 <= 0.0) {
			u1 = uniform();
		}
		const double u2 = uniform();
		const double r = std::sqrt(-2.0 * std::log(u1));
		const double theta = 2.0 * std::numbers::pi * u2;
		spare_ = r * std::sin(theta);
		has_spare_ = true;
		return r * std::cos(theta);
	}

	template <typename T>
	void shuffle(std::span<T> items) {
		for (std::size_t i = items.size(); i > 1; --i) {
			const std::size_t j = below(i);
			std::swap(items[i - 1], items[j]);
		}
	}

private:
	std::mt19937_64 engine_;
	double spare_ = 0.0;
	bool has_spare_ = false;
};

} // namespace benthic
