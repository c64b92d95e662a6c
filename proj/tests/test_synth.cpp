#include <catch_amalgamated.hpp>

#include <numeric>

#include "benthic/synth.hpp"

using namespace benthic;

namespace {

SynthSpec spec_333(std::uint64_t seed) {
	SynthSpec s;
	s.tree = gen_tree({3, 3, 3});
	s.level_spread = {3, 2, 1};
	s.feature_dim = 64;
	s.total_samples = 2000;
	s.alpha = 1.0;
	s.seed = seed;
	return s;
}

} // namespace

TEST_CASE("generated tree shapes", "[synth][tree]") {
	auto t = gen_tree({2, 2});
	CHECK(t.size() == 7);
	CHECK(t.leaf_count() == 4);
	CHECK(t.max_depth() == 2);
	CHECK(t.name(t.leaves()[3]) == "n1.1");

	auto flat = gen_tree({54});
	CHECK(flat.leaf_count() == 54);
	CHECK(flat.max_depth() == 1);

	auto t322 = gen_tree({3, 2, 2});
	CHECK(t322.leaf_count() == 12);
	for (NodeId leaf : t322.leaves()) {
		CHECK(t322.depth(leaf) == 3);
	}
	CHECK(gen_tree({3, 2, 2}, 1).serialize() == gen_tree({3, 2, 2}, 2).serialize());
	CHECK_THROWS_AS(gen_tree({}), Error);
	CHECK_THROWS_AS(gen_tree({2, 0}), Error);
}

TEST_CASE("leaf counts", "[synth][counts]") {
	auto equal = leaf_counts(4, 10, std::nullopt);
	CHECK(equal == std::vector<std::size_t>{3, 3, 2, 2});
	auto pl = leaf_counts(54, 38725, 2.0);
	REQUIRE(pl.size() == 54);
	CHECK(std::accumulate(pl.begin(), pl.end(), std::size_t{0}) == 38725);
	CHECK(std::is_sorted(pl.rbegin(), pl.rend()));
	const std::size_t top11 = std::accumulate(pl.begin(), pl.begin() + 11, std::size_t{0});
	CHECK(static_cast<double>(top11) / 38725.0 >= 0.95);
	for (std::size_t c : pl) {
		CHECK(c >= 1);
	}
	auto tiny = leaf_counts(5, 5, 3.0);
	CHECK(tiny == std::vector<std::size_t>{1, 1, 1, 1, 1});
	CHECK_THROWS_AS(leaf_counts(5, 4, 1.0), Error);
}

TEST_CASE("power-law dataset head holds 95% of samples", "[synth][counts]") {
	SynthSpec s;
	s.tree = gen_tree({54});
	s.level_spread = {2.0};
	s.feature_dim = 4;
	s.total_samples = 38725;
	s.alpha = 2.0;
	s.seed = 3;
	auto d = gen_samples(s);
	auto h = d.histogram_by_count();
	REQUIRE(h.size() == 54);
	std::size_t top = 0;
	for (std::size_t i = 0; i < 11; ++i) {
		top += h[i].second;
	}
	CHECK(static_cast<double>(top) / static_cast<double>(d.size()) >= 0.95);
}

TEST_CASE("generated datasets are deterministic and valid", "[synth][determinism]") {
	auto a = gen_samples(spec_333(5));
	auto b = gen_samples(spec_333(5));
	auto c = gen_samples(spec_333(6));
	CHECK(a.digest() == b.digest());
	CHECK(format_dataset(a) == format_dataset(b));
	CHECK(a.digest() != c.digest());
	CHECK(a.size() == 2000);
	CHECK(a.feature_dim() == 64);
	CHECK_NOTHROW(a.validate_labels(spec_333(5).tree));
	CHECK(a[0].image_id == "img00000");
	CHECK(a[26].image_id == "img00001");
	CHECK(a[26].point_id == 1);
}

TEST_CASE("siblings are closer than cousins", "[synth][geometry][property]") {
	double sibling = 0, cousin = 0;
	std::size_t closer = 0;
	const std::size_t seeds = 100;
	for (std::uint64_t seed = 0; seed < seeds; ++seed) {
		auto spec = spec_333(seed);
		auto means = gen_node_means(spec);
		const auto &t = spec.tree;
		auto leaves = t.leaves();
		double s_sum = 0, c_sum = 0;
		std::size_t s_n = 0, c_n = 0;
		for (std::size_t i = 0; i < leaves.size(); ++i) {
			for (std::size_t j = i + 1; j < leaves.size(); ++j) {
				const double dist = (means.row(leaves[i]) - means.row(leaves[j])).norm();
				const int lca = t.lca_depth(leaves[i], leaves[j]);
				if (lca == 2) {
					s_sum += dist;
					++s_n;
				} else if (lca == 1) {
					c_sum += dist;
					++c_n;
				}
			}
		}
		sibling += s_sum / static_cast<double>(s_n);
		cousin += c_sum / static_cast<double>(c_n);
		closer += s_sum / static_cast<double>(s_n) < c_sum / static_cast<double>(c_n);
	}
	CHECK(sibling / seeds < cousin / seeds);
	CHECK(closer == seeds);
}

TEST_CASE("node means follow the spread", "[synth][geometry]") {
	auto spec = spec_333(1);
	auto means = gen_node_means(spec);
	const auto &t = spec.tree;
	CHECK(means.row(0).norm() == 0.0);
	for (const auto &n : t.nodes()) {
		if (n.parent) {
			const double step = (means.row(n.id) - means.row(*n.parent)).norm();
			CHECK(step == Catch::Approx(spec.level_spread[static_cast<std::size_t>(n.depth - 1)]).epsilon(1e-12));
		}
	}
}

TEST_CASE("vanishing noise puts samples at their leaf means", "[synth]") {
	auto spec = spec_333(2);
	spec.noise_sigma = 1e-12;
	spec.total_samples = 100;
	auto means = gen_node_means(spec);
	auto d = gen_samples(spec);
	for (const auto &s : d.samples()) {
		const NodeId leaf = spec.tree.leaf(s.label);
		for (std::size_t k = 0; k < s.features.size(); ++k) {
			REQUIRE(std::abs(s.features[k] - means(leaf, static_cast<Eigen::Index>(k))) <= 1e-10);
		}
	}
}

TEST_CASE("SynthSpec validation", "[synth][errors]") {
	auto s = spec_333(1);
	CHECK(s.validate().empty());
	s.level_spread = {1, 2, 3};
	CHECK_FALSE(s.validate().empty());
	s.level_spread = {3, 2};
	CHECK_THROWS_AS(s.validate(), Error);
	s = spec_333(1);
	s.feature_dim = 0;
	CHECK_THROWS_AS(s.validate(), Error);
	s = spec_333(1);
	s.noise_sigma = 0.0;
	CHECK_THROWS_AS(s.validate(), Error);
	s = spec_333(1);
	s.total_samples = 10;
	CHECK_THROWS_AS(s.validate(), Error);
}
