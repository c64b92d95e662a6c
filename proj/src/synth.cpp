#include "benthic/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "benthic/rng.hpp"

namespace benthic {

LabelTree gen_tree(const std::vector<std::size_t> &branching, std::uint64_t /*seed*/) {
	if (branching.empty()) {
		fail(ErrorCode::InvalidArgument, "branching list is empty");
	}
	for (std::size_t b : branching) {
		if (b == 0) {
			fail(ErrorCode::InvalidArgument, "branching factors must be positive");
		}
	}
	std::vector<std::pair<std::string, int>> rows{{"root", 0}};
	auto grow = [&](auto &self, const std::string &prefix, std::size_t level) -> void {
		if (level == branching.size()) {
			return;
		}
		for (std::size_t c = 0; c < branching[level]; ++c) {
			const std::string name = prefix.empty() ? "n" + std::to_string(c) : prefix + "." + std::to_string(c);
			rows.emplace_back(name, static_cast<int>(level) + 1);
			self(self, name, level + 1);
		}
	};
	grow(grow, "", 0);
	return LabelTree::from_rows(rows);
}

std::vector<std::string> SynthSpec::validate() const {
	if (feature_dim == 0) {
		fail(ErrorCode::InvalidArgument, "feature dimension must be positive");
	}
	if (level_spread.size() < static_cast<std::size_t>(tree.max_depth())) {
		fail(ErrorCode::InvalidArgument, "level_spread has " + std::to_string(level_spread.size()) +
		                                     " entries but the tree has depth " + std::to_string(tree.max_depth()));
	}
	for (double s : level_spread) {
		if (!(s > 0.0) || !std::isfinite(s)) {
			fail(ErrorCode::InvalidArgument, "level spreads must be positive");
		}
	}
	if (!(noise_sigma > 0.0) || !std::isfinite(noise_sigma)) {
		fail(ErrorCode::InvalidArgument, "noise sigma must be positive");
	}
	if (total_samples < tree.leaf_count()) {
		fail(ErrorCode::InvalidArgument, "need at least one sample per leaf (" + std::to_string(tree.leaf_count()) + ")");
	}
	if (alpha && (!(*alpha >= 0.0) || !std::isfinite(*alpha))) {
		fail(ErrorCode::InvalidArgument, "power-law exponent must be non-negative");
	}
	if (points_per_image == 0) {
		fail(ErrorCode::InvalidArgument, "points per image must be positive");
	}
	std::vector<std::string> warnings;
	for (std::size_t l = 1; l < level_spread.size(); ++l) {
		if (level_spread[l] >= level_spread[l - 1]) {
			warnings.push_back("level_spread is not strictly decreasing at depth " + std::to_string(l + 1) +
			                   "; siblings will not be closer than cousins");
			break;
		}
	}
	return warnings;
}

std::vector<std::size_t> leaf_counts(std::size_t leaves, std::size_t total, std::optional<double> alpha) {
	if (leaves == 0 || total < leaves) {
		fail(ErrorCode::InvalidArgument, "need at least one sample per leaf");
	}
	std::vector<double> share(leaves, 1.0);
	if (alpha) {
		for (std::size_t r = 0; r < leaves; ++r) {
			share[r] = std::pow(static_cast<double>(r + 1), -*alpha);
		}
	}
	// One guaranteed sample per leaf; the remainder is split by share.
	const std::size_t spare = total - leaves;
	const double norm = std::accumulate(share.begin(), share.end(), 0.0);
	std::vector<std::size_t> counts(leaves, 1);
	std::vector<std::pair<double, std::size_t>> remainders;
	std::size_t assigned = 0;
	for (std::size_t r = 0; r < leaves; ++r) {
		const double exact = static_cast<double>(spare) * share[r] / norm;
		const auto whole = static_cast<std::size_t>(std::floor(exact));
		counts[r] += whole;
		assigned += whole;
		remainders.emplace_back(exact - static_cast<double>(whole), r);
	}
	std::stable_sort(remainders.begin(), remainders.end(),
	                 [](const auto &a, const auto &b) { return a.first > b.first; });
	for (std::size_t k = 0; assigned < spare; ++k, ++assigned) {
		++counts[remainders[k].second];
	}
	return counts;
}

namespace {

Eigen::MatrixXd node_means(const SynthSpec &spec, Rng &rng) {
	const LabelTree &tree = spec.tree;
	const auto d = static_cast<Eigen::Index>(spec.feature_dim);
	Eigen::MatrixXd means = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(tree.size()), d);
	Eigen::RowVectorXd dir(d);
	// Ids are pre-order, so parents are filled before children.
	for (const auto &node : tree.nodes()) {
		if (!node.parent) {
			continue;
		}
		double norm = 0.0;
		while (norm == 0.0) {
			for (Eigen::Index j = 0; j < d; ++j) {
				dir[j] = rng.normal();
			}
			norm = dir.norm();
		}
		const double spread = spec.level_spread[static_cast<std::size_t>(node.depth) - 1];
		means.row(node.id) = means.row(*node.parent) + (spread / norm) * dir;
	}
	return means;
}

} // namespace

Eigen::MatrixXd gen_node_means(const SynthSpec &spec) {
	spec.validate();
	Rng rng(spec.seed);
	return node_means(spec, rng);
}

Dataset gen_samples(const SynthSpec &spec) {
	spec.validate();
	const LabelTree &tree = spec.tree;
	Rng rng(spec.seed);
	const Eigen::MatrixXd means = node_means(spec, rng);

	// Random ranking decides which leaves are the common ones.
	std::vector<NodeId> ranked(tree.leaves().begin(), tree.leaves().end());
	rng.shuffle(std::span<NodeId>(ranked));
	const auto counts = leaf_counts(ranked.size(), spec.total_samples, spec.alpha);

	std::vector<NodeId> labels;
	labels.reserve(spec.total_samples);
	for (std::size_t r = 0; r < ranked.size(); ++r) {
		labels.insert(labels.end(), counts[r], ranked[r]);
	}
	rng.shuffle(std::span<NodeId>(labels));

	std::vector<Sample> samples;
	samples.reserve(labels.size());
	char image[32];
	for (std::size_t i = 0; i < labels.size(); ++i) {
		Sample s;
		std::snprintf(image, sizeof(image), "img%05zu", i / spec.points_per_image);
		s.image_id = image;
		s.point_id = i % spec.points_per_image;
		s.label = tree.name(labels[i]);
		s.features.resize(spec.feature_dim);
		for (std::size_t j = 0; j < spec.feature_dim; ++j) {
			s.features[j] = means(labels[i], static_cast<Eigen::Index>(j)) + spec.noise_sigma * rng.normal();
		}
		samples.push_back(std::move(s));
	}
	return Dataset(std::move(samples), spec.feature_dim);
}

} // namespace benthic
