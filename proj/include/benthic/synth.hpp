#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "benthic/dataset.hpp"
#include "benthic/label_tree.hpp"

namespace benthic {

/// Complete tree with branching[l] children under every depth-l node. Leaf
/// and internal names spell the child-index path ("n2.0.1"). `seed` is part
/// of the signature for parity with the generators; the structure is fully
/// determined by `branching`.
LabelTree gen_tree(const std::vector<std::size_t> &branching, std::uint64_t seed = 0);

struct SynthSpec {
	LabelTree tree;
	std::size_t feature_dim = 64;
	// Displacement scale of a depth-l node's mean from its parent's; entry l-1
	// applies at depth l. Must cover every depth of the tree.
	std::vector<double> level_spread;
	double noise_sigma = 1.0;
	// Total sample count, split across leaves.
	std::size_t total_samples = 5000;
	// Power-law exponent; leaf of rank r gets a share proportional to
	// r^-alpha. nullopt means equal counts.
	std::optional<double> alpha;
	// Images carry this many points each when ids are assigned.
	std::size_t points_per_image = 25;
	std::uint64_t seed = 0;

	/// Throws InvalidArgument on an unusable spec; returns advisory warnings
	/// (e.g. spreads that do not shrink with depth).
	std::vector<std::string> validate() const;
};

/// Leaf sample counts: equal, or power-law by rank with largest-remainder
/// rounding, every leaf getting at least one sample. Counts sum to `total`.
std::vector<std::size_t> leaf_counts(std::size_t leaves, std::size_t total, std::optional<double> alpha);

/// Node means for every tree node (row = node id). Root is the origin; each
/// child is its parent plus level_spread[depth-1] times a uniformly random
/// unit direction.
Eigen::MatrixXd gen_node_means(const SynthSpec &spec);

/// Gaussian mixture on the tree: x = mean(leaf) + noise_sigma * N(0, I).
/// Leaves are assigned counts by a seeded random ranking, samples are
/// shuffled, and image ids group consecutive points.
Dataset gen_samples(const SynthSpec &spec);

} // namespace benthic
