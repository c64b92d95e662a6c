#pragma once

#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "benthic/dataset.hpp"
#include "benthic/label_tree.hpp"
#include "benthic/mlp.hpp"

namespace benthic {

// Per-dimension affine transform (x - mean) / scale fit on training features.
// A disabled standardizer is the identity.
struct Standardizer {
	Eigen::RowVectorXd mean;
	Eigen::RowVectorXd scale;

	static Standardizer fit(const Dataset &data, bool enabled);
	static Standardizer identity(std::size_t dim);

	std::size_t dim() const {
		return static_cast<std::size_t>(mean.size());
	}
	Eigen::MatrixXd apply(const Dataset &data) const;
	Eigen::MatrixXd apply(std::span<const double> x) const;
};

struct NodeClassifier {
	// Trained children in document order; output j of `net` scores children[j].
	std::vector<NodeId> children;
	Mlp net;
};

/// Top-down local-classifier-per-parent-node model.
struct HierModel {
	LabelTree tree;
	std::map<NodeId, NodeClassifier> classifiers;
	// Nodes with exactly one trained child map to that child.
	std::map<NodeId, NodeId> pass_through;
	std::vector<NodeId> unreachable_leaves;
	Standardizer standardizer;
	TrainConfig config;
	std::vector<std::string> warnings;

	std::size_t feature_dim() const {
		return standardizer.dim();
	}
};

/// Single classifier over every leaf that has training data.
struct FlatModel {
	LabelTree tree;
	std::vector<NodeId> leaf_order;
	Mlp net;
	std::vector<NodeId> unreachable_leaves;
	Standardizer standardizer;
	TrainConfig config;
	std::vector<std::string> warnings;

	std::size_t feature_dim() const {
		return standardizer.dim();
	}
};

struct PredictionPath {
	// ancestors(leaf): first non-root level down to the leaf.
	std::vector<NodeId> nodes;
	// Probability of the branch taken into nodes[i]; 1 for pass-through steps.
	std::vector<double> per_node_probs;
	std::string leaf;

	double joint_probability() const;
};

/// Samples routed to `node` during training and the child each one targets.
struct NodeRouting {
	std::vector<std::size_t> samples;
	std::vector<NodeId> targets;
};

/// Routing for every internal node in one pass; indexed by node id.
std::vector<NodeRouting> route_training_set(const LabelTree &tree, const Dataset &train);

/// Seed used for the classifier at `node`; the flat model uses the root's.
std::uint64_t node_seed(std::uint64_t base, NodeId node);

/// Trains one classifier per parent node. `jobs` bounds concurrent node
/// training; results do not depend on it.
HierModel fit_lcpn(const LabelTree &tree, const Dataset &train, const TrainConfig &config, std::size_t jobs = 1);

PredictionPath predict_topdown(const HierModel &model, std::span<const double> x);
std::vector<PredictionPath> predict_topdown(const HierModel &model, const Dataset &data);

/// Children and probabilities the classifier at `node` assigns to a raw
/// (unstandardized) input. Pass-through nodes report their child with 1.
std::pair<std::vector<NodeId>, std::vector<double>> node_distribution(const HierModel &model, NodeId node,
                                                                      std::span<const double> x);

FlatModel fit_flat(const LabelTree &tree, const Dataset &train, const TrainConfig &config);

std::vector<double> predict_flat_proba(const FlatModel &model, std::span<const double> x);
std::string predict_flat(const FlatModel &model, std::span<const double> x);
std::vector<std::string> predict_flat(const FlatModel &model, const Dataset &data);

using AnyModel = std::variant<HierModel, FlatModel>;

/// Leaf predictions for every sample, whichever model kind.
std::vector<std::string> predict_leaves(const AnyModel &model, const Dataset &data);

/// Bundle directory: tree.txt, manifest.json and one network file per
/// classifier. Creates the directory if needed.
void save_model(const std::string &dir, const HierModel &model);
void save_model(const std::string &dir, const FlatModel &model);
AnyModel load_model(const std::string &dir);

} // namespace benthic
