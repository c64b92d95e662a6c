#include "benthic/models.hpp"

#include <algorithm>
#include <cmath>

#include "benthic/parallel.hpp"
#include "benthic/rng.hpp"

namespace benthic {

Standardizer Standardizer::identity(std::size_t dim) {
	const auto d = static_cast<Eigen::Index>(dim);
	return {Eigen::RowVectorXd::Zero(d), Eigen::RowVectorXd::Ones(d)};
}

Standardizer Standardizer::fit(const Dataset &data, bool enabled) {
	Standardizer s = identity(data.feature_dim());
	if (!enabled || data.empty()) {
		return s;
	}
	const auto d = static_cast<Eigen::Index>(data.feature_dim());
	const auto n = static_cast<double>(data.size());
	for (const auto &sample : data.samples()) {
		s.mean += Eigen::Map<const Eigen::RowVectorXd>(sample.features.data(), d);
	}
	s.mean /= n;
	Eigen::RowVectorXd var = Eigen::RowVectorXd::Zero(d);
	for (const auto &sample : data.samples()) {
		var += (Eigen::Map<const Eigen::RowVectorXd>(sample.features.data(), d) - s.mean).array().square().matrix();
	}
	var /= n;
	for (Eigen::Index j = 0; j < d; ++j) {
		const double sd = std::sqrt(var[j]);
		s.scale[j] = sd > 1e-12 ? sd : 1.0;
	}
	return s;
}

Eigen::MatrixXd Standardizer::apply(const Dataset &data) const {
	if (data.feature_dim() != dim()) {
		fail(ErrorCode::DimensionMismatch, "data has " + std::to_string(data.feature_dim()) +
		                                       " features, model expects " + std::to_string(dim()));
	}
	const auto d = static_cast<Eigen::Index>(dim());
	Eigen::MatrixXd out(static_cast<Eigen::Index>(data.size()), d);
	for (std::size_t i = 0; i < data.size(); ++i) {
		out.row(static_cast<Eigen::Index>(i)) =
		    (Eigen::Map<const Eigen::RowVectorXd>(data[i].features.data(), d) - mean).cwiseQuotient(scale);
	}
	return out;
}

Eigen::MatrixXd Standardizer::apply(std::span<const double> x) const {
	if (x.size() != dim()) {
		fail(ErrorCode::DimensionMismatch,
		     "input has " + std::to_string(x.size()) + " features, model expects " + std::to_string(dim()));
	}
	const auto d = static_cast<Eigen::Index>(dim());
	Eigen::MatrixXd out = (Eigen::Map<const Eigen::RowVectorXd>(x.data(), d) - mean).cwiseQuotient(scale);
	return out;
}

double PredictionPath::joint_probability() const {
	double p = 1.0;
	for (double q : per_node_probs) {
		p *= q;
	}
	return p;
}

std::uint64_t node_seed(std::uint64_t base, NodeId node) {
	return derive_seed(base, 0x6e6f6465ULL, node);
}

namespace {

std::vector<NodeId> leaf_ids(const LabelTree &tree, const Dataset &train) {
	std::vector<NodeId> ids;
	ids.reserve(train.size());
	for (std::size_t i = 0; i < train.size(); ++i) {
		const auto id = tree.find_leaf(train[i].label);
		if (!id) {
			fail(ErrorCode::LabelNotInTree, "training sample " + std::to_string(i) + " has label '" + train[i].label +
			                                    "', which is not a leaf of the tree");
		}
		ids.push_back(*id);
	}
	return ids;
}

void check_train(const Dataset &train, const TrainConfig &config) {
	config.validate();
	if (train.empty()) {
		fail(ErrorCode::EmptyTrainingSet, "training set is empty");
	}
}

std::vector<NodeId> unseen_leaves(const LabelTree &tree, const std::vector<NodeId> &sample_leaves,
                                  std::vector<std::string> &warnings) {
	std::vector<char> seen(tree.size(), 0);
	for (NodeId id : sample_leaves) {
		seen[id] = 1;
	}
	std::vector<NodeId> out;
	for (NodeId leaf : tree.leaves()) {
		if (!seen[leaf]) {
			out.push_back(leaf);
			warnings.push_back("leaf '" + tree.name(leaf) + "' has no training samples and is unreachable");
		}
	}
	return out;
}

std::size_t argmax_first(const Eigen::MatrixXd &probs, Eigen::Index row) {
	Eigen::Index best = 0;
	for (Eigen::Index j = 1; j < probs.cols(); ++j) {
		if (probs(row, j) > probs(row, best)) {
			best = j;
		}
	}
	return static_cast<std::size_t>(best);
}

} // namespace

std::vector<NodeRouting> route_training_set(const LabelTree &tree, const Dataset &train) {
	const auto leaves = leaf_ids(tree, train);
	std::vector<NodeRouting> routing(tree.size());
	for (std::size_t i = 0; i < leaves.size(); ++i) {
		NodeId parent = tree.root();
		for (NodeId step : tree.ancestors(leaves[i])) {
			routing[parent].samples.push_back(i);
			routing[parent].targets.push_back(step);
			parent = step;
		}
	}
	return routing;
}

HierModel fit_lcpn(const LabelTree &tree, const Dataset &train, const TrainConfig &config, std::size_t jobs) {
	check_train(train, config);
	const auto sample_leaves = leaf_ids(tree, train);
	const auto routing = route_training_set(tree, train);

	HierModel model;
	model.tree = tree;
	model.config = config;
	model.standardizer = Standardizer::fit(train, config.standardize);
	model.unreachable_leaves = unseen_leaves(tree, sample_leaves, model.warnings);
	const Eigen::MatrixXd inputs = model.standardizer.apply(train);

	struct Job {
		NodeId node;
		std::vector<NodeId> children;
	};
	std::vector<Job> work;
	for (const auto &node : tree.nodes()) {
		if (node.is_leaf()) {
			continue;
		}
		std::vector<char> has(tree.size(), 0);
		for (NodeId t : routing[node.id].targets) {
			has[t] = 1;
		}
		std::vector<NodeId> trained;
		for (NodeId c : node.children) {
			if (has[c]) {
				trained.push_back(c);
			}
		}
		if (trained.size() >= 2) {
			work.push_back({node.id, std::move(trained)});
		} else if (trained.size() == 1) {
			model.pass_through.emplace(node.id, trained.front());
		}
	}

	std::vector<NodeClassifier> trained(work.size());
	parallel_for(work.size(), jobs, [&](std::size_t k) {
		const Job &job = work[k];
		const auto &route = routing[job.node];
		Eigen::MatrixXd x(static_cast<Eigen::Index>(route.samples.size()), inputs.cols());
		std::vector<int> y(route.samples.size());
		for (std::size_t i = 0; i < route.samples.size(); ++i) {
			x.row(static_cast<Eigen::Index>(i)) = inputs.row(static_cast<Eigen::Index>(route.samples[i]));
			const auto pos = std::find(job.children.begin(), job.children.end(), route.targets[i]);
			y[i] = static_cast<int>(pos - job.children.begin());
		}
		TrainConfig node_config = config;
		node_config.seed = node_seed(config.seed, job.node);
		Mlp net = Mlp::init(inputs.cols(), job.children.size(), node_config.seed);
		trained[k] = {job.children, train_mlp(std::move(net), x, y, node_config).model};
	});
	for (std::size_t k = 0; k < work.size(); ++k) {
		model.classifiers.emplace(work[k].node, std::move(trained[k]));
	}
	return model;
}

std::vector<PredictionPath> predict_topdown(const HierModel &model, const Dataset &data) {
	const Eigen::MatrixXd inputs = model.standardizer.apply(data);
	const LabelTree &tree = model.tree;
	std::vector<PredictionPath> paths(data.size());
	// Rows waiting at each node. Node ids are pre-order, so a parent is always
	// drained before its children.
	std::vector<std::vector<std::size_t>> pending(tree.size());
	pending[tree.root()].resize(data.size());
	for (std::size_t i = 0; i < data.size(); ++i) {
		pending[tree.root()][i] = i;
	}
	for (NodeId node = 0; node < tree.size(); ++node) {
		auto rows = std::move(pending[node]);
		if (rows.empty()) {
			continue;
		}
		if (tree.is_leaf(node)) {
			for (std::size_t r : rows) {
				paths[r].leaf = tree.name(node);
			}
			continue;
		}
		if (auto it = model.classifiers.find(node); it != model.classifiers.end()) {
			Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), inputs.cols());
			for (std::size_t i = 0; i < rows.size(); ++i) {
				x.row(static_cast<Eigen::Index>(i)) = inputs.row(static_cast<Eigen::Index>(rows[i]));
			}
			const Eigen::MatrixXd probs = it->second.net.predict_proba(x);
			for (std::size_t i = 0; i < rows.size(); ++i) {
				const std::size_t j = argmax_first(probs, static_cast<Eigen::Index>(i));
				const NodeId child = it->second.children[j];
				paths[rows[i]].nodes.push_back(child);
				paths[rows[i]].per_node_probs.push_back(probs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
				pending[child].push_back(rows[i]);
			}
		} else if (auto pt = model.pass_through.find(node); pt != model.pass_through.end()) {
			for (std::size_t r : rows) {
				paths[r].nodes.push_back(pt->second);
				paths[r].per_node_probs.push_back(1.0);
				pending[pt->second].push_back(r);
			}
		} else {
			fail(ErrorCode::NoTrainedPath, "no trained classifier or route below '" + tree.name(node) + "'");
		}
	}
	return paths;
}

PredictionPath predict_topdown(const HierModel &model, std::span<const double> x) {
	if (x.size() != model.feature_dim()) {
		fail(ErrorCode::DimensionMismatch,
		     "input has " + std::to_string(x.size()) + " features, model expects " + std::to_string(model.feature_dim()));
	}
	Sample s;
	s.features.assign(x.begin(), x.end());
	std::vector<Sample> one{std::move(s)};
	return predict_topdown(model, Dataset(std::move(one), x.size())).front();
}

std::pair<std::vector<NodeId>, std::vector<double>> node_distribution(const HierModel &model, NodeId node,
                                                                      std::span<const double> x) {
	if (auto it = model.classifiers.find(node); it != model.classifiers.end()) {
		const Eigen::MatrixXd p = it->second.net.predict_proba(model.standardizer.apply(x));
		return {it->second.children, std::vector<double>(p.data(), p.data() + p.size())};
	}
	if (auto pt = model.pass_through.find(node); pt != model.pass_through.end()) {
		return {{pt->second}, {1.0}};
	}
	return {};
}

FlatModel fit_flat(const LabelTree &tree, const Dataset &train, const TrainConfig &config) {
	check_train(train, config);
	const auto sample_leaves = leaf_ids(tree, train);

	FlatModel model;
	model.tree = tree;
	model.config = config;
	model.unreachable_leaves = unseen_leaves(tree, sample_leaves, model.warnings);
	std::vector<int> index(tree.size(), -1);
	{
		std::vector<char> seen(tree.size(), 0);
		for (NodeId id : sample_leaves) {
			seen[id] = 1;
		}
		for (NodeId leaf : tree.leaves()) {
			if (seen[leaf]) {
				index[leaf] = static_cast<int>(model.leaf_order.size());
				model.leaf_order.push_back(leaf);
			}
		}
	}
	if (model.leaf_order.size() < 2) {
		fail(ErrorCode::EmptyTrainingSet, "flat classifier needs at least two classes with training data");
	}
	model.standardizer = Standardizer::fit(train, config.standardize);
	const Eigen::MatrixXd inputs = model.standardizer.apply(train);
	std::vector<int> y(sample_leaves.size());
	for (std::size_t i = 0; i < y.size(); ++i) {
		y[i] = index[sample_leaves[i]];
	}
	TrainConfig net_config = config;
	net_config.seed = node_seed(config.seed, tree.root());
	Mlp net = Mlp::init(inputs.cols(), model.leaf_order.size(), net_config.seed);
	model.net = train_mlp(std::move(net), inputs, y, net_config).model;
	return model;
}

std::vector<double> predict_flat_proba(const FlatModel &model, std::span<const double> x) {
	const Eigen::MatrixXd p = model.net.predict_proba(model.standardizer.apply(x));
	return std::vector<double>(p.data(), p.data() + p.size());
}

std::string predict_flat(const FlatModel &model, std::span<const double> x) {
	const Eigen::MatrixXd p = model.net.predict_proba(model.standardizer.apply(x));
	return model.tree.name(model.leaf_order[argmax_first(p, 0)]);
}

std::vector<std::string> predict_flat(const FlatModel &model, const Dataset &data) {
	const Eigen::MatrixXd p = model.net.predict_proba(model.standardizer.apply(data));
	std::vector<std::string> out(data.size());
	for (std::size_t i = 0; i < data.size(); ++i) {
		out[i] = model.tree.name(model.leaf_order[argmax_first(p, static_cast<Eigen::Index>(i))]);
	}
	return out;
}

std::vector<std::string> predict_leaves(const AnyModel &model, const Dataset &data) {
	if (const auto *flat = std::get_if<FlatModel>(&model)) {
		return predict_flat(*flat, data);
	}
	const auto paths = predict_topdown(std::get<HierModel>(model), data);
	std::vector<std::string> out;
	out.reserve(paths.size());
	for (const auto &p : paths) {
		out.push_back(p.leaf);
	}
	return out;
}

} // namespace benthic
