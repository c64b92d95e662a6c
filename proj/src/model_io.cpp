#include <filesystem>
#include <fstream>
#include <sstream>

#include "benthic/csv.hpp"
#include "benthic/models.hpp"

namespace benthic {

namespace {

namespace fs = std::filesystem;

constexpr int kBundleVersion = 1;

nlohmann::json standardizer_json(const Standardizer &s) {
	return {{"mean", std::vector<double>(s.mean.data(), s.mean.data() + s.mean.size())},
	        {"scale", std::vector<double>(s.scale.data(), s.scale.data() + s.scale.size())}};
}

Standardizer standardizer_from_json(const nlohmann::json &j) {
	const auto mean = j.at("mean").get<std::vector<double>>();
	const auto scale = j.at("scale").get<std::vector<double>>();
	if (mean.size() != scale.size() || mean.empty()) {
		fail(ErrorCode::MalformedModel, "standardization statistics are inconsistent");
	}
	Standardizer s = Standardizer::identity(mean.size());
	for (std::size_t j2 = 0; j2 < mean.size(); ++j2) {
		s.mean[static_cast<Eigen::Index>(j2)] = mean[j2];
		s.scale[static_cast<Eigen::Index>(j2)] = scale[j2];
	}
	return s;
}

std::vector<std::string> names(const LabelTree &tree, const std::vector<NodeId> &ids) {
	std::vector<std::string> out;
	out.reserve(ids.size());
	for (NodeId id : ids) {
		out.push_back(tree.name(id));
	}
	return out;
}

void write_json(const fs::path &path, const nlohmann::json &j) {
	csv::write_file(path.string(), j.dump(1, '\t') + "\n");
}

nlohmann::json read_json(const fs::path &path) {
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		fail(ErrorCode::IoFailure, "cannot open '" + path.string() + "'");
	}
	try {
		return nlohmann::json::parse(in);
	} catch (const nlohmann::json::exception &e) {
		fail(ErrorCode::MalformedModel, "'" + path.string() + "': " + e.what());
	}
}

void write_network(const fs::path &path, const Mlp &net, const std::vector<std::string> &labels,
                   const TrainConfig &config) {
	nlohmann::json j = to_json(net);
	j["labels"] = labels;
	j["train_config"] = to_json(config);
	write_json(path, j);
}

fs::path prepare(const std::string &dir, const LabelTree &tree) {
	fs::path root(dir);
	std::error_code ec;
	fs::create_directories(root, ec);
	if (ec) {
		fail(ErrorCode::IoFailure, "cannot create model directory '" + dir + "': " + ec.message());
	}
	csv::write_file((root / "tree.txt").string(), tree.serialize());
	return root;
}

nlohmann::json manifest_base(const char *kind, const LabelTree &tree, const Standardizer &s,
                             const TrainConfig &config, const std::vector<NodeId> &unreachable) {
	nlohmann::json m;
	m["format"] = "benthic-model-bundle";
	m["version"] = kBundleVersion;
	m["kind"] = kind;
	m["tree"] = "tree.txt";
	m["feature_dim"] = s.dim();
	m["standardization"] = standardizer_json(s);
	m["train_config"] = to_json(config);
	m["unreachable_leaves"] = names(tree, unreachable);
	return m;
}

NodeId node_ref(const LabelTree &tree, const nlohmann::json &j) {
	const auto id = j.get<NodeId>();
	if (id >= tree.size()) {
		fail(ErrorCode::MalformedModel, "manifest refers to node " + std::to_string(id) + " outside the tree");
	}
	return id;
}

Mlp load_network(const fs::path &path, std::size_t inputs, std::size_t outputs) {
	Mlp net = mlp_from_json(read_json(path));
	if (net.input_dim() != inputs || net.output_dim() != outputs) {
		fail(ErrorCode::MalformedModel, "'" + path.string() + "' has shape " + std::to_string(net.input_dim()) + "->" +
		                                    std::to_string(net.output_dim()) + ", expected " + std::to_string(inputs) +
		                                    "->" + std::to_string(outputs));
	}
	return net;
}

} // namespace

void save_model(const std::string &dir, const HierModel &model) {
	const fs::path root = prepare(dir, model.tree);
	nlohmann::json m =
	    manifest_base("hierarchical", model.tree, model.standardizer, model.config, model.unreachable_leaves);
	m["classifiers"] = nlohmann::json::array();
	for (const auto &[node, clf] : model.classifiers) {
		const std::string file = "node_" + std::to_string(node) + ".json";
		write_network(root / file, clf.net, names(model.tree, clf.children), model.config);
		m["classifiers"].push_back(
		    {{"node", node}, {"name", model.tree.name(node)}, {"children", clf.children}, {"file", file}});
	}
	m["pass_through"] = nlohmann::json::array();
	for (const auto &[node, child] : model.pass_through) {
		m["pass_through"].push_back({{"node", node}, {"child", child}});
	}
	write_json(root / "manifest.json", m);
}

void save_model(const std::string &dir, const FlatModel &model) {
	const fs::path root = prepare(dir, model.tree);
	nlohmann::json m = manifest_base("flat", model.tree, model.standardizer, model.config, model.unreachable_leaves);
	m["leaf_order"] = model.leaf_order;
	m["file"] = "flat.json";
	write_network(root / "flat.json", model.net, names(model.tree, model.leaf_order), model.config);
	write_json(root / "manifest.json", m);
}

AnyModel load_model(const std::string &dir) {
	const fs::path root(dir);
	const nlohmann::json m = read_json(root / "manifest.json");
	try {
		if (m.at("format") != "benthic-model-bundle") {
			fail(ErrorCode::MalformedModel, "'" + dir + "' is not a model bundle");
		}
		if (m.at("version").get<int>() != kBundleVersion) {
			fail(ErrorCode::MalformedModel, "unsupported bundle version " + m.at("version").dump());
		}
		LabelTree tree = LabelTree::load((root / m.at("tree").get<std::string>()).string());
		const Standardizer s = standardizer_from_json(m.at("standardization"));
		const TrainConfig config = train_config_from_json(m.at("train_config"));
		std::vector<NodeId> unreachable;
		for (const auto &name : m.at("unreachable_leaves")) {
			unreachable.push_back(tree.leaf(name.get<std::string>()));
		}
		const std::string kind = m.at("kind");
		if (kind == "flat") {
			FlatModel model;
			for (const auto &id : m.at("leaf_order")) {
				const NodeId leaf = node_ref(tree, id);
				if (!tree.is_leaf(leaf)) {
					fail(ErrorCode::MalformedModel, "flat label order names an internal node");
				}
				model.leaf_order.push_back(leaf);
			}
			model.net = load_network(root / m.at("file").get<std::string>(), s.dim(), model.leaf_order.size());
			model.tree = std::move(tree);
			model.standardizer = s;
			model.config = config;
			model.unreachable_leaves = std::move(unreachable);
			return model;
		}
		if (kind != "hierarchical") {
			fail(ErrorCode::MalformedModel, "unknown model kind '" + kind + "'");
		}
		HierModel model;
		for (const auto &c : m.at("classifiers")) {
			const NodeId node = node_ref(tree, c.at("node"));
			NodeClassifier clf;
			for (const auto &child : c.at("children")) {
				const NodeId id = node_ref(tree, child);
				if (tree.node(id).parent != node) {
					fail(ErrorCode::MalformedModel, "classifier child is not a child of its node");
				}
				clf.children.push_back(id);
			}
			clf.net = load_network(root / c.at("file").get<std::string>(), s.dim(), clf.children.size());
			model.classifiers.emplace(node, std::move(clf));
		}
		for (const auto &p : m.at("pass_through")) {
			model.pass_through.emplace(node_ref(tree, p.at("node")), node_ref(tree, p.at("child")));
		}
		model.tree = std::move(tree);
		model.standardizer = s;
		model.config = config;
		model.unreachable_leaves = std::move(unreachable);
		return model;
	} catch (const nlohmann::json::exception &e) {
		fail(ErrorCode::MalformedModel, "manifest in '" + dir + "': " + e.what());
	}
}

} // namespace benthic
