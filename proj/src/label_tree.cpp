#include "benthic/label_tree.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace benthic {

std::string_view to_string(ErrorCode code) {
	switch (code) {
	case ErrorCode::InvalidArgument:
		return "InvalidArgument";
	case ErrorCode::EmptyDocument:
		return "EmptyDocument";
	case ErrorCode::BadIndent:
		return "BadIndent";
	case ErrorCode::IndentJump:
		return "IndentJump";
	case ErrorCode::MultipleRoots:
		return "MultipleRoots";
	case ErrorCode::DuplicateLeafName:
		return "DuplicateLeafName";
	case ErrorCode::DuplicateSiblingName:
		return "DuplicateSiblingName";
	case ErrorCode::EmptyName:
		return "EmptyName";
	case ErrorCode::MalformedTree:
		return "MalformedTree";
	case ErrorCode::UnknownNode:
		return "UnknownNode";
	case ErrorCode::NotALeaf:
		return "NotALeaf";
	case ErrorCode::UnknownLabel:
		return "UnknownLabel";
	case ErrorCode::DimensionMismatch:
		return "DimensionMismatch";
	case ErrorCode::MalformedRow:
		return "MalformedRow";
	case ErrorCode::RequestTooLarge:
		return "RequestTooLarge";
	case ErrorCode::InvalidDimension:
		return "InvalidDimension";
	case ErrorCode::LabelOutOfRange:
		return "LabelOutOfRange";
	case ErrorCode::Diverged:
		return "Diverged";
	case ErrorCode::LabelNotInTree:
		return "LabelNotInTree";
	case ErrorCode::EmptyTrainingSet:
		return "EmptyTrainingSet";
	case ErrorCode::NoTrainedPath:
		return "NoTrainedPath";
	case ErrorCode::LengthMismatch:
		return "LengthMismatch";
	case ErrorCode::EmptyAnnotationSet:
		return "EmptyAnnotationSet";
	case ErrorCode::DuplicateKey:
		return "DuplicateKey";
	case ErrorCode::KeyMismatch:
		return "KeyMismatch";
	case ErrorCode::OverlappingSets:
		return "OverlappingSets";
	case ErrorCode::MalformedModel:
		return "MalformedModel";
	case ErrorCode::IoFailure:
		return "IoFailure";
	}
	return "Unknown";
}

namespace {

struct Row {
	std::string name;
	int depth;
	std::size_t line;
};

std::string trim(std::string_view s) {
	const auto first = s.find_first_not_of(" \t\r");
	if (first == std::string_view::npos) {
		return {};
	}
	const auto last = s.find_last_not_of(" \t\r");
	return std::string(s.substr(first, last - first + 1));
}

// Splits the document into node rows, reporting indentation problems. Rows
// with a structural problem are repaired (depth clamped) so later checks
// still run.
std::vector<Row> tokenize(std::string_view text, std::vector<TreeIssue> &issues) {
	std::vector<Row> rows;
	std::size_t line_no = 0;
	std::size_t pos = 0;
	int prev_depth = -1;
	bool have_root = false;
	while (pos <= text.size()) {
		auto end = text.find('\n', pos);
		if (end == std::string_view::npos) {
			end = text.size();
		}
		const std::string_view line = text.substr(pos, end - pos);
		pos = end + 1;
		++line_no;

		const std::string content = trim(line);
		if (content.empty() || content.front() == '#') {
			if (end == text.size()) {
				break;
			}
			continue;
		}
		std::size_t indent = 0;
		while (indent < line.size() && (line[indent] == ' ' || line[indent] == '\t')) {
			if (line[indent] == '\t') {
				issues.push_back({ErrorCode::BadIndent, line_no, "tab character in indentation"});
			}
			++indent;
		}
		if (indent % 2 != 0) {
			issues.push_back({ErrorCode::BadIndent, line_no,
			                  "indentation of " + std::to_string(indent) + " spaces is not a multiple of 2"});
		}
		int depth = static_cast<int>(indent / 2);

		if (depth == 0) {
			if (have_root) {
				issues.push_back({ErrorCode::MultipleRoots, line_no, "second depth-0 node '" + content + "'"});
				if (end == text.size()) {
					break;
				}
				continue;
			}
			have_root = true;
		} else if (!have_root) {
			issues.push_back({ErrorCode::IndentJump, line_no, "first node '" + content + "' is indented"});
			depth = 0;
			have_root = true;
		} else if (depth > prev_depth + 1) {
			issues.push_back({ErrorCode::IndentJump, line_no,
			                  "node '" + content + "' at depth " + std::to_string(depth) +
			                      " under a node of depth " + std::to_string(prev_depth)});
			depth = prev_depth + 1;
		}
		rows.push_back({content, depth, line_no});
		prev_depth = depth;
		if (end == text.size()) {
			break;
		}
	}
	if (rows.empty()) {
		issues.push_back({ErrorCode::EmptyDocument, 0, "tree document contains no nodes"});
	}
	return rows;
}

struct Built {
	std::vector<TreeNode> nodes;
};

// Links pre-ordered rows into nodes and checks naming constraints.
Built link(const std::vector<Row> &rows, std::vector<TreeIssue> &issues) {
	Built out;
	std::vector<NodeId> stack;
	for (const auto &row : rows) {
		TreeNode node;
		node.id = static_cast<NodeId>(out.nodes.size());
		node.name = row.name;
		node.depth = row.depth;
		if (row.name.empty()) {
			issues.push_back({ErrorCode::EmptyName, row.line, "node with an empty name"});
		}
		stack.resize(static_cast<std::size_t>(row.depth));
		if (row.depth > 0) {
			const NodeId parent = stack.back();
			node.parent = parent;
			for (NodeId sibling : out.nodes[parent].children) {
				if (out.nodes[sibling].name == row.name) {
					issues.push_back({ErrorCode::DuplicateSiblingName, row.line,
					                  "'" + row.name + "' appears twice under '" + out.nodes[parent].name + "'"});
					break;
				}
			}
			out.nodes[parent].children.push_back(node.id);
		}
		stack.push_back(node.id);
		out.nodes.push_back(std::move(node));
	}

	std::unordered_map<std::string, NodeId> seen;
	for (const auto &node : out.nodes) {
		if (!node.is_leaf()) {
			continue;
		}
		auto [it, inserted] = seen.emplace(node.name, node.id);
		if (!inserted && out.nodes[it->second].parent != node.parent) {
			issues.push_back({ErrorCode::DuplicateLeafName, rows[node.id].line,
			                  "leaf name '" + node.name + "' is used by more than one leaf"});
		}
	}
	std::stable_sort(issues.begin(), issues.end(),
	                 [](const TreeIssue &a, const TreeIssue &b) { return a.line < b.line; });
	return out;
}

void flatten_json(const nlohmann::json &doc, int depth, std::vector<std::pair<std::string, int>> &rows) {
	if (!doc.is_object() || !doc.contains("name") || !doc["name"].is_string()) {
		fail(ErrorCode::MalformedTree, "tree JSON node must be an object with a string 'name'");
	}
	rows.emplace_back(doc["name"].get<std::string>(), depth);
	if (doc.contains("children")) {
		const auto &children = doc["children"];
		if (!children.is_array()) {
			fail(ErrorCode::MalformedTree, "'children' of '" + rows.back().first + "' must be an array");
		}
		for (const auto &child : children) {
			flatten_json(child, depth + 1, rows);
		}
	}
}

} // namespace

std::vector<TreeIssue> check_tree_document(std::string_view text) {
	std::vector<TreeIssue> issues;
	const auto rows = tokenize(text, issues);
	if (!rows.empty()) {
		link(rows, issues);
	}
	std::stable_sort(issues.begin(), issues.end(),
	                 [](const TreeIssue &a, const TreeIssue &b) { return a.line < b.line; });
	return issues;
}

LabelTree LabelTree::parse(std::string_view text) {
	std::vector<TreeIssue> issues;
	const auto rows = tokenize(text, issues);
	Built built;
	if (!rows.empty()) {
		built = link(rows, issues);
	}
	if (!issues.empty()) {
		const auto &first = issues.front();
		fail(first.code, "line " + std::to_string(first.line) + ": " + first.message);
	}
	return assemble(std::move(built.nodes));
}

LabelTree LabelTree::from_rows(std::span<const std::pair<std::string, int>> plain) {
	std::vector<Row> rows;
	rows.reserve(plain.size());
	std::size_t line = 0;
	for (const auto &[name, depth] : plain) {
		++line;
		if (depth < 0 || (rows.empty() && depth != 0) || (!rows.empty() && depth == 0) ||
		    (!rows.empty() && depth > rows.back().depth + 1)) {
			fail(ErrorCode::MalformedTree, "row " + std::to_string(line) + " has an invalid depth");
		}
		rows.push_back({name, depth, line});
	}
	if (rows.empty()) {
		fail(ErrorCode::EmptyDocument, "tree has no nodes");
	}
	std::vector<TreeIssue> issues;
	Built built = link(rows, issues);
	if (!issues.empty()) {
		const auto &first = issues.front();
		fail(first.code, "node " + std::to_string(first.line) + ": " + first.message);
	}
	return assemble(std::move(built.nodes));
}

LabelTree LabelTree::assemble(std::vector<TreeNode> nodes) {
	LabelTree tree;
	tree.nodes_ = std::move(nodes);
	for (const auto &node : tree.nodes_) {
		tree.max_depth_ = std::max(tree.max_depth_, node.depth);
		if (node.is_leaf()) {
			tree.leaves_.push_back(node.id);
			tree.leaf_index_.emplace(node.name, node.id);
		}
	}
	return tree;
}

LabelTree LabelTree::parse_json(const nlohmann::json &doc) {
	std::vector<std::pair<std::string, int>> rows;
	flatten_json(doc, 0, rows);
	return from_rows(rows);
}

LabelTree LabelTree::load(const std::string &path) {
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		fail(ErrorCode::IoFailure, "cannot open tree file '" + path + "'");
	}
	std::ostringstream buf;
	buf << in.rdbuf();
	const std::string text = buf.str();
	const auto first = text.find_first_not_of(" \t\r\n");
	if (first != std::string::npos && text[first] == '{') {
		nlohmann::json doc;
		try {
			doc = nlohmann::json::parse(text);
		} catch (const nlohmann::json::parse_error &e) {
			fail(ErrorCode::MalformedTree, "tree JSON in '" + path + "': " + e.what());
		}
		return parse_json(doc);
	}
	return parse(text);
}

std::string LabelTree::serialize() const {
	std::string out;
	for (const auto &node : nodes_) {
		out.append(static_cast<std::size_t>(node.depth) * 2, ' ');
		out += node.name;
		out += '\n';
	}
	return out;
}

nlohmann::json LabelTree::to_json() const {
	auto build = [this](auto &self, NodeId id) -> nlohmann::json {
		nlohmann::json j;
		j["name"] = nodes_[id].name;
		if (!nodes_[id].children.empty()) {
			j["children"] = nlohmann::json::array();
			for (NodeId c : nodes_[id].children) {
				j["children"].push_back(self(self, c));
			}
		}
		return j;
	};
	return build(build, root());
}

void LabelTree::check_id(NodeId id) const {
	if (id >= nodes_.size()) {
		fail(ErrorCode::UnknownNode, "node id " + std::to_string(id) + " is not in the tree");
	}
}

const TreeNode &LabelTree::node(NodeId id) const {
	check_id(id);
	return nodes_[id];
}

std::optional<NodeId> LabelTree::find_leaf(std::string_view name) const {
	auto it = leaf_index_.find(std::string(name));
	if (it == leaf_index_.end()) {
		return std::nullopt;
	}
	return it->second;
}

NodeId LabelTree::leaf(std::string_view name) const {
	if (auto id = find_leaf(name)) {
		return *id;
	}
	fail(ErrorCode::UnknownLabel, "'" + std::string(name) + "' is not a leaf of the tree");
}

std::vector<NodeId> LabelTree::ancestors(NodeId id) const {
	check_id(id);
	std::vector<NodeId> path(static_cast<std::size_t>(nodes_[id].depth));
	for (NodeId cur = id; nodes_[cur].parent; cur = *nodes_[cur].parent) {
		path[static_cast<std::size_t>(nodes_[cur].depth) - 1] = cur;
	}
	return path;
}

NodeId LabelTree::ancestor_at_level(NodeId leaf, int level) const {
	check_id(leaf);
	if (!nodes_[leaf].is_leaf()) {
		fail(ErrorCode::NotALeaf, "'" + nodes_[leaf].name + "' is not a leaf");
	}
	if (level < 1) {
		fail(ErrorCode::InvalidArgument, "level must be at least 1");
	}
	NodeId cur = leaf;
	while (nodes_[cur].depth > level) {
		cur = *nodes_[cur].parent;
	}
	return cur;
}

int LabelTree::lca_depth(NodeId a, NodeId b) const {
	check_id(a);
	check_id(b);
	while (nodes_[a].depth > nodes_[b].depth) {
		a = *nodes_[a].parent;
	}
	while (nodes_[b].depth > nodes_[a].depth) {
		b = *nodes_[b].parent;
	}
	while (a != b) {
		a = *nodes_[a].parent;
		b = *nodes_[b].parent;
	}
	return nodes_[a].depth;
}

bool LabelTree::in_subtree(NodeId node, NodeId ancestor) const {
	check_id(node);
	check_id(ancestor);
	while (nodes_[node].depth > nodes_[ancestor].depth) {
		node = *nodes_[node].parent;
	}
	return node == ancestor;
}

NodeId LabelTree::child_towards(NodeId ancestor, NodeId node) const {
	check_id(node);
	check_id(ancestor);
	if (nodes_[node].depth <= nodes_[ancestor].depth) {
		fail(ErrorCode::InvalidArgument, "'" + nodes_[node].name + "' is not below '" + nodes_[ancestor].name + "'");
	}
	while (nodes_[node].depth > nodes_[ancestor].depth + 1) {
		node = *nodes_[node].parent;
	}
	if (nodes_[node].parent != ancestor) {
		fail(ErrorCode::InvalidArgument, "'" + nodes_[node].name + "' is not below '" + nodes_[ancestor].name + "'");
	}
	return node;
}

} // namespace benthic
