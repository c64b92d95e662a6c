#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "benthic/error.hpp"

namespace benthic {

using NodeId = std::uint32_t;

struct TreeNode {
	NodeId id = 0;
	std::string name;
	std::optional<NodeId> parent;
	std::vector<NodeId> children;
	int depth = 0;

	bool is_leaf() const {
		return children.empty();
	}
};

// One violation found while checking a tree document. `line` is 1-based, or 0
// when the problem is not tied to a single line.
struct TreeIssue {
	ErrorCode code;
	std::size_t line;
	std::string message;
};

/// Rooted taxonomy of annotation categories.
///
/// Node ids are assigned in document (pre-)order, so the root is always id 0
/// and iterating ids visits parents before children. Leaf names are unique;
/// an internal node may reuse a leaf's name. The tree is immutable once built.
class LabelTree {
public:
	/// Parses the indented text format: one node per line, two spaces per
	/// level, a single depth-0 root. Blank lines and lines whose first
	/// non-space character is `#` are ignored. Throws Error on the first
	/// violation; use check_tree_document() to list all of them.
	static LabelTree parse(std::string_view text);

	/// JSON mirror: {"name": "...", "children": [ ... ]} nested objects.
	static LabelTree parse_json(const nlohmann::json &doc);

	/// Reads a file, choosing JSON when the first significant character is `{`.
	static LabelTree load(const std::string &path);

	/// Builds a tree from (name, depth) rows in pre-order. Used by the parsers
	/// and by synthetic generators.
	static LabelTree from_rows(std::span<const std::pair<std::string, int>> rows);

	/// Normalized text form: no comments, two-space indentation.
	std::string serialize() const;
	nlohmann::json to_json() const;

	NodeId root() const {
		return 0;
	}
	std::size_t size() const {
		return nodes_.size();
	}
	const TreeNode &node(NodeId id) const;
	const std::string &name(NodeId id) const {
		return node(id).name;
	}
	int depth(NodeId id) const {
		return node(id).depth;
	}
	bool is_leaf(NodeId id) const {
		return node(id).is_leaf();
	}
	std::span<const NodeId> children(NodeId id) const {
		return node(id).children;
	}
	std::span<const TreeNode> nodes() const {
		return nodes_;
	}

	/// Leaves in document order.
	std::span<const NodeId> leaves() const {
		return leaves_;
	}
	std::size_t leaf_count() const {
		return leaves_.size();
	}
	int max_depth() const {
		return max_depth_;
	}

	std::optional<NodeId> find_leaf(std::string_view name) const;
	/// Like find_leaf but throws UnknownLabel.
	NodeId leaf(std::string_view name) const;

	/// Path from the first non-root ancestor down to `id` inclusive; empty for
	/// the root.
	std::vector<NodeId> ancestors(NodeId id) const;

	/// Ancestor of `leaf` at depth `level`, or the leaf itself when it is
	/// shallower than `level`.
	NodeId ancestor_at_level(NodeId leaf, int level) const;

	/// Depth of the deepest common ancestor (root is depth 0).
	int lca_depth(NodeId a, NodeId b) const;

	/// True when `node` lies in the subtree rooted at `ancestor` (inclusive).
	bool in_subtree(NodeId node, NodeId ancestor) const;

	/// Child of `ancestor` on the path to `node`. Requires
	/// depth(node) > depth(ancestor) and in_subtree(node, ancestor).
	NodeId child_towards(NodeId ancestor, NodeId node) const;

private:
	static LabelTree assemble(std::vector<TreeNode> nodes);
	void check_id(NodeId id) const;

	std::vector<TreeNode> nodes_;
	std::vector<NodeId> leaves_;
	std::unordered_map<std::string, NodeId> leaf_index_;
	int max_depth_ = 0;
};

/// Lists every violation in an indented tree document without throwing.
std::vector<TreeIssue> check_tree_document(std::string_view text);

} // namespace benthic
