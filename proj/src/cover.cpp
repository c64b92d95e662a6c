#include "benthic/cover.hpp"

#include <charconv>
#include <cmath>
#include <set>

#include "benthic/csv.hpp"

namespace benthic {

AnnotationSet::AnnotationSet(std::vector<Annotation> records, std::size_t points_per_image)
    : records_(std::move(records)), points_per_image_(points_per_image) {
	std::set<std::pair<std::string, std::uint64_t>> keys;
	for (const auto &r : records_) {
		if (!keys.emplace(r.image_id, r.point_id).second) {
			fail(ErrorCode::DuplicateKey,
			     "point " + std::to_string(r.point_id) + " of image '" + r.image_id + "' is annotated twice");
		}
	}
}

AnnotationSet parse_annotations(const std::vector<std::string> &lines, const std::string &source) {
	std::size_t header_at = 0;
	while (header_at < lines.size() && lines[header_at].empty()) {
		++header_at;
	}
	std::vector<std::string> fields;
	if (header_at == lines.size() || !csv::split_record(lines[header_at], fields) || fields.size() < 3 ||
	    fields[0] != "image_id" || fields[1] != "point_id" || (fields[2] != "label" && fields[2] != "predicted_label")) {
		fail(ErrorCode::MalformedRow, source + ": header must start with image_id,point_id,label");
	}
	const std::size_t columns = fields.size();
	std::vector<Annotation> records;
	for (std::size_t li = header_at + 1; li < lines.size(); ++li) {
		if (lines[li].empty()) {
			continue;
		}
		const std::string where = source + ":" + std::to_string(li + 1);
		if (!csv::split_record(lines[li], fields) || fields.size() != columns) {
			fail(ErrorCode::MalformedRow, where + ": expected " + std::to_string(columns) + " columns");
		}
		Annotation a;
		a.image_id = fields[0];
		auto [ptr, ec] = std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), a.point_id);
		if (ec != std::errc() || ptr != fields[1].data() + fields[1].size()) {
			fail(ErrorCode::MalformedRow, where + ": point_id '" + fields[1] + "' is not a non-negative integer");
		}
		a.label = fields[2];
		records.push_back(std::move(a));
	}
	return AnnotationSet(std::move(records));
}

AnnotationSet load_annotations(const std::string &path) {
	return parse_annotations(csv::read_lines(path), path);
}

double CoverReport::proportion(NodeId node) const {
	for (const auto &c : categories) {
		if (c.node == node) {
			return c.proportion;
		}
	}
	return 0.0;
}

CoverReport cover_at_level(const LabelTree &tree, const AnnotationSet &annotations, int level) {
	if (level < 1) {
		fail(ErrorCode::InvalidArgument, "cover level must be at least 1");
	}
	if (annotations.empty()) {
		fail(ErrorCode::EmptyAnnotationSet, "no annotations to aggregate");
	}
	std::vector<std::size_t> counts(tree.size(), 0);
	std::map<std::string, std::map<NodeId, std::size_t>> image_counts;
	for (const auto &r : annotations.records()) {
		const auto leaf = tree.find_leaf(r.label);
		if (!leaf) {
			fail(ErrorCode::UnknownLabel, "image '" + r.image_id + "', point " + std::to_string(r.point_id) + ": '" +
			                                  r.label + "' is not a leaf of the tree");
		}
		const NodeId cat = tree.ancestor_at_level(*leaf, level);
		++counts[cat];
		++image_counts[r.image_id][cat];
	}

	CoverReport report;
	report.level = level;
	report.n_points = annotations.size();
	for (const auto &[image, cats] : image_counts) {
		std::size_t total = 0;
		for (const auto &[cat, n] : cats) {
			total += n;
		}
		auto &shares = report.per_image[image];
		for (const auto &[cat, n] : cats) {
			shares[cat] = static_cast<double>(n) / static_cast<double>(total);
		}
	}
	const auto images = static_cast<double>(report.per_image.size());
	for (NodeId id = 0; id < tree.size(); ++id) {
		if (counts[id] == 0) {
			continue;
		}
		CategoryCover c;
		c.node = id;
		c.name = tree.name(id);
		c.count = counts[id];
		c.proportion = static_cast<double>(counts[id]) / static_cast<double>(report.n_points);
		double sum = 0.0;
		for (const auto &[image, shares] : report.per_image) {
			if (auto it = shares.find(id); it != shares.end()) {
				sum += it->second;
			}
		}
		c.image_mean = sum / images;
		report.categories.push_back(std::move(c));
	}
	return report;
}

CoverError cover_error(const LabelTree &tree, const AnnotationSet &truth, const AnnotationSet &predicted, int level) {
	std::set<std::pair<std::string, std::uint64_t>> truth_keys, pred_keys;
	for (const auto &r : truth.records()) {
		truth_keys.emplace(r.image_id, r.point_id);
	}
	for (const auto &r : predicted.records()) {
		pred_keys.emplace(r.image_id, r.point_id);
	}
	if (truth_keys != pred_keys) {
		fail(ErrorCode::KeyMismatch, "truth and prediction cover different (image_id, point_id) keys");
	}
	const CoverReport t = cover_at_level(tree, truth, level);
	const CoverReport p = cover_at_level(tree, predicted, level);

	CoverError out;
	out.level = level;
	std::vector<double> tv(tree.size(), 0.0), pv(tree.size(), 0.0);
	std::vector<char> present(tree.size(), 0);
	for (const auto &c : t.categories) {
		tv[c.node] = c.proportion;
		present[c.node] = 1;
	}
	for (const auto &c : p.categories) {
		pv[c.node] = c.proportion;
		present[c.node] = 1;
	}
	for (NodeId id = 0; id < tree.size(); ++id) {
		if (!present[id]) {
			continue;
		}
		CategoryError e{id, tree.name(id), tv[id], pv[id], std::fabs(tv[id] - pv[id])};
		out.total_abs_error += e.abs_error;
		out.categories.push_back(std::move(e));
	}
	out.mean_abs_error = out.total_abs_error / static_cast<double>(out.categories.size());
	return out;
}

std::string format_cover(const CoverReport &report) {
	std::string out = "category,count,proportion,image_mean\n";
	for (const auto &c : report.categories) {
		out += csv::escape(c.name) + "," + std::to_string(c.count) + "," + csv::format_double(c.proportion) + "," +
		       csv::format_double(c.image_mean) + "\n";
	}
	return out;
}

std::string format_cover_error(const CoverError &error) {
	std::string out = "category,truth,predicted,abs_error\n";
	for (const auto &c : error.categories) {
		out += csv::escape(c.name) + "," + csv::format_double(c.truth) + "," + csv::format_double(c.predicted) + "," +
		       csv::format_double(c.abs_error) + "\n";
	}
	out += "#total_abs_error," + csv::format_double(error.total_abs_error) + ",,\n";
	out += "#mean_abs_error," + csv::format_double(error.mean_abs_error) + ",,\n";
	return out;
}

} // namespace benthic
