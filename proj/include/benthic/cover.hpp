#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "benthic/label_tree.hpp"

namespace benthic {

struct Annotation {
	std::string image_id;
	std::uint64_t point_id = 0;
	std::string label;
};

// Point annotations, true or predicted. (image_id, point_id) keys are unique.
class AnnotationSet {
public:
	AnnotationSet() = default;
	/// Throws DuplicateKey on a repeated (image_id, point_id).
	explicit AnnotationSet(std::vector<Annotation> records, std::size_t points_per_image = 25);

	const std::vector<Annotation> &records() const {
		return records_;
	}
	std::size_t size() const {
		return records_.size();
	}
	bool empty() const {
		return records_.empty();
	}
	// Informational only; proportions always use the actual point counts.
	std::size_t points_per_image() const {
		return points_per_image_;
	}

private:
	std::vector<Annotation> records_;
	std::size_t points_per_image_ = 25;
};

/// Reads any table whose first three columns are image_id, point_id and a
/// label column (`label` or `predicted_label`); further columns are ignored.
AnnotationSet load_annotations(const std::string &path);
AnnotationSet parse_annotations(const std::vector<std::string> &lines, const std::string &source = "<memory>");

struct CategoryCover {
	NodeId node = 0;
	std::string name;
	std::size_t count = 0;
	// Share of all points (pooled over images).
	double proportion = 0.0;
	// Mean over images of the per-image share.
	double image_mean = 0.0;
};

struct CoverReport {
	int level = 1;
	std::size_t n_points = 0;
	// Categories present at this level, in tree document order.
	std::vector<CategoryCover> categories;
	// image_id -> category node -> share of that image's points.
	std::map<std::string, std::map<NodeId, double>> per_image;

	/// Pooled proportion for a category node, 0 when absent.
	double proportion(NodeId node) const;
};

/// Maps each point to its ancestor at `level` (clamped at the leaf) and
/// reports relative frequencies, pooled and per image.
CoverReport cover_at_level(const LabelTree &tree, const AnnotationSet &annotations, int level);

struct CategoryError {
	NodeId node = 0;
	std::string name;
	double truth = 0.0;
	double predicted = 0.0;
	double abs_error = 0.0;
};

struct CoverError {
	int level = 1;
	// Union of categories seen in either set, in tree document order.
	std::vector<CategoryError> categories;
	// Sum of absolute differences (L1 distance between the cover vectors).
	double total_abs_error = 0.0;
	// total_abs_error divided by the number of categories listed.
	double mean_abs_error = 0.0;
};

/// Pooled cover of truth vs prediction at `level`. Both sets must hold the
/// same (image_id, point_id) keys.
CoverError cover_error(const LabelTree &tree, const AnnotationSet &truth, const AnnotationSet &predicted, int level);

/// Table with columns category,count,proportion,image_mean.
std::string format_cover(const CoverReport &report);
/// Table with columns category,truth,predicted,abs_error plus summary rows.
std::string format_cover_error(const CoverError &error);

} // namespace benthic
