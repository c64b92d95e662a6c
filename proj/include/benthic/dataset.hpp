#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "benthic/label_tree.hpp"

namespace benthic {

// Default width of the backbone feature vectors the pipeline consumes.
inline constexpr std::size_t kDefaultFeatureDim = 1280;

struct Sample {
	std::string image_id;
	std::uint64_t point_id = 0;
	std::string label;
	std::vector<double> features;
};

/// Immutable collection of feature-vector samples sharing one dimension.
class Dataset {
public:
	Dataset() = default;
	/// Throws DimensionMismatch if any sample's width differs from feature_dim,
	/// InvalidDimension if feature_dim is zero.
	Dataset(std::vector<Sample> samples, std::size_t feature_dim);

	const std::vector<Sample> &samples() const {
		return samples_;
	}
	const Sample &operator[](std::size_t i) const {
		return samples_[i];
	}
	std::size_t size() const {
		return samples_.size();
	}
	bool empty() const {
		return samples_.empty();
	}
	std::size_t feature_dim() const {
		return feature_dim_;
	}
	const std::map<std::string, std::size_t> &label_histogram() const {
		return histogram_;
	}

	/// Classes sorted by descending count, ties by name.
	std::vector<std::pair<std::string, std::size_t>> histogram_by_count() const;

	/// Subset in the given index order.
	Dataset select(const std::vector<std::size_t> &indices) const;

	/// Order-sensitive 64-bit FNV-1a digest over ids, labels and feature bits.
	std::uint64_t digest() const;

	/// Throws UnknownLabel naming the first sample whose label is not a leaf.
	void validate_labels(const LabelTree &tree) const;

private:
	std::vector<Sample> samples_;
	std::size_t feature_dim_ = kDefaultFeatureDim;
	std::map<std::string, std::size_t> histogram_;
};

/// Reads `image_id,point_id,label,f0,...,f{d-1}`. When `tree` is given, every
/// label must be one of its leaves. Sample i of the file is sample i of the
/// result.
Dataset load_dataset(const std::string &path, const LabelTree *tree);
inline Dataset load_dataset(const std::string &path, const LabelTree &tree) {
	return load_dataset(path, &tree);
}

/// Same format as load_dataset, parsed from memory. `source` names the input
/// in error messages.
Dataset parse_dataset(const std::vector<std::string> &lines, const LabelTree *tree,
                      const std::string &source = "<memory>");

std::string format_dataset(const Dataset &data);
void write_dataset(const std::string &path, const Dataset &data);

struct Split {
	Dataset train;
	Dataset test;
};

/// Per-class stratified split. A class with n samples contributes
/// round_half_up(n * test_fraction) test samples, clamped to [1, n - 1] when
/// n >= 2; singleton classes stay in train. Both halves keep file order.
Split stratified_split(const Dataset &data, double test_fraction, std::uint64_t seed);

/// Test count a class of size n receives under stratified_split.
std::size_t stratified_test_count(std::size_t n, double test_fraction);

/// Uniform draw of n samples without replacement, kept in file order.
Dataset subsample_train(const Dataset &train, std::size_t n, std::uint64_t seed);

} // namespace benthic
