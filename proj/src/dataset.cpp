#include "benthic/dataset.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>

#include "benthic/csv.hpp"
#include "benthic/rng.hpp"

namespace benthic {

Dataset::Dataset(std::vector<Sample> samples, std::size_t feature_dim)
    : samples_(std::move(samples)), feature_dim_(feature_dim) {
	if (feature_dim_ == 0) {
		fail(ErrorCode::InvalidDimension, "feature dimension must be positive");
	}
	for (std::size_t i = 0; i < samples_.size(); ++i) {
		if (samples_[i].features.size() != feature_dim_) {
			fail(ErrorCode::DimensionMismatch, "sample " + std::to_string(i) + " has " +
			                                       std::to_string(samples_[i].features.size()) +
			                                       " features, expected " + std::to_string(feature_dim_));
		}
		++histogram_[samples_[i].label];
	}
}

std::vector<std::pair<std::string, std::size_t>> Dataset::histogram_by_count() const {
	std::vector<std::pair<std::string, std::size_t>> out(histogram_.begin(), histogram_.end());
	std::stable_sort(out.begin(), out.end(), [](const auto &a, const auto &b) { return a.second > b.second; });
	return out;
}

Dataset Dataset::select(const std::vector<std::size_t> &indices) const {
	std::vector<Sample> picked;
	picked.reserve(indices.size());
	for (std::size_t i : indices) {
		picked.push_back(samples_.at(i));
	}
	return Dataset(std::move(picked), feature_dim_);
}

std::uint64_t Dataset::digest() const {
	std::uint64_t h = fnv1a("benthic-dataset");
	for (const auto &s : samples_) {
		h = fnv1a(s.image_id, h);
		h = fnv1a("\x1f", h);
		h = fnv1a(std::to_string(s.point_id), h);
		h = fnv1a("\x1f", h);
		h = fnv1a(s.label, h);
		for (double f : s.features) {
			const auto bits = std::bit_cast<std::uint64_t>(f);
			h = fnv1a(std::string_view(reinterpret_cast<const char *>(&bits), sizeof(bits)), h);
		}
		h = fnv1a("\x1e", h);
	}
	return h;
}

void Dataset::validate_labels(const LabelTree &tree) const {
	for (std::size_t i = 0; i < samples_.size(); ++i) {
		if (!tree.find_leaf(samples_[i].label)) {
			fail(ErrorCode::UnknownLabel, "sample " + std::to_string(i) + " (image '" + samples_[i].image_id +
			                                  "', point " + std::to_string(samples_[i].point_id) + "): label '" +
			                                  samples_[i].label + "' is not a leaf of the tree");
		}
	}
}

Dataset parse_dataset(const std::vector<std::string> &lines, const LabelTree *tree, const std::string &source) {
	std::size_t header_at = 0;
	while (header_at < lines.size() && lines[header_at].empty()) {
		++header_at;
	}
	if (header_at == lines.size()) {
		fail(ErrorCode::MalformedRow, source + ": missing header line");
	}
	std::vector<std::string> fields;
	if (!csv::split_record(lines[header_at], fields) || fields.size() < 3 || fields[0] != "image_id" ||
	    fields[1] != "point_id" || fields[2] != "label") {
		fail(ErrorCode::MalformedRow, source + ": header must start with image_id,point_id,label");
	}
	const std::size_t dim = fields.size() - 3;
	if (dim == 0) {
		fail(ErrorCode::InvalidDimension, source + ": no feature columns (annotation-only file)");
	}

	std::vector<Sample> samples;
	for (std::size_t li = header_at + 1; li < lines.size(); ++li) {
		if (lines[li].empty()) {
			continue;
		}
		const std::string where = source + ":" + std::to_string(li + 1);
		if (!csv::split_record(lines[li], fields)) {
			fail(ErrorCode::MalformedRow, where + ": unterminated quote");
		}
		if (fields.size() != dim + 3) {
			fail(ErrorCode::DimensionMismatch,
			     where + ": expected " + std::to_string(dim + 3) + " columns, found " + std::to_string(fields.size()));
		}
		Sample s;
		s.image_id = fields[0];
		const auto &pid = fields[1];
		auto [ptr, ec] = std::from_chars(pid.data(), pid.data() + pid.size(), s.point_id);
		if (ec != std::errc() || ptr != pid.data() + pid.size()) {
			fail(ErrorCode::MalformedRow, where + ": point_id '" + pid + "' is not a non-negative integer");
		}
		s.label = fields[2];
		if (tree && !tree->find_leaf(s.label)) {
			fail(ErrorCode::UnknownLabel, where + ": label '" + s.label + "' is not a leaf of the tree");
		}
		s.features.resize(dim);
		for (std::size_t j = 0; j < dim; ++j) {
			if (!csv::parse_double(fields[j + 3], s.features[j]) || !std::isfinite(s.features[j])) {
				fail(ErrorCode::MalformedRow, where + ": feature f" + std::to_string(j) + " = '" + fields[j + 3] +
				                                  "' is not a finite number");
			}
		}
		samples.push_back(std::move(s));
	}
	return Dataset(std::move(samples), dim);
}

Dataset load_dataset(const std::string &path, const LabelTree *tree) {
	return parse_dataset(csv::read_lines(path), tree, path);
}

std::string format_dataset(const Dataset &data) {
	std::string out = "image_id,point_id,label";
	for (std::size_t j = 0; j < data.feature_dim(); ++j) {
		out += ",f" + std::to_string(j);
	}
	out += '\n';
	for (const auto &s : data.samples()) {
		out += csv::escape(s.image_id);
		out += ',';
		out += std::to_string(s.point_id);
		out += ',';
		out += csv::escape(s.label);
		for (double f : s.features) {
			out += ',';
			out += csv::format_double(f);
		}
		out += '\n';
	}
	return out;
}

void write_dataset(const std::string &path, const Dataset &data) {
	csv::write_file(path, format_dataset(data));
}

std::size_t stratified_test_count(std::size_t n, double test_fraction) {
	if (n < 2) {
		return 0;
	}
	auto count = static_cast<std::size_t>(std::floor(static_cast<double>(n) * test_fraction + 0.5));
	return std::clamp<std::size_t>(count, 1, n - 1);
}

Split stratified_split(const Dataset &data, double test_fraction, std::uint64_t seed) {
	if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
		fail(ErrorCode::InvalidArgument, "test fraction must lie strictly between 0 and 1");
	}
	// Class membership in file order; std::map iterates classes by name.
	std::map<std::string, std::vector<std::size_t>> by_class;
	for (std::size_t i = 0; i < data.size(); ++i) {
		by_class[data[i].label].push_back(i);
	}
	std::vector<char> in_test(data.size(), 0);
	Rng rng(seed);
	for (auto &[label, members] : by_class) {
		const std::size_t k = stratified_test_count(members.size(), test_fraction);
		// Partial Fisher-Yates: the first k slots become the test draw.
		for (std::size_t i = 0; i < k; ++i) {
			const std::size_t j = i + rng.below(members.size() - i);
			std::swap(members[i], members[j]);
			in_test[members[i]] = 1;
		}
	}
	std::vector<std::size_t> train_idx;
	std::vector<std::size_t> test_idx;
	for (std::size_t i = 0; i < data.size(); ++i) {
		(in_test[i] ? test_idx : train_idx).push_back(i);
	}
	return {data.select(train_idx), data.select(test_idx)};
}

Dataset subsample_train(const Dataset &train, std::size_t n, std::uint64_t seed) {
	if (n == 0) {
		fail(ErrorCode::InvalidArgument, "subsample size must be positive");
	}
	if (n > train.size()) {
		fail(ErrorCode::RequestTooLarge,
		     "requested " + std::to_string(n) + " samples from a set of " + std::to_string(train.size()));
	}
	std::vector<std::size_t> idx(train.size());
	for (std::size_t i = 0; i < idx.size(); ++i) {
		idx[i] = i;
	}
	Rng rng(seed);
	for (std::size_t i = 0; i < n; ++i) {
		const std::size_t j = i + rng.below(idx.size() - i);
		std::swap(idx[i], idx[j]);
	}
	idx.resize(n);
	std::sort(idx.begin(), idx.end());
	return train.select(idx);
}

} // namespace benthic
