#include "benthic/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>

#include "benthic/csv.hpp"
#include "benthic/metrics.hpp"
#include "benthic/models.hpp"
#include "benthic/parallel.hpp"
#include "benthic/rng.hpp"

namespace benthic {

namespace {

constexpr std::size_t kMetricCount = std::size(kCurveMetrics);

std::vector<double> score(const LabelTree &tree, const std::vector<std::string> &truth,
                          const std::vector<std::string> &pred) {
	const MetricsReport r = evaluate(tree, truth, pred);
	return {r.flat.accuracy, r.flat.macro_f1,  r.flat.micro_f1, r.flat.weighted_f1,
	        r.hier.precision, r.hier.recall, r.hier.f1};
}

void mean_std(const std::vector<double> &xs, double &mean, double &sd) {
	mean = 0.0;
	for (double x : xs) {
		mean += x;
	}
	mean /= static_cast<double>(xs.size());
	double var = 0.0;
	for (double x : xs) {
		var += (x - mean) * (x - mean);
	}
	sd = std::sqrt(var / static_cast<double>(xs.size()));
}

std::string hex64(std::uint64_t v) {
	char buf[20];
	std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
	return buf;
}

} // namespace

std::string_view to_string(ModelKind kind) {
	return kind == ModelKind::Flat ? "flat" : "hierarchical";
}

std::vector<std::size_t> default_train_sizes(std::size_t train_size, std::size_t count) {
	const std::size_t hi = std::min<std::size_t>(train_size, 16000);
	const std::size_t lo = std::min<std::size_t>(250, hi);
	std::vector<std::size_t> sizes;
	if (count <= 1 || lo == hi) {
		return {hi};
	}
	for (std::size_t k = 0; k < count; ++k) {
		const double t = static_cast<double>(k) / static_cast<double>(count - 1);
		const double v = std::exp(std::log(static_cast<double>(lo)) * (1.0 - t) + std::log(static_cast<double>(hi)) * t);
		const auto s = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(v)), lo, hi);
		if (sizes.empty() || s > sizes.back()) {
			sizes.push_back(s);
		}
	}
	return sizes;
}

std::uint64_t cell_subsample_seed(std::uint64_t base, std::size_t size, std::size_t repeat) {
	return derive_seed(base, 0x73756273ULL, size, repeat);
}

std::uint64_t cell_train_seed(std::uint64_t base, std::size_t size, std::size_t repeat) {
	return derive_seed(base, 0x74726169ULL, size, repeat);
}

CurveResult run_learning_curve(const LabelTree &tree, const Dataset &train, const Dataset &test,
                               const CurveConfig &config) {
	if (config.repeats == 0) {
		fail(ErrorCode::InvalidArgument, "repeats must be at least 1");
	}
	if (config.train_sizes.empty()) {
		fail(ErrorCode::InvalidArgument, "no training sizes given");
	}
	for (std::size_t k = 0; k < config.train_sizes.size(); ++k) {
		const std::size_t s = config.train_sizes[k];
		if (s == 0 || (k > 0 && s <= config.train_sizes[k - 1])) {
			fail(ErrorCode::InvalidArgument, "training sizes must be positive and strictly ascending");
		}
		if (s > train.size()) {
			fail(ErrorCode::RequestTooLarge,
			     "training size " + std::to_string(s) + " exceeds the " + std::to_string(train.size()) + " available");
		}
	}
	if (test.empty()) {
		fail(ErrorCode::InvalidArgument, "test set is empty");
	}
	config.train_config.validate();
	std::set<std::pair<std::string, std::uint64_t>> train_keys;
	for (const auto &s : train.samples()) {
		train_keys.emplace(s.image_id, s.point_id);
	}
	for (const auto &s : test.samples()) {
		if (train_keys.count({s.image_id, s.point_id})) {
			fail(ErrorCode::OverlappingSets, "test point " + std::to_string(s.point_id) + " of image '" + s.image_id +
			                                     "' also appears in the training set");
		}
	}
	train.validate_labels(tree);
	test.validate_labels(tree);

	std::vector<std::string> truth;
	truth.reserve(test.size());
	for (const auto &s : test.samples()) {
		truth.push_back(s.label);
	}

	CurveResult result;
	for (std::size_t size : config.train_sizes) {
		for (std::size_t r = 0; r < config.repeats; ++r) {
			CurveCell cell;
			cell.train_size = size;
			cell.repeat = r;
			cell.subsample_seed = cell_subsample_seed(config.base_seed, size, r);
			cell.train_seed = cell_train_seed(config.base_seed, size, r);
			result.cells.push_back(std::move(cell));
		}
	}
	parallel_for(result.cells.size(), config.jobs, [&](std::size_t k) {
		CurveCell &cell = result.cells[k];
		const Dataset subset = subsample_train(train, cell.train_size, cell.subsample_seed);
		TrainConfig tc = config.train_config;
		tc.seed = cell.train_seed;

		cell.flat_digest = subset.digest();
		const FlatModel flat = fit_flat(tree, subset, tc);
		cell.flat = score(tree, truth, predict_flat(flat, test));

		cell.hier_digest = subset.digest();
		const HierModel hier = fit_lcpn(tree, subset, tc);
		std::vector<std::string> hier_pred;
		for (const auto &path : predict_topdown(hier, test)) {
			hier_pred.push_back(path.leaf);
		}
		cell.hier = score(tree, truth, hier_pred);
	});
	result.points = aggregate_cells(result.cells);
	return result;
}

std::vector<CurvePoint> aggregate_cells(const std::vector<CurveCell> &cells) {
	std::set<std::size_t> sizes;
	for (const auto &c : cells) {
		sizes.insert(c.train_size);
	}
	std::vector<CurvePoint> points;
	for (ModelKind kind : {ModelKind::Flat, ModelKind::Hierarchical}) {
		for (std::size_t size : sizes) {
			for (std::size_t m = 0; m < kMetricCount; ++m) {
				// Repeat order is fixed so sums are bit-stable.
				std::vector<std::pair<std::size_t, double>> values;
				for (const auto &c : cells) {
					if (c.train_size == size) {
						values.emplace_back(c.repeat, kind == ModelKind::Flat ? c.flat.at(m) : c.hier.at(m));
					}
				}
				std::sort(values.begin(), values.end());
				std::vector<double> xs;
				for (const auto &v : values) {
					xs.push_back(v.second);
				}
				CurvePoint p;
				p.model = kind;
				p.train_size = size;
				p.metric = kCurveMetrics[m];
				p.repeats = xs.size();
				mean_std(xs, p.mean, p.std);
				points.push_back(std::move(p));
			}
		}
	}
	return points;
}

std::string format_results(const std::vector<CurvePoint> &points) {
	std::string out = "model,train_size,metric,mean,std,repeats\n";
	for (const auto &p : points) {
		out += std::string(to_string(p.model)) + "," + std::to_string(p.train_size) + "," + p.metric + "," +
		       csv::format_double(p.mean) + "," + csv::format_double(p.std) + "," + std::to_string(p.repeats) + "\n";
	}
	return out;
}

std::vector<CurvePoint> parse_results(const std::vector<std::string> &lines, const std::string &source) {
	if (lines.empty() || lines[0] != "model,train_size,metric,mean,std,repeats") {
		fail(ErrorCode::MalformedRow, source + ": not a learning-curve results table");
	}
	std::vector<CurvePoint> points;
	std::vector<std::string> f;
	for (std::size_t li = 1; li < lines.size(); ++li) {
		if (lines[li].empty()) {
			continue;
		}
		const std::string where = source + ":" + std::to_string(li + 1);
		if (!csv::split_record(lines[li], f) || f.size() != 6) {
			fail(ErrorCode::MalformedRow, where + ": expected 6 columns");
		}
		CurvePoint p;
		if (f[0] == "flat") {
			p.model = ModelKind::Flat;
		} else if (f[0] == "hierarchical") {
			p.model = ModelKind::Hierarchical;
		} else {
			fail(ErrorCode::MalformedRow, where + ": unknown model '" + f[0] + "'");
		}
		auto parse_size = [&](const std::string &s, std::size_t &out) {
			auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
			if (ec != std::errc() || ptr != s.data() + s.size()) {
				fail(ErrorCode::MalformedRow, where + ": '" + s + "' is not an integer");
			}
		};
		parse_size(f[1], p.train_size);
		p.metric = f[2];
		if (!csv::parse_double(f[3], p.mean) || !csv::parse_double(f[4], p.std)) {
			fail(ErrorCode::MalformedRow, where + ": mean/std are not numbers");
		}
		parse_size(f[5], p.repeats);
		points.push_back(std::move(p));
	}
	return points;
}

PairedGain paired_gain(const CurveResult &result, std::size_t train_size, const std::string &metric) {
	const auto it = std::find(std::begin(kCurveMetrics), std::end(kCurveMetrics), metric);
	if (it == std::end(kCurveMetrics)) {
		fail(ErrorCode::InvalidArgument, "unknown metric '" + metric + "'");
	}
	const auto m = static_cast<std::size_t>(it - std::begin(kCurveMetrics));
	std::vector<double> gains;
	for (const auto &c : result.cells) {
		if (c.train_size == train_size) {
			gains.push_back(c.hier.at(m) - c.flat.at(m));
		}
	}
	PairedGain g;
	g.repeats = gains.size();
	if (!gains.empty()) {
		mean_std(gains, g.mean, g.std);
	}
	return g;
}

namespace {

std::string summary_table(const std::vector<CurvePoint> &points, const CurveResult *result) {
	std::string out;
	char line[256];
	std::snprintf(line, sizeof(line), "%-13s %10s %-12s %10s %10s %8s\n", "model", "train_size", "metric", "mean", "std",
	              "repeats");
	out += line;
	for (const auto &p : points) {
		std::snprintf(line, sizeof(line), "%-13s %10zu %-12s %10.4f %10.4f %8zu\n", std::string(to_string(p.model)).c_str(),
		              p.train_size, p.metric.c_str(), p.mean, p.std, p.repeats);
		out += line;
	}
	if (result && !result->cells.empty()) {
		out += "\npaired gain (hierarchical - flat)\n";
		std::snprintf(line, sizeof(line), "%10s %-12s %10s %10s\n", "train_size", "metric", "gain", "std");
		out += line;
		std::set<std::size_t> sizes;
		for (const auto &c : result->cells) {
			sizes.insert(c.train_size);
		}
		for (std::size_t size : sizes) {
			for (const char *metric : {"macro_f1", "h_f1"}) {
				const PairedGain g = paired_gain(*result, size, metric);
				std::snprintf(line, sizeof(line), "%10zu %-12s %+10.4f %10.4f\n", size, metric, g.mean, g.std);
				out += line;
			}
		}
	}
	return out;
}

} // namespace

std::string format_summary(const CurveResult &result) {
	return summary_table(result.points, &result);
}

std::string format_cells(const std::vector<CurveCell> &cells) {
	std::string out = "train_size,repeat,subsample_seed,train_seed,flat_digest,hier_digest";
	for (const char *m : kCurveMetrics) {
		out += std::string(",flat_") + m;
	}
	for (const char *m : kCurveMetrics) {
		out += std::string(",hier_") + m;
	}
	out += '\n';
	for (const auto &c : cells) {
		out += std::to_string(c.train_size) + "," + std::to_string(c.repeat) + "," + std::to_string(c.subsample_seed) +
		       "," + std::to_string(c.train_seed) + "," + hex64(c.flat_digest) + "," + hex64(c.hier_digest);
		for (double v : c.flat) {
			out += "," + csv::format_double(v);
		}
		for (double v : c.hier) {
			out += "," + csv::format_double(v);
		}
		out += '\n';
	}
	return out;
}

void emit_results(const std::vector<CurvePoint> &points, const std::string &path) {
	csv::write_file(path, format_results(points));
	csv::write_file(path + ".summary.txt", summary_table(points, nullptr));
}

void emit_results(const CurveResult &result, const std::string &path) {
	csv::write_file(path, format_results(result.points));
	csv::write_file(path + ".summary.txt", format_summary(result));
}

} // namespace benthic
