#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "benthic/dataset.hpp"
#include "benthic/label_tree.hpp"
#include "benthic/mlp.hpp"

namespace benthic {

enum class ModelKind { Flat, Hierarchical };

std::string_view to_string(ModelKind kind);

// Metric names recorded per cell, in output order.
inline constexpr const char *kCurveMetrics[] = {"accuracy", "macro_f1", "micro_f1", "weighted_f1",
                                                "h_precision", "h_recall", "h_f1"};

struct CurveConfig {
	std::vector<std::size_t> train_sizes;
	std::size_t repeats = 5;
	std::uint64_t base_seed = 0;
	TrainConfig train_config;
	// Concurrent (size, repeat) cells; 0 = hardware concurrency.
	std::size_t jobs = 1;
};

/// Default grid: `count` sizes log-spaced from 250 to min(train_size, 16000).
std::vector<std::size_t> default_train_sizes(std::size_t train_size, std::size_t count = 6);

struct CurvePoint {
	ModelKind model = ModelKind::Flat;
	std::size_t train_size = 0;
	std::string metric;
	double mean = 0.0;
	double std = 0.0;
	std::size_t repeats = 0;

	bool operator==(const CurvePoint &) const = default;
};

// One training draw, scored for both models.
struct CurveCell {
	std::size_t train_size = 0;
	std::size_t repeat = 0;
	std::uint64_t subsample_seed = 0;
	std::uint64_t train_seed = 0;
	// Digest of the exact set each model was fit on.
	std::uint64_t flat_digest = 0;
	std::uint64_t hier_digest = 0;
	// Values in kCurveMetrics order.
	std::vector<double> flat;
	std::vector<double> hier;
};

struct CurveResult {
	std::vector<CurvePoint> points;
	// Ordered by (train_size, repeat).
	std::vector<CurveCell> cells;
};

/// For each (size, repeat), draws one subsample, fits the flat and the
/// hierarchical model on it with the same training seed, and scores both on
/// `test`. Points aggregate the repeats with mean and population std.
CurveResult run_learning_curve(const LabelTree &tree, const Dataset &train, const Dataset &test,
                               const CurveConfig &config);

/// Seeds for one cell, derived from the base seed only.
std::uint64_t cell_subsample_seed(std::uint64_t base, std::size_t size, std::size_t repeat);
std::uint64_t cell_train_seed(std::uint64_t base, std::size_t size, std::size_t repeat);

/// Aggregates cells into points: flat then hierarchical, sizes ascending,
/// metrics in kCurveMetrics order.
std::vector<CurvePoint> aggregate_cells(const std::vector<CurveCell> &cells);

/// Results table `model,train_size,metric,mean,std,repeats`.
std::string format_results(const std::vector<CurvePoint> &points);
std::vector<CurvePoint> parse_results(const std::vector<std::string> &lines, const std::string &source = "<memory>");

/// Human-readable table with the paired hierarchical-minus-flat gain per size.
std::string format_summary(const CurveResult &result);

/// Per-cell log `train_size,repeat,subsample_seed,train_seed,flat_digest,hier_digest,...`.
std::string format_cells(const std::vector<CurveCell> &cells);

/// Writes the results table to `path` and the summary next to it
/// (`<path>.summary.txt`). Overwrites existing files.
void emit_results(const std::vector<CurvePoint> &points, const std::string &path);
void emit_results(const CurveResult &result, const std::string &path);

struct PairedGain {
	double mean = 0.0;
	double std = 0.0;
	std::size_t repeats = 0;
};

/// hier - flat for `metric` at `train_size`, paired by repeat.
PairedGain paired_gain(const CurveResult &result, std::size_t train_size, const std::string &metric);

} // namespace benthic
