#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "benthic/label_tree.hpp"

namespace benthic {

struct ClassScores {
	std::string label;
	double precision = 0.0;
	double recall = 0.0;
	double f1 = 0.0;
	std::size_t support = 0;
	// True when the class occurs in neither the truth nor the predictions.
	bool zero_support = false;
};

struct FlatReport {
	// In label_set order.
	std::vector<ClassScores> per_class;
	double macro_f1 = 0.0;
	double micro_f1 = 0.0;
	double weighted_f1 = 0.0;
	double accuracy = 0.0;
};

/// One-vs-rest precision, recall and F1 per class (0/0 counts as 0), their
/// unweighted and support-weighted means over label_set, and the pooled
/// (micro) F1.
FlatReport flat_report(const std::vector<std::string> &truth, const std::vector<std::string> &pred,
                       const std::vector<std::string> &label_set);

/// Labels occurring in truth or predictions, sorted by name.
std::vector<std::string> observed_labels(const std::vector<std::string> &truth, const std::vector<std::string> &pred);

enum class HierAveraging {
	// Sum intersections and set sizes over all samples, then divide.
	Pooled,
	// Average per-sample precision and recall, then combine.
	PerSample,
};

struct HierScores {
	double precision = 0.0;
	double recall = 0.0;
	double f1 = 0.0;
};

/// Hierarchical precision/recall/F1 over root-excluded ancestor sets.
HierScores hier_report(const LabelTree &tree, const std::vector<std::string> &truth,
                       const std::vector<std::string> &pred, HierAveraging averaging = HierAveraging::Pooled);

/// Misclassification count keyed by the depth of the lowest common ancestor
/// of truth and prediction. Correct predictions are not counted.
std::map<int, std::size_t> severity_histogram(const LabelTree &tree, const std::vector<std::string> &truth,
                                              const std::vector<std::string> &pred);

struct MetricsReport {
	FlatReport flat;
	HierScores hier;
	std::map<int, std::size_t> severity;
	std::size_t samples = 0;
};

/// Everything above, with the flat label set taken from observed_labels().
MetricsReport evaluate(const LabelTree &tree, const std::vector<std::string> &truth,
                       const std::vector<std::string> &pred, HierAveraging averaging = HierAveraging::Pooled);

nlohmann::json to_json(const MetricsReport &report);

/// `key<TAB>value` lines, one metric per line, stable order.
std::string format_key_values(const MetricsReport &report);

} // namespace benthic
