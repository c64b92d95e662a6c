#include "benthic/metrics.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

#include "benthic/csv.hpp"

namespace benthic {

namespace {

double ratio(double num, double den) {
	return den > 0.0 ? num / den : 0.0;
}

// Equal inputs return that value unchanged so F1 of a single-class-per-sample
// problem equals accuracy bit for bit.
double harmonic(double p, double r) {
	if (p == r) {
		return p;
	}
	return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

void check_lengths(const std::vector<std::string> &truth, const std::vector<std::string> &pred) {
	if (truth.size() != pred.size()) {
		fail(ErrorCode::LengthMismatch, std::to_string(truth.size()) + " true labels but " +
		                                    std::to_string(pred.size()) + " predictions");
	}
}

std::vector<NodeId> resolve(const LabelTree &tree, const std::vector<std::string> &labels) {
	std::vector<NodeId> out;
	out.reserve(labels.size());
	for (const auto &l : labels) {
		out.push_back(tree.leaf(l));
	}
	return out;
}

} // namespace

std::vector<std::string> observed_labels(const std::vector<std::string> &truth, const std::vector<std::string> &pred) {
	std::set<std::string> s(truth.begin(), truth.end());
	s.insert(pred.begin(), pred.end());
	return {s.begin(), s.end()};
}

FlatReport flat_report(const std::vector<std::string> &truth, const std::vector<std::string> &pred,
                       const std::vector<std::string> &label_set) {
	check_lengths(truth, pred);
	if (truth.empty()) {
		fail(ErrorCode::InvalidArgument, "cannot score an empty evaluation set");
	}
	std::unordered_map<std::string, std::size_t> index;
	for (std::size_t k = 0; k < label_set.size(); ++k) {
		index.emplace(label_set[k], k);
	}
	auto lookup = [&](const std::string &label) {
		auto it = index.find(label);
		if (it == index.end()) {
			fail(ErrorCode::UnknownLabel, "label '" + label + "' is not in the label set");
		}
		return it->second;
	};
	std::vector<double> tp(label_set.size(), 0.0), fp(label_set.size(), 0.0), fn(label_set.size(), 0.0);
	std::size_t correct = 0;
	for (std::size_t i = 0; i < truth.size(); ++i) {
		const auto t = lookup(truth[i]);
		const auto p = lookup(pred[i]);
		if (t == p) {
			tp[t] += 1.0;
			++correct;
		} else {
			fn[t] += 1.0;
			fp[p] += 1.0;
		}
	}

	FlatReport r;
	double sum_tp = 0.0, sum_fp = 0.0, sum_fn = 0.0, weighted = 0.0, macro = 0.0;
	for (std::size_t k = 0; k < label_set.size(); ++k) {
		ClassScores c;
		c.label = label_set[k];
		c.precision = ratio(tp[k], tp[k] + fp[k]);
		c.recall = ratio(tp[k], tp[k] + fn[k]);
		c.f1 = harmonic(c.precision, c.recall);
		c.support = static_cast<std::size_t>(tp[k] + fn[k]);
		c.zero_support = tp[k] + fn[k] + fp[k] == 0.0;
		macro += c.f1;
		weighted += c.f1 * static_cast<double>(c.support);
		sum_tp += tp[k];
		sum_fp += fp[k];
		sum_fn += fn[k];
		r.per_class.push_back(std::move(c));
	}
	const auto n = static_cast<double>(truth.size());
	r.macro_f1 = label_set.empty() ? 0.0 : macro / static_cast<double>(label_set.size());
	r.weighted_f1 = weighted / n;
	r.micro_f1 = harmonic(ratio(sum_tp, sum_tp + sum_fp), ratio(sum_tp, sum_tp + sum_fn));
	r.accuracy = static_cast<double>(correct) / n;
	return r;
}

HierScores hier_report(const LabelTree &tree, const std::vector<std::string> &truth,
                       const std::vector<std::string> &pred, HierAveraging averaging) {
	check_lengths(truth, pred);
	const auto t = resolve(tree, truth);
	const auto p = resolve(tree, pred);
	HierScores s;
	if (t.empty()) {
		return s;
	}
	// Root-excluded ancestor sets are root paths, so |P n T| is the depth of
	// the lowest common ancestor and |P|, |T| are the leaf depths.
	if (averaging == HierAveraging::Pooled) {
		double overlap = 0.0, pred_size = 0.0, true_size = 0.0;
		for (std::size_t i = 0; i < t.size(); ++i) {
			overlap += tree.lca_depth(t[i], p[i]);
			pred_size += tree.depth(p[i]);
			true_size += tree.depth(t[i]);
		}
		s.precision = ratio(overlap, pred_size);
		s.recall = ratio(overlap, true_size);
	} else {
		double sp = 0.0, sr = 0.0;
		for (std::size_t i = 0; i < t.size(); ++i) {
			const double overlap = tree.lca_depth(t[i], p[i]);
			sp += ratio(overlap, tree.depth(p[i]));
			sr += ratio(overlap, tree.depth(t[i]));
		}
		s.precision = sp / static_cast<double>(t.size());
		s.recall = sr / static_cast<double>(t.size());
	}
	s.f1 = harmonic(s.precision, s.recall);
	return s;
}

std::map<int, std::size_t> severity_histogram(const LabelTree &tree, const std::vector<std::string> &truth,
                                              const std::vector<std::string> &pred) {
	check_lengths(truth, pred);
	const auto t = resolve(tree, truth);
	const auto p = resolve(tree, pred);
	std::map<int, std::size_t> hist;
	for (std::size_t i = 0; i < t.size(); ++i) {
		if (t[i] != p[i]) {
			++hist[tree.lca_depth(t[i], p[i])];
		}
	}
	return hist;
}

MetricsReport evaluate(const LabelTree &tree, const std::vector<std::string> &truth,
                       const std::vector<std::string> &pred, HierAveraging averaging) {
	MetricsReport r;
	r.samples = truth.size();
	r.hier = hier_report(tree, truth, pred, averaging);
	r.severity = severity_histogram(tree, truth, pred);
	r.flat = flat_report(truth, pred, observed_labels(truth, pred));
	return r;
}

nlohmann::json to_json(const MetricsReport &r) {
	nlohmann::json j;
	j["samples"] = r.samples;
	j["flat"] = {{"accuracy", r.flat.accuracy},
	             {"macro_f1", r.flat.macro_f1},
	             {"micro_f1", r.flat.micro_f1},
	             {"weighted_f1", r.flat.weighted_f1}};
	j["flat"]["per_class"] = nlohmann::json::array();
	for (const auto &c : r.flat.per_class) {
		j["flat"]["per_class"].push_back({{"label", c.label},
		                                  {"precision", c.precision},
		                                  {"recall", c.recall},
		                                  {"f1", c.f1},
		                                  {"support", c.support},
		                                  {"zero_support", c.zero_support}});
	}
	j["hierarchical"] = {{"h_precision", r.hier.precision}, {"h_recall", r.hier.recall}, {"h_f1", r.hier.f1}};
	nlohmann::json sev = nlohmann::json::object();
	for (const auto &[depth, count] : r.severity) {
		sev[std::to_string(depth)] = count;
	}
	j["severity_histogram"] = sev;
	return j;
}

std::string format_key_values(const MetricsReport &r) {
	std::string out;
	auto line = [&](const std::string &key, const std::string &value) { out += key + "\t" + value + "\n"; };
	auto num = [](double v) { return csv::format_double(v); };
	line("samples", std::to_string(r.samples));
	line("flat.accuracy", num(r.flat.accuracy));
	line("flat.macro_f1", num(r.flat.macro_f1));
	line("flat.micro_f1", num(r.flat.micro_f1));
	line("flat.weighted_f1", num(r.flat.weighted_f1));
	line("hier.h_precision", num(r.hier.precision));
	line("hier.h_recall", num(r.hier.recall));
	line("hier.h_f1", num(r.hier.f1));
	for (const auto &[depth, count] : r.severity) {
		line("severity.lca_depth_" + std::to_string(depth), std::to_string(count));
	}
	for (const auto &c : r.flat.per_class) {
		const std::string k = "class." + c.label;
		line(k + ".precision", num(c.precision));
		line(k + ".recall", num(c.recall));
		line(k + ".f1", num(c.f1));
		line(k + ".support", std::to_string(c.support));
	}
	return out;
}

} // namespace benthic
