#include "benthic/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "benthic/cover.hpp"
#include "benthic/csv.hpp"
#include "benthic/dataset.hpp"
#include "benthic/experiment.hpp"
#include "benthic/label_tree.hpp"
#include "benthic/metrics.hpp"
#include "benthic/models.hpp"
#include "benthic/rng.hpp"
#include "benthic/synth.hpp"

namespace benthic {

namespace {

namespace fs = std::filesystem;

// Training flags shared by `train` and `curve`. Unset flags fall back to the
// config file, then to TrainConfig defaults.
struct TrainFlags {
	std::string config_path;
	std::optional<double> lr;
	std::optional<std::size_t> batch;
	std::optional<std::size_t> epochs;
	std::optional<double> l2;
	std::optional<std::string> optimizer;
	bool class_weights = false;
	bool no_standardize = false;

	void attach(CLI::App &cmd) {
		cmd.add_option("--config", config_path, "JSON training config (default: $" + std::string(kConfigEnv) + ")");
		cmd.add_option("--lr", lr, "learning rate");
		cmd.add_option("--batch", batch, "mini-batch size");
		cmd.add_option("--epochs", epochs, "training epochs");
		cmd.add_option("--l2", l2, "L2 weight penalty");
		cmd.add_option("--optimizer", optimizer, "adam or sgd")->check(CLI::IsMember({"adam", "sgd"}));
		cmd.add_flag("--class-weights", class_weights, "inverse-frequency class weights in the loss");
		cmd.add_flag("--no-standardize", no_standardize, "skip per-dimension feature standardization");
	}

	TrainConfig resolve(std::uint64_t seed) const {
		std::string path = config_path;
		if (path.empty()) {
			if (const char *env = std::getenv(kConfigEnv)) {
				path = env;
			}
		}
		TrainConfig c;
		if (!path.empty()) {
			std::ifstream in(path);
			if (!in) {
				fail(ErrorCode::IoFailure, "cannot open training config '" + path + "'");
			}
			try {
				c = train_config_from_json(nlohmann::json::parse(in));
			} catch (const nlohmann::json::parse_error &e) {
				fail(ErrorCode::InvalidArgument, "training config '" + path + "': " + e.what());
			}
		}
		if (lr) {
			c.learning_rate = *lr;
		}
		if (batch) {
			c.batch_size = *batch;
		}
		if (epochs) {
			c.epochs = *epochs;
		}
		if (l2) {
			c.l2 = *l2;
		}
		if (optimizer) {
			c.optimizer = *optimizer == "sgd" ? Optimizer::Sgd : Optimizer::Adam;
		}
		if (class_weights) {
			c.class_weighting = true;
		}
		if (no_standardize) {
			c.standardize = false;
		}
		c.seed = seed;
		c.validate();
		return c;
	}
};

void write_or_print(const std::string &path, const std::string &content, std::ostream &out) {
	if (path.empty()) {
		out << content;
	} else {
		csv::write_file(path, content);
	}
}

std::string join_path(const LabelTree &tree, const std::vector<NodeId> &nodes) {
	std::string s;
	for (NodeId id : nodes) {
		if (!s.empty()) {
			s += " > ";
		}
		s += tree.name(id);
	}
	return s;
}

int cmd_tree_validate(const std::string &path, std::ostream &out) {
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		fail(ErrorCode::IoFailure, "cannot open tree file '" + path + "'");
	}
	std::ostringstream buf;
	buf << in.rdbuf();
	const std::string text = buf.str();
	const auto first = text.find_first_not_of(" \t\r\n");
	if (first != std::string::npos && text[first] == '{') {
		LabelTree::load(path);
		out << "OK\n";
		return 0;
	}
	const auto issues = check_tree_document(text);
	if (issues.empty()) {
		out << "OK\n";
		return 0;
	}
	for (const auto &issue : issues) {
		out << path << ":" << issue.line << ": " << to_string(issue.code) << ": " << issue.message << "\n";
	}
	return 1;
}

int cmd_data_stats(const std::string &path, const std::string &tree_path, std::ostream &out) {
	std::optional<LabelTree> tree;
	if (!tree_path.empty()) {
		tree = LabelTree::load(tree_path);
	}
	const Dataset data = load_dataset(path, tree ? &*tree : nullptr);
	out << "label,count,share\n";
	for (const auto &[label, count] : data.histogram_by_count()) {
		const double share = static_cast<double>(count) / static_cast<double>(data.size());
		char buf[32];
		std::snprintf(buf, sizeof(buf), "%.6f", share);
		out << csv::escape(label) << "," << count << "," << buf << "\n";
	}
	out << "# samples=" << data.size() << " classes=" << data.label_histogram().size()
	    << " feature_dim=" << data.feature_dim() << "\n";
	return 0;
}

std::vector<std::string> labels_of(const AnnotationSet &a) {
	std::vector<std::string> out;
	for (const auto &r : a.records()) {
		out.push_back(r.label);
	}
	return out;
}

// Predictions reordered to follow the truth file's keys.
std::vector<std::string> aligned_predictions(const AnnotationSet &truth, const AnnotationSet &pred) {
	std::map<std::pair<std::string, std::uint64_t>, std::string> by_key;
	for (const auto &r : pred.records()) {
		by_key.emplace(std::make_pair(r.image_id, r.point_id), r.label);
	}
	if (by_key.size() != truth.size()) {
		fail(ErrorCode::KeyMismatch, "prediction file has " + std::to_string(by_key.size()) + " points, truth has " +
		                                 std::to_string(truth.size()));
	}
	std::vector<std::string> out;
	for (const auto &r : truth.records()) {
		auto it = by_key.find({r.image_id, r.point_id});
		if (it == by_key.end()) {
			fail(ErrorCode::KeyMismatch,
			     "no prediction for point " + std::to_string(r.point_id) + " of image '" + r.image_id + "'");
		}
		out.push_back(it->second);
	}
	return out;
}

} // namespace

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
	CLI::App app{"Hierarchical vs flat classification of benthic point annotations", "benthic-hc"};
	app.require_subcommand(1);
	app.set_help_all_flag("--help-all", "show help for every subcommand");

	// tree
	auto *tree_cmd = app.add_subcommand("tree", "label tree utilities");
	tree_cmd->require_subcommand(1);
	std::string tree_file;
	auto *tree_validate = tree_cmd->add_subcommand("validate", "check a tree document; prints OK or violations");
	tree_validate->add_option("path", tree_file, "tree document")->required();
	auto *tree_normalize = tree_cmd->add_subcommand("normalize", "print the normalized tree document");
	tree_normalize->add_option("path", tree_file, "tree document")->required();
	bool tree_json = false;
	tree_normalize->add_flag("--json", tree_json, "emit the JSON mirror instead");

	// data
	auto *data_cmd = app.add_subcommand("data", "dataset utilities");
	data_cmd->require_subcommand(1);
	std::string data_file, data_tree;
	auto *data_stats = data_cmd->add_subcommand("stats", "class histogram sorted by count");
	data_stats->add_option("path", data_file, "dataset file")->required();
	data_stats->add_option("--tree", data_tree, "validate labels against this tree");
	auto *data_split = data_cmd->add_subcommand("split", "stratified train/test split");
	double split_fraction = 0.1;
	std::uint64_t split_seed = 0;
	std::string split_train_out, split_test_out;
	data_split->add_option("path", data_file, "dataset file")->required();
	data_split->add_option("--tree", data_tree, "label tree")->required();
	data_split->add_option("--test-fraction", split_fraction, "fraction of each class held out")
	    ->check(CLI::Range(0.0, 1.0));
	data_split->add_option("--seed", split_seed, "random seed");
	data_split->add_option("--train-out", split_train_out, "training output file")->required();
	data_split->add_option("--test-out", split_test_out, "test output file")->required();

	// synth
	auto *synth_cmd = app.add_subcommand("synth", "generate a synthetic hierarchical dataset");
	std::vector<std::size_t> synth_branching;
	std::vector<double> synth_spread;
	std::optional<double> synth_alpha;
	std::size_t synth_n = 5000, synth_dim = 64;
	double synth_noise = 1.0;
	std::uint64_t synth_seed = 0;
	std::string synth_out;
	std::optional<double> synth_split;
	synth_cmd->add_option("--branching", synth_branching, "children per level, e.g. 3,3,3")
	    ->required()
	    ->delimiter(',');
	synth_cmd->add_option("--alpha", synth_alpha, "power-law exponent for class sizes (default: balanced)");
	synth_cmd->add_option("--n", synth_n, "total samples");
	synth_cmd->add_option("--dim", synth_dim, "feature dimension");
	synth_cmd->add_option("--spread", synth_spread, "per-level mean displacement, e.g. 3,2,1")->delimiter(',');
	synth_cmd->add_option("--noise", synth_noise, "per-dimension noise standard deviation");
	synth_cmd->add_option("--seed", synth_seed, "random seed");
	synth_cmd->add_option("--split", synth_split, "also write a stratified train/test split with this test fraction");
	synth_cmd->add_option("--out", synth_out, "output directory")->required();

	// train
	auto *train_cmd = app.add_subcommand("train", "fit a flat or hierarchical model");
	std::string train_kind = "hier", train_tree, train_data, train_out;
	std::uint64_t train_seed = 0;
	std::size_t train_jobs = 1;
	TrainFlags train_flags;
	train_cmd->add_option("--model", train_kind, "hier or flat")->check(CLI::IsMember({"hier", "flat"}));
	train_cmd->add_option("--tree", train_tree, "label tree")->required();
	train_cmd->add_option("--data", train_data, "training dataset")->required();
	train_cmd->add_option("--out", train_out, "model bundle directory")->required();
	train_cmd->add_option("--seed", train_seed, "random seed");
	train_cmd->add_option("--jobs", train_jobs, "node classifiers trained concurrently (0 = all cores)");
	train_flags.attach(*train_cmd);

	// predict
	auto *predict_cmd = app.add_subcommand("predict", "predict leaf labels for a dataset");
	std::string predict_model, predict_data, predict_out;
	bool predict_path = false;
	predict_cmd->add_option("--model", predict_model, "model bundle directory")->required();
	predict_cmd->add_option("--data", predict_data, "dataset to label")->required();
	predict_cmd->add_option("--out", predict_out, "output file (default: stdout)");
	predict_cmd->add_flag("--emit-path", predict_path, "add the full top-down path column");

	// eval
	auto *eval_cmd = app.add_subcommand("eval", "flat and hierarchical metrics for a prediction file");
	std::string eval_tree, eval_truth, eval_pred, eval_json;
	bool eval_per_sample = false;
	eval_cmd->add_option("--tree", eval_tree, "label tree")->required();
	eval_cmd->add_option("--truth", eval_truth, "annotations or dataset with true labels")->required();
	eval_cmd->add_option("--pred", eval_pred, "prediction file")->required();
	eval_cmd->add_option("--json", eval_json, "also write the report as JSON");
	eval_cmd->add_flag("--per-sample", eval_per_sample, "average hierarchical scores per sample instead of pooling");

	// curve
	auto *curve_cmd = app.add_subcommand("curve", "learning curves for flat vs hierarchical models");
	std::string curve_tree, curve_train, curve_test, curve_out, curve_cells;
	std::vector<std::size_t> curve_sizes;
	std::size_t curve_repeats = 5, curve_jobs = 1;
	std::uint64_t curve_seed = 0;
	TrainFlags curve_flags;
	curve_cmd->add_option("--tree", curve_tree, "label tree")->required();
	curve_cmd->add_option("--train", curve_train, "training pool")->required();
	curve_cmd->add_option("--test", curve_test, "fixed test set")->required();
	curve_cmd->add_option("--sizes", curve_sizes, "training sizes, e.g. 250,500,1000 (default: log grid)")
	    ->delimiter(',');
	curve_cmd->add_option("--repeats", curve_repeats, "random draws per size")->check(CLI::PositiveNumber);
	curve_cmd->add_option("--seed", curve_seed, "base seed");
	curve_cmd->add_option("--jobs", curve_jobs, "cells run concurrently (0 = all cores)");
	curve_cmd->add_option("--out", curve_out, "results table")->required();
	curve_cmd->add_option("--cells", curve_cells, "also write the per-draw log here");
	curve_flags.attach(*curve_cmd);

	// cover
	auto *cover_cmd = app.add_subcommand("cover", "cover proportions at tree levels");
	std::string cover_tree, cover_truth, cover_pred, cover_out;
	std::vector<int> cover_levels;
	cover_cmd->add_option("--tree", cover_tree, "label tree")->required();
	cover_cmd->add_option("--level", cover_levels, "tree level(s), e.g. 1 or 1,2")
	    ->required()
	    ->delimiter(',')
	    ->check(CLI::PositiveNumber);
	cover_cmd->add_option("--truth", cover_truth, "true annotations")->required();
	cover_cmd->add_option("--pred", cover_pred, "predicted annotations; adds the error table");
	cover_cmd->add_option("--out", cover_out, "write one table per level into this directory");

	std::vector<const char *> argv;
	argv.reserve(args.size());
	for (const auto &a : args) {
		argv.push_back(a.c_str());
	}
	try {
		app.parse(static_cast<int>(argv.size()), argv.data());
	} catch (const CLI::CallForHelp &e) {
		return app.exit(e, out, err);
	} catch (const CLI::CallForAllHelp &e) {
		return app.exit(e, out, err);
	} catch (const CLI::ParseError &e) {
		err << "usage error: " << e.what() << "\n";
		const CLI::App *failing = &app;
		for (const CLI::App *sub = &app; sub;) {
			failing = sub;
			const auto subs = sub->get_subcommands();
			sub = subs.empty() ? nullptr : subs.front();
		}
		err << failing->help();
		return 2;
	}

	try {
		if (*tree_validate) {
			return cmd_tree_validate(tree_file, out);
		}
		if (*tree_normalize) {
			const LabelTree tree = LabelTree::load(tree_file);
			out << (tree_json ? tree.to_json().dump(2) + "\n" : tree.serialize());
			return 0;
		}
		if (*data_stats) {
			return cmd_data_stats(data_file, data_tree, out);
		}
		if (*data_split) {
			const LabelTree tree = LabelTree::load(data_tree);
			const Dataset data = load_dataset(data_file, tree);
			const Split split = stratified_split(data, split_fraction, split_seed);
			write_dataset(split_train_out, split.train);
			write_dataset(split_test_out, split.test);
			out << "train=" << split.train.size() << " test=" << split.test.size() << "\n";
			return 0;
		}
		if (*synth_cmd) {
			SynthSpec spec;
			spec.tree = gen_tree(synth_branching, synth_seed);
			spec.feature_dim = synth_dim;
			spec.level_spread = synth_spread;
			if (spec.level_spread.empty()) {
				for (std::size_t l = synth_branching.size(); l > 0; --l) {
					spec.level_spread.push_back(static_cast<double>(l));
				}
			}
			spec.noise_sigma = synth_noise;
			spec.total_samples = synth_n;
			spec.alpha = synth_alpha;
			spec.seed = synth_seed;
			for (const auto &w : spec.validate()) {
				err << "warning: " << w << "\n";
			}
			const Dataset data = gen_samples(spec);
			std::error_code ec;
			fs::create_directories(synth_out, ec);
			if (ec) {
				fail(ErrorCode::IoFailure, "cannot create '" + synth_out + "': " + ec.message());
			}
			const fs::path dir(synth_out);
			csv::write_file((dir / "tree.txt").string(), spec.tree.serialize());
			write_dataset((dir / "data.csv").string(), data);
			if (synth_split) {
				const Split split = stratified_split(data, *synth_split, derive_seed(synth_seed, 0x73706c74ULL));
				write_dataset((dir / "train.csv").string(), split.train);
				write_dataset((dir / "test.csv").string(), split.test);
			}
			out << "wrote " << data.size() << " samples over " << spec.tree.leaf_count() << " leaves to " << synth_out
			    << "\n";
			return 0;
		}
		if (*train_cmd) {
			const LabelTree tree = LabelTree::load(train_tree);
			const Dataset data = load_dataset(train_data, tree);
			const TrainConfig config = train_flags.resolve(train_seed);
			std::vector<std::string> warnings;
			if (train_kind == "flat") {
				const FlatModel model = fit_flat(tree, data, config);
				save_model(train_out, model);
				warnings = model.warnings;
			} else {
				const HierModel model = fit_lcpn(tree, data, config, train_jobs);
				save_model(train_out, model);
				warnings = model.warnings;
			}
			for (const auto &w : warnings) {
				err << "warning: " << w << "\n";
			}
			out << "trained " << train_kind << " model on " << data.size() << " samples -> " << train_out << "\n";
			return 0;
		}
		if (*predict_cmd) {
			const AnyModel model = load_model(predict_model);
			const Dataset data = load_dataset(predict_data, nullptr);
			std::string table = predict_path ? "image_id,point_id,predicted_label,path\n"
			                                 : "image_id,point_id,predicted_label\n";
			std::vector<std::string> leaves;
			std::vector<std::string> paths;
			if (const auto *hier = std::get_if<HierModel>(&model)) {
				for (const auto &p : predict_topdown(*hier, data)) {
					leaves.push_back(p.leaf);
					paths.push_back(join_path(hier->tree, p.nodes));
				}
			} else {
				const auto &flat = std::get<FlatModel>(model);
				leaves = predict_flat(flat, data);
				for (const auto &leaf : leaves) {
					paths.push_back(join_path(flat.tree, flat.tree.ancestors(flat.tree.leaf(leaf))));
				}
			}
			for (std::size_t i = 0; i < data.size(); ++i) {
				table += csv::escape(data[i].image_id) + "," + std::to_string(data[i].point_id) + "," +
				         csv::escape(leaves[i]);
				if (predict_path) {
					table += "," + csv::escape(paths[i]);
				}
				table += "\n";
			}
			write_or_print(predict_out, table, out);
			return 0;
		}
		if (*eval_cmd) {
			const LabelTree tree = LabelTree::load(eval_tree);
			const AnnotationSet truth = load_annotations(eval_truth);
			const AnnotationSet pred = load_annotations(eval_pred);
			const auto pred_labels = aligned_predictions(truth, pred);
			const MetricsReport report = evaluate(tree, labels_of(truth), pred_labels,
			                                      eval_per_sample ? HierAveraging::PerSample : HierAveraging::Pooled);
			char line[160];
			out << "[flat]\n";
			std::snprintf(line, sizeof(line), "accuracy     %.6f\nmacro_f1     %.6f\nmicro_f1     %.6f\nweighted_f1  %.6f\n",
			              report.flat.accuracy, report.flat.macro_f1, report.flat.micro_f1, report.flat.weighted_f1);
			out << line;
			out << "[hierarchical]\n";
			std::snprintf(line, sizeof(line), "h_precision  %.6f\nh_recall     %.6f\nh_f1         %.6f\n",
			              report.hier.precision, report.hier.recall, report.hier.f1);
			out << line;
			out << "[severity] lca_depth -> errors\n";
			for (const auto &[depth, count] : report.severity) {
				out << depth << "\t" << count << "\n";
			}
			out << "[table]\n" << format_key_values(report);
			if (!eval_json.empty()) {
				csv::write_file(eval_json, to_json(report).dump(2) + "\n");
			}
			return 0;
		}
		if (*curve_cmd) {
			const LabelTree tree = LabelTree::load(curve_tree);
			const Dataset train = load_dataset(curve_train, tree);
			const Dataset test = load_dataset(curve_test, tree);
			CurveConfig config;
			config.train_sizes = curve_sizes.empty() ? default_train_sizes(train.size()) : curve_sizes;
			config.repeats = curve_repeats;
			config.base_seed = curve_seed;
			config.train_config = curve_flags.resolve(curve_seed);
			config.jobs = curve_jobs;
			const CurveResult result = run_learning_curve(tree, train, test, config);
			emit_results(result, curve_out);
			if (!curve_cells.empty()) {
				csv::write_file(curve_cells, format_cells(result.cells));
			}
			out << format_summary(result);
			return 0;
		}
		if (*cover_cmd) {
			const LabelTree tree = LabelTree::load(cover_tree);
			const AnnotationSet truth = load_annotations(cover_truth);
			std::optional<AnnotationSet> pred;
			if (!cover_pred.empty()) {
				pred = load_annotations(cover_pred);
			}
			if (!cover_out.empty()) {
				std::error_code ec;
				fs::create_directories(cover_out, ec);
				if (ec) {
					fail(ErrorCode::IoFailure, "cannot create '" + cover_out + "': " + ec.message());
				}
			}
			for (int level : cover_levels) {
				std::string table = format_cover(cover_at_level(tree, truth, level));
				std::string errors;
				if (pred) {
					errors = format_cover_error(cover_error(tree, truth, *pred, level));
				}
				if (cover_out.empty()) {
					out << "[level " << level << "]\n" << table;
					if (pred) {
						out << "[level " << level << " error]\n" << errors;
					}
				} else {
					const fs::path dir(cover_out);
					csv::write_file((dir / ("cover_level_" + std::to_string(level) + ".csv")).string(), table);
					if (pred) {
						csv::write_file((dir / ("cover_error_level_" + std::to_string(level) + ".csv")).string(), errors);
					}
				}
			}
			return 0;
		}
	} catch (const Error &e) {
		err << "error[" << to_string(e.code()) << "]: " << e.what() << "\n";
		return 1;
	} catch (const std::exception &e) {
		err << "error[Unexpected]: " << e.what() << "\n";
		return 1;
	}
	return 2;
}

} // namespace benthic
