#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "benthic/csv.hpp"
#include "benthic/experiment.hpp"
#include "benthic/synth.hpp"

using namespace benthic;

namespace {

auto has_code(ErrorCode c) {
	return Catch::Matchers::Predicate<Error>([c](const Error &e) { return e.code() == c; },
	                                         "error code " + std::string(to_string(c)));
}

struct Fixture {
	LabelTree tree;
	Dataset train;
	Dataset test;
};

const Fixture &fixture() {
	static const Fixture f = [] {
		SynthSpec s;
		s.tree = gen_tree({3, 3});
		s.level_spread = {3.0, 1.5};
		s.feature_dim = 12;
		s.total_samples = 900;
		s.alpha = 1.0;
		s.seed = 4;
		auto split = stratified_split(gen_samples(s), 0.25, 1);
		return Fixture{s.tree, split.train, split.test};
	}();
	return f;
}

CurveConfig small_config(std::vector<std::size_t> sizes, std::size_t repeats) {
	CurveConfig c;
	c.train_sizes = std::move(sizes);
	c.repeats = repeats;
	c.base_seed = 7;
	c.train_config.epochs = 8;
	c.train_config.batch_size = 32;
	return c;
}

std::string slurp(const std::filesystem::path &p) {
	std::ifstream in(p, std::ios::binary);
	std::ostringstream s;
	s << in.rdbuf();
	return s.str();
}

} // namespace

TEST_CASE("default size grid", "[experiment][grid]") {
	auto g = default_train_sizes(38725 * 9 / 10);
	REQUIRE(g.size() == 6);
	CHECK(g.front() == 250);
	CHECK(g.back() == 16000);
	CHECK(std::is_sorted(g.begin(), g.end()));
	auto small = default_train_sizes(1000);
	CHECK(small.back() == 1000);
	CHECK(std::adjacent_find(small.begin(), small.end()) == small.end());
}

TEST_CASE("single repeat gives zero std", "[experiment][curve]") {
	const auto &f = fixture();
	auto r = run_learning_curve(f.tree, f.train, f.test, small_config({100, 300}, 1));
	REQUIRE(r.points.size() == 2 * 2 * std::size(kCurveMetrics));
	for (const auto &p : r.points) {
		CHECK(p.std == 0.0);
		CHECK(p.repeats == 1);
		CHECK(p.mean >= 0.0);
		CHECK(p.mean <= 1.0);
	}
	CHECK(r.points.front().model == ModelKind::Flat);
	CHECK(r.points.front().train_size == 100);
	CHECK(r.points.front().metric == "accuracy");
	CHECK(r.points.back().model == ModelKind::Hierarchical);
	CHECK(r.points.back().train_size == 300);
	CHECK(r.points.back().metric == "h_f1");
}

TEST_CASE("paired design: both models see the same subsample", "[experiment][curve]") {
	const auto &f = fixture();
	auto cfg = small_config({50, 200}, 3);
	auto r = run_learning_curve(f.tree, f.train, f.test, cfg);
	REQUIRE(r.cells.size() == 6);
	for (const auto &c : r.cells) {
		CHECK(c.flat_digest == c.hier_digest);
		CHECK(c.flat_digest == subsample_train(f.train, c.train_size, c.subsample_seed).digest());
		CHECK(c.subsample_seed == cell_subsample_seed(cfg.base_seed, c.train_size, c.repeat));
		CHECK(c.train_seed == cell_train_seed(cfg.base_seed, c.train_size, c.repeat));
		CHECK(c.flat.size() == std::size(kCurveMetrics));
	}
	CHECK(r.cells[0].flat_digest != r.cells[1].flat_digest);
	CHECK(aggregate_cells(r.cells) == r.points);
}

TEST_CASE("aggregation uses population std", "[experiment][aggregate]") {
	std::vector<CurveCell> cells(2);
	for (std::size_t i = 0; i < 2; ++i) {
		cells[i].train_size = 10;
		cells[i].repeat = i;
		cells[i].flat.assign(std::size(kCurveMetrics), i == 0 ? 0.2 : 0.4);
		cells[i].hier.assign(std::size(kCurveMetrics), 0.5);
	}
	auto points = aggregate_cells(cells);
	REQUIRE(points.size() == 2 * std::size(kCurveMetrics));
	CHECK(points[0].mean == Catch::Approx(0.3));
	CHECK(points[0].std == Catch::Approx(0.1));
	CHECK(points.back().std == 0.0);
}

TEST_CASE("results do not depend on the number of jobs", "[experiment][determinism]") {
	const auto &f = fixture();
	auto one = small_config({80, 160}, 2);
	auto many = one;
	many.jobs = 3;
	auto a = run_learning_curve(f.tree, f.train, f.test, one);
	auto b = run_learning_curve(f.tree, f.train, f.test, many);
	CHECK(format_results(a.points) == format_results(b.points));
	CHECK(format_cells(a.cells) == format_cells(b.cells));
}

TEST_CASE("more data helps both models", "[experiment][trend]") {
	const auto &f = fixture();
	auto cfg = small_config({40, 600}, 2);
	cfg.train_config.epochs = 20;
	auto r = run_learning_curve(f.tree, f.train, f.test, cfg);
	for (ModelKind m : {ModelKind::Flat, ModelKind::Hierarchical}) {
		double small = -1, large = -1;
		for (const auto &p : r.points) {
			if (p.model == m && p.metric == "macro_f1") {
				(p.train_size == 40 ? small : large) = p.mean;
			}
		}
		CHECK(large >= small);
	}
}

TEST_CASE("curve errors", "[experiment][errors]") {
	const auto &f = fixture();
	CHECK_THROWS_MATCHES(run_learning_curve(f.tree, f.train, f.test, small_config({200, 100}, 1)), Error,
	                     has_code(ErrorCode::InvalidArgument));
	CHECK_THROWS_MATCHES(run_learning_curve(f.tree, f.train, f.test, small_config({f.train.size() + 1}, 1)), Error,
	                     has_code(ErrorCode::RequestTooLarge));
	CHECK_THROWS_MATCHES(run_learning_curve(f.tree, f.train, f.train, small_config({100}, 1)), Error,
	                     has_code(ErrorCode::OverlappingSets));
	CHECK_THROWS_AS(run_learning_curve(f.tree, f.train, f.test, small_config({100}, 0)), Error);
}

TEST_CASE("results table golden bytes and round-trip", "[experiment][io]") {
	std::vector<CurvePoint> points = {
	    {ModelKind::Flat, 250, "macro_f1", 0.5, 0.25, 5},
	    {ModelKind::Hierarchical, 250, "macro_f1", 0.1, 0.0, 5},
	    {ModelKind::Hierarchical, 1000, "h_f1", 2.0 / 3.0, 1e-17, 5},
	};
	const std::string golden = "model,train_size,metric,mean,std,repeats\n"
	                           "flat,250,macro_f1,0.5,0.25,5\n"
	                           "hierarchical,250,macro_f1,0.1,0,5\n"
	                           "hierarchical,1000,h_f1,0.6666666666666666,1e-17,5\n";
	CHECK(format_results(points) == golden);

	auto dir = std::filesystem::temp_directory_path() / "benthic_test_curve";
	std::filesystem::remove_all(dir);
	std::filesystem::create_directories(dir);
	const auto path = (dir / "results.csv").string();
	emit_results(points, path);
	CHECK(slurp(path) == golden);
	CHECK(parse_results(csv::read_lines(path), path) == points);
	CHECK(std::filesystem::exists(path + ".summary.txt"));
	emit_results(points, path);
	CHECK(slurp(path) == golden);

	emit_results(std::vector<CurvePoint>{}, path);
	CHECK(slurp(path) == "model,train_size,metric,mean,std,repeats\n");
	CHECK(parse_results(csv::read_lines(path), path).empty());

	CHECK_THROWS_AS(emit_results(points, (dir / "missing" / "x.csv").string()), Error);
	std::filesystem::remove_all(dir);
}

TEST_CASE("summary reports paired gains", "[experiment][io]") {
	const auto &f = fixture();
	auto r = run_learning_curve(f.tree, f.train, f.test, small_config({150}, 2));
	auto gain = paired_gain(r, 150, "macro_f1");
	CHECK(gain.repeats == 2);
	double expect = 0;
	for (const auto &c : r.cells) {
		expect += c.hier[1] - c.flat[1];
	}
	CHECK(gain.mean == Catch::Approx(expect / 2));
	auto text = format_summary(r);
	CHECK(text.find("macro_f1") != std::string::npos);
	CHECK(text.find("150") != std::string::npos);
}
