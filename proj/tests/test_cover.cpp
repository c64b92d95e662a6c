#include <catch_amalgamated.hpp>

#include <numeric>

#include "benthic/cover.hpp"
#include "oracles.hpp"

using namespace benthic;

namespace {

auto has_code(ErrorCode c) {
	return Catch::Matchers::Predicate<Error>([c](const Error &e) { return e.code() == c; },
	                                         "error code " + std::string(to_string(c)));
}

const char *kReef = R"(Root
  Corals
    Soft
      Palythoa spp.
      Zoanthus spp.
    Bleached
      Soft Coral Bleached
      Dead Coral
    Hard
      Favia
        Favia Gravida
        Favia Leptophylla
  Algae
    Turf
    Sargassum
  Substrates
    Sand
    Rubble
)";

AnnotationSet from_labels(const std::vector<std::string> &labels, std::size_t per_image = 25) {
	std::vector<Annotation> out;
	for (std::size_t i = 0; i < labels.size(); ++i) {
		out.push_back({"img" + std::to_string(i / per_image), i % per_image, labels[i]});
	}
	return AnnotationSet(out, per_image);
}

std::vector<std::string> labels_of(const AnnotationSet &a) {
	std::vector<std::string> out;
	for (const auto &r : a.records()) {
		out.push_back(r.label);
	}
	return out;
}

// Random annotations: a few images of uneven size, labels skewed toward a
// handful of leaves.
AnnotationSet random_annotations(Rng &rng, const LabelTree &t) {
	std::vector<Annotation> out;
	const std::size_t images = 1 + rng.below(6);
	for (std::size_t img = 0; img < images; ++img) {
		const std::size_t points = 1 + rng.below(25);
		for (std::size_t p = 0; p < points; ++p) {
			std::size_t leaf = rng.below(t.leaf_count());
			if (rng.uniform() < 0.5) {
				leaf = rng.below(std::min<std::size_t>(3, t.leaf_count()));
			}
			out.push_back({"i" + std::to_string(img), p, t.name(t.leaves()[leaf])});
		}
	}
	return AnnotationSet(out);
}

AnnotationSet relabel(Rng &rng, const LabelTree &t, const AnnotationSet &a, double rate) {
	auto records = a.records();
	for (auto &r : records) {
		if (rng.uniform() < rate) {
			r.label = t.name(t.leaves()[rng.below(t.leaf_count())]);
		}
	}
	return AnnotationSet(records);
}

} // namespace

TEST_CASE("cover of one image", "[cover]") {
	auto t = LabelTree::parse(kReef);
	std::vector<std::string> labels(25, "Turf");
	for (int i = 0; i < 5; ++i) {
		labels[static_cast<std::size_t>(i)] = "Sand";
	}
	auto r = cover_at_level(t, from_labels(labels), 1);
	CHECK(r.n_points == 25);
	REQUIRE(r.categories.size() == 2);
	CHECK(r.categories[0].name == "Algae");
	CHECK(r.categories[1].name == "Substrates");
	CHECK(r.categories[1].proportion == 0.2);
	CHECK(r.categories[1].count == 5);
	CHECK(r.per_image.at("img0").at(r.categories[1].node) == 0.2);
	CHECK(r.proportion(r.categories[0].node) == 0.8);
}

TEST_CASE("level deeper than every leaf equals leaf frequencies", "[cover]") {
	auto t = LabelTree::parse(kReef);
	auto a = from_labels({"Turf", "Favia Gravida", "Sand", "Turf"});
	auto r = cover_at_level(t, a, 9);
	REQUIRE(r.categories.size() == 3);
	for (const auto &c : r.categories) {
		CHECK(t.is_leaf(c.node));
	}
	CHECK(r.proportion(t.leaf("Turf")) == 0.5);
}

TEST_CASE("single leaf everywhere is a single category", "[cover]") {
	auto t = LabelTree::parse(kReef);
	auto a = from_labels(std::vector<std::string>(30, "Favia Gravida"));
	for (int level = 1; level <= 5; ++level) {
		auto r = cover_at_level(t, a, level);
		REQUIRE(r.categories.size() == 1);
		CHECK(r.categories[0].proportion == 1.0);
		CHECK(r.categories[0].image_mean == 1.0);
	}
}

TEST_CASE("per-image mean differs from pooled share", "[cover]") {
	auto t = LabelTree::parse(kReef);
	// image 0: 4 points all Sand, image 1: 1 point Turf
	AnnotationSet a({{"a", 0, "Sand"}, {"a", 1, "Sand"}, {"a", 2, "Sand"}, {"a", 3, "Sand"}, {"b", 0, "Turf"}});
	auto r = cover_at_level(t, a, 1);
	CHECK(r.proportion(t.leaf("Sand")) == 0.0);  // Sand is not a level-1 category
	const auto &subs = r.categories[1];
	CHECK(subs.name == "Substrates");
	CHECK(subs.proportion == 0.8);
	CHECK(subs.image_mean == 0.5);
}

TEST_CASE("flip within Corals vs flip to Algae", "[cover][error]") {
	auto t = LabelTree::parse(kReef);
	std::vector<std::string> truth(25, "Turf");
	for (int i = 0; i < 10; ++i) {
		truth[static_cast<std::size_t>(i)] = "Soft Coral Bleached";
	}
	auto within = truth;
	within[0] = "Palythoa spp.";
	auto across = truth;
	across[0] = "Turf";

	auto e1 = cover_error(t, from_labels(truth), from_labels(within), 1);
	CHECK(e1.total_abs_error == 0.0);
	auto leaf = cover_error(t, from_labels(truth), from_labels(within), 9);
	CHECK(leaf.total_abs_error == Catch::Approx(2.0 / 25.0).epsilon(1e-15));
	for (const auto &c : leaf.categories) {
		if (c.name == "Soft Coral Bleached" || c.name == "Palythoa spp.") {
			CHECK(c.abs_error == Catch::Approx(1.0 / 25.0).epsilon(1e-15));
		}
	}
	auto e2 = cover_error(t, from_labels(truth), from_labels(across), 1);
	CHECK(e2.total_abs_error > 0.0);
	CHECK(e2.total_abs_error == Catch::Approx(2.0 / 25.0).epsilon(1e-15));
}

TEST_CASE("identical predictions have zero error", "[cover][error]") {
	auto t = LabelTree::parse(kReef);
	Rng rng(1);
	auto a = random_annotations(rng, t);
	for (int level = 1; level <= 4; ++level) {
		auto e = cover_error(t, a, a, level);
		CHECK(e.total_abs_error == 0.0);
		CHECK(e.mean_abs_error == 0.0);
	}
}

TEST_CASE("cover errors", "[cover][errors]") {
	auto t = LabelTree::parse(kReef);
	CHECK_THROWS_MATCHES(cover_at_level(t, AnnotationSet(), 1), Error, has_code(ErrorCode::EmptyAnnotationSet));
	CHECK_THROWS_MATCHES(cover_at_level(t, from_labels({"Nope"}), 1), Error, has_code(ErrorCode::UnknownLabel));
	CHECK_THROWS_MATCHES(cover_at_level(t, from_labels({"Sand"}), 0), Error, has_code(ErrorCode::InvalidArgument));
	CHECK_THROWS_MATCHES(AnnotationSet({{"a", 0, "Sand"}, {"a", 0, "Turf"}}), Error,
	                     has_code(ErrorCode::DuplicateKey));
	AnnotationSet a({{"a", 0, "Sand"}, {"a", 1, "Turf"}});
	AnnotationSet b({{"a", 0, "Sand"}, {"a", 2, "Turf"}});
	CHECK_THROWS_MATCHES(cover_error(t, a, b, 1), Error, has_code(ErrorCode::KeyMismatch));
}

TEST_CASE("annotation tables", "[cover][io]") {
	auto a = parse_annotations({"image_id,point_id,predicted_label,path", "x,0,Sand,Substrates > Sand", "x,1,\"A, b\",q"});
	REQUIRE(a.size() == 2);
	CHECK(a.records()[1].label == "A, b");
	auto b = parse_annotations({"image_id,point_id,label,f0", "x,0,Sand,0.5"});
	CHECK(b.records()[0].label == "Sand");
	CHECK_THROWS_AS(parse_annotations({"id,point,label", "x,0,Sand"}), Error);
}

TEST_CASE("cover tables", "[cover][io]") {
	auto t = LabelTree::parse(kReef);
	auto truth = from_labels({"Sand", "Turf", "Turf", "Favia Gravida"});
	auto pred = from_labels({"Sand", "Sand", "Turf", "Favia Gravida"});
	auto table = format_cover(cover_at_level(t, truth, 1));
	CHECK(table.rfind("category,count,proportion,image_mean\n", 0) == 0);
	CHECK(table.find("Algae,2,0.5,0.5\n") != std::string::npos);
	auto err = format_cover_error(cover_error(t, truth, pred, 1));
	CHECK(err.rfind("category,truth,predicted,abs_error\n", 0) == 0);
	CHECK(err.find("#total_abs_error,0.5") != std::string::npos);
}

TEST_CASE("cover algebra on random fixtures", "[cover][property]") {
	Rng rng(2);
	for (int trial = 0; trial < 100; ++trial) {
		auto t = oracle::random_tree(rng, 25, 4);
		auto truth = random_annotations(rng, t);
		auto pred = relabel(rng, t, truth, 0.3);
		const int deepest = t.max_depth();
		for (int level = 1; level <= deepest + 1; ++level) {
			auto r = cover_at_level(t, truth, level);
			// sums to one, pooled and per image
			double sum = 0.0;
			for (const auto &c : r.categories) {
				sum += c.proportion;
			}
			REQUIRE(std::abs(sum - 1.0) <= 1e-12);
			for (const auto &[img, shares] : r.per_image) {
				double s = 0.0;
				for (const auto &[node, v] : shares) {
					s += v;
				}
				REQUIRE(std::abs(s - 1.0) <= 1e-12);
			}
			// matches the explicit ancestor-walk oracle
			auto ref = oracle::cover(t, labels_of(truth), level);
			REQUIRE(ref.size() == r.categories.size());
			for (const auto &c : r.categories) {
				REQUIRE(std::abs(ref.at(c.name) - c.proportion) <= 1e-12);
			}
			// level k category = sum of its level k+1 descendants
			auto finer = cover_at_level(t, truth, level + 1);
			for (const auto &c : r.categories) {
				double below = 0.0;
				for (const auto &f : finer.categories) {
					if (t.in_subtree(f.node, c.node)) {
						below += f.proportion;
					}
				}
				REQUIRE(std::abs(below - c.proportion) <= 1e-12);
			}
			// merging categories can only cancel errors
			auto coarse = cover_error(t, truth, pred, level);
			auto fine = cover_error(t, truth, pred, level + 1);
			REQUIRE(coarse.total_abs_error <= fine.total_abs_error + 1e-12);
			double signed_sum = 0.0;
			for (const auto &c : fine.categories) {
				REQUIRE(c.abs_error <= 1.0);
				signed_sum += c.truth - c.predicted;
			}
			REQUIRE(std::abs(signed_sum) <= 1e-12);
		}
	}
}

TEST_CASE("per-category mean error can rise under coarsening", "[cover][property]") {
	// Two level-2 categories cancel inside A while B keeps its error, so the
	// L1 total is unchanged but is spread over fewer categories.
	auto t = LabelTree::parse("Root\n  A\n    a1\n    a2\n  B\n    b1\n");
	auto truth = from_labels({"a1", "a1", "b1", "b1"});
	auto pred = from_labels({"a1", "a2", "b1", "b1"});
	auto l1 = cover_error(t, truth, pred, 1);
	auto l2 = cover_error(t, truth, pred, 2);
	CHECK(l1.total_abs_error == 0.0);
	CHECK(l2.total_abs_error == 0.5);
	auto truth2 = from_labels({"a1", "a1", "b1", "b1"});
	auto pred2 = from_labels({"a2", "a1", "b1", "a1"});
	auto c1 = cover_error(t, truth2, pred2, 1);
	auto c2 = cover_error(t, truth2, pred2, 2);
	CHECK(c1.total_abs_error <= c2.total_abs_error);
	CHECK(c1.mean_abs_error > c2.mean_abs_error);
}
