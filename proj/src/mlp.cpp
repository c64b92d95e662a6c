#include "benthic/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "benthic/rng.hpp"

namespace benthic {

void TrainConfig::validate() const {
	if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
		fail(ErrorCode::InvalidArgument, "learning rate must be positive");
	}
	if (batch_size == 0) {
		fail(ErrorCode::InvalidArgument, "batch size must be positive");
	}
	if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
		fail(ErrorCode::InvalidArgument, "beta1 and beta2 must lie strictly between 0 and 1");
	}
	if (!(epsilon > 0.0)) {
		fail(ErrorCode::InvalidArgument, "epsilon must be positive");
	}
	if (!(l2 >= 0.0) || !std::isfinite(l2)) {
		fail(ErrorCode::InvalidArgument, "l2 must be non-negative");
	}
}

nlohmann::json to_json(const TrainConfig &c) {
	return {
	    {"learning_rate", c.learning_rate},
	    {"batch_size", c.batch_size},
	    {"epochs", c.epochs},
	    {"seed", c.seed},
	    {"optimizer", c.optimizer == Optimizer::Adam ? "adam" : "sgd"},
	    {"beta1", c.beta1},
	    {"beta2", c.beta2},
	    {"epsilon", c.epsilon},
	    {"l2", c.l2},
	    {"class_weighting", c.class_weighting},
	    {"standardize", c.standardize},
	};
}

TrainConfig train_config_from_json(const nlohmann::json &j) {
	TrainConfig c;
	try {
		c.learning_rate = j.value("learning_rate", c.learning_rate);
		c.batch_size = j.value("batch_size", c.batch_size);
		c.epochs = j.value("epochs", c.epochs);
		c.seed = j.value("seed", c.seed);
		const std::string opt = j.value("optimizer", std::string("adam"));
		if (opt == "adam") {
			c.optimizer = Optimizer::Adam;
		} else if (opt == "sgd") {
			c.optimizer = Optimizer::Sgd;
		} else {
			fail(ErrorCode::InvalidArgument, "unknown optimizer '" + opt + "'");
		}
		c.beta1 = j.value("beta1", c.beta1);
		c.beta2 = j.value("beta2", c.beta2);
		c.epsilon = j.value("epsilon", c.epsilon);
		c.l2 = j.value("l2", c.l2);
		c.class_weighting = j.value("class_weighting", c.class_weighting);
		c.standardize = j.value("standardize", c.standardize);
	} catch (const nlohmann::json::exception &e) {
		fail(ErrorCode::InvalidArgument, std::string("training config: ") + e.what());
	}
	c.validate();
	return c;
}

Mlp::Mlp(std::vector<std::size_t> layer_sizes) : layer_sizes_(std::move(layer_sizes)) {
	if (layer_sizes_.size() < 2) {
		fail(ErrorCode::InvalidDimension, "a network needs at least an input and an output layer");
	}
	for (std::size_t s : layer_sizes_) {
		if (s == 0) {
			fail(ErrorCode::InvalidDimension, "layer sizes must be positive");
		}
	}
	for (std::size_t l = 0; l + 1 < layer_sizes_.size(); ++l) {
		const auto in = static_cast<Eigen::Index>(layer_sizes_[l]);
		const auto out = static_cast<Eigen::Index>(layer_sizes_[l + 1]);
		weights_.push_back(Eigen::MatrixXd::Zero(in, out));
		biases_.push_back(Eigen::VectorXd::Zero(out));
	}
}

Mlp Mlp::init(std::size_t input_dim, std::size_t output_dim, std::uint64_t seed) {
	if (input_dim < 1) {
		fail(ErrorCode::InvalidDimension, "input dimension must be at least 1");
	}
	if (output_dim < 2) {
		fail(ErrorCode::InvalidDimension,
		     "output dimension must be at least 2, got " + std::to_string(output_dim));
	}
	std::vector<std::size_t> sizes{input_dim};
	sizes.insert(sizes.end(), std::begin(kHiddenLayers), std::end(kHiddenLayers));
	sizes.push_back(output_dim);
	return init(std::move(sizes), seed);
}

Mlp Mlp::init(std::vector<std::size_t> layer_sizes, std::uint64_t seed) {
	Mlp model(std::move(layer_sizes));
	if (model.output_dim() < 2) {
		fail(ErrorCode::InvalidDimension, "output dimension must be at least 2");
	}
	Rng rng(seed);
	for (auto &w : model.weights_) {
		const double bound = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
		// Column-major fill order is part of the determinism contract.
		for (Eigen::Index c = 0; c < w.cols(); ++c) {
			for (Eigen::Index r = 0; r < w.rows(); ++r) {
				w(r, c) = rng.uniform(-bound, bound);
			}
		}
	}
	return model;
}

std::size_t Mlp::parameter_count() const {
	std::size_t n = 0;
	for (std::size_t l = 0; l < weights_.size(); ++l) {
		n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
	}
	return n;
}

bool Mlp::all_finite() const {
	for (std::size_t l = 0; l < weights_.size(); ++l) {
		if (!weights_[l].allFinite() || !biases_[l].allFinite()) {
			return false;
		}
	}
	return true;
}

Eigen::MatrixXd Mlp::logits(const Eigen::MatrixXd &batch) const {
	if (static_cast<std::size_t>(batch.cols()) != input_dim()) {
		fail(ErrorCode::DimensionMismatch, "input has " + std::to_string(batch.cols()) + " features, network expects " +
		                                       std::to_string(input_dim()));
	}
	Eigen::MatrixXd a = batch;
	for (std::size_t l = 0; l < weights_.size(); ++l) {
		Eigen::MatrixXd z = a * weights_[l];
		z.rowwise() += biases_[l].transpose();
		if (l + 1 < weights_.size()) {
			a = z.cwiseMax(0.0);
		} else {
			a = std::move(z);
		}
	}
	return a;
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd &logits) {
	Eigen::MatrixXd p = logits;
	for (Eigen::Index i = 0; i < p.rows(); ++i) {
		const double m = p.row(i).maxCoeff();
		p.row(i) = (p.row(i).array() - m).exp();
		p.row(i) /= p.row(i).sum();
	}
	return p;
}

Eigen::MatrixXd Mlp::predict_proba(const Eigen::MatrixXd &batch) const {
	return softmax_rows(logits(batch));
}

std::vector<double> Mlp::predict_proba(std::span<const double> x) const {
	if (x.size() != input_dim()) {
		fail(ErrorCode::DimensionMismatch,
		     "input has " + std::to_string(x.size()) + " features, network expects " + std::to_string(input_dim()));
	}
	Eigen::MatrixXd row(1, static_cast<Eigen::Index>(x.size()));
	for (std::size_t j = 0; j < x.size(); ++j) {
		row(0, static_cast<Eigen::Index>(j)) = x[j];
	}
	const Eigen::MatrixXd p = predict_proba(row);
	return std::vector<double>(p.data(), p.data() + p.size());
}

bool Mlp::operator==(const Mlp &other) const {
	if (layer_sizes_ != other.layer_sizes_) {
		return false;
	}
	for (std::size_t l = 0; l < weights_.size(); ++l) {
		if (weights_[l] != other.weights_[l] || biases_[l] != other.biases_[l]) {
			return false;
		}
	}
	return true;
}

namespace {

void check_batch(const Mlp &model, const Eigen::MatrixXd &batch, std::span<const int> labels,
                 std::span<const double> class_weights) {
	if (batch.rows() == 0) {
		fail(ErrorCode::InvalidArgument, "batch is empty");
	}
	if (static_cast<std::size_t>(batch.rows()) != labels.size()) {
		fail(ErrorCode::DimensionMismatch, "batch has " + std::to_string(batch.rows()) + " rows but " +
		                                       std::to_string(labels.size()) + " labels");
	}
	for (int y : labels) {
		if (y < 0 || static_cast<std::size_t>(y) >= model.output_dim()) {
			fail(ErrorCode::LabelOutOfRange,
			     "label " + std::to_string(y) + " outside [0, " + std::to_string(model.output_dim()) + ")");
		}
	}
	if (!class_weights.empty() && class_weights.size() != model.output_dim()) {
		fail(ErrorCode::DimensionMismatch, "class weight vector does not match the output width");
	}
}

double weight_penalty(const Mlp &model, double l2) {
	if (l2 == 0.0) {
		return 0.0;
	}
	double sq = 0.0;
	for (std::size_t l = 0; l < model.layer_count(); ++l) {
		sq += model.weights(l).squaredNorm();
	}
	return 0.5 * l2 * sq;
}

// Cross-entropy term for row i of a logit matrix: logsumexp(z) - z_y.
double row_cross_entropy(const Eigen::MatrixXd &z, Eigen::Index i, int y) {
	const double m = z.row(i).maxCoeff();
	const double lse = m + std::log((z.row(i).array() - m).exp().sum());
	return lse - z(i, y);
}

} // namespace

double loss_value(const Mlp &model, const Eigen::MatrixXd &batch, std::span<const int> labels, double l2,
                  std::span<const double> class_weights) {
	check_batch(model, batch, labels, class_weights);
	const Eigen::MatrixXd z = model.logits(batch);
	double total = 0.0;
	for (Eigen::Index i = 0; i < z.rows(); ++i) {
		const int y = labels[static_cast<std::size_t>(i)];
		const double w = class_weights.empty() ? 1.0 : class_weights[static_cast<std::size_t>(y)];
		total += w * row_cross_entropy(z, i, y);
	}
	return total / static_cast<double>(z.rows()) + weight_penalty(model, l2);
}

LossAndGradient loss_and_gradient(const Mlp &model, const Eigen::MatrixXd &batch, std::span<const int> labels,
                                  double l2, std::span<const double> class_weights) {
	check_batch(model, batch, labels, class_weights);
	if (static_cast<std::size_t>(batch.cols()) != model.input_dim()) {
		fail(ErrorCode::DimensionMismatch, "input has " + std::to_string(batch.cols()) +
		                                       " features, network expects " + std::to_string(model.input_dim()));
	}
	const std::size_t layers = model.layer_count();
	const auto n = static_cast<double>(batch.rows());

	// Forward pass keeping every activation; acts[0] is the input.
	std::vector<Eigen::MatrixXd> acts;
	acts.reserve(layers + 1);
	acts.push_back(batch);
	for (std::size_t l = 0; l < layers; ++l) {
		Eigen::MatrixXd z = acts.back() * model.weights(l);
		z.rowwise() += model.bias(l).transpose();
		if (l + 1 < layers) {
			z = z.cwiseMax(0.0);
		}
		acts.push_back(std::move(z));
	}
	const Eigen::MatrixXd &z_out = acts.back();

	LossAndGradient out;
	Eigen::MatrixXd delta = softmax_rows(z_out);
	double total = 0.0;
	for (Eigen::Index i = 0; i < delta.rows(); ++i) {
		const int y = labels[static_cast<std::size_t>(i)];
		const double w = class_weights.empty() ? 1.0 : class_weights[static_cast<std::size_t>(y)];
		total += w * row_cross_entropy(z_out, i, y);
		delta(i, y) -= 1.0;
		delta.row(i) *= w / n;
	}
	out.loss = total / n + weight_penalty(model, l2);

	out.grad.weights.resize(layers);
	out.grad.biases.resize(layers);
	for (std::size_t l = layers; l-- > 0;) {
		out.grad.weights[l] = acts[l].transpose() * delta;
		if (l2 != 0.0) {
			out.grad.weights[l] += l2 * model.weights(l);
		}
		out.grad.biases[l] = delta.colwise().sum().transpose();
		if (l > 0) {
			Eigen::MatrixXd back = delta * model.weights(l).transpose();
			// ReLU derivative taken as 0 at the kink.
			delta = back.cwiseProduct((acts[l].array() > 0.0).cast<double>().matrix());
		}
	}
	return out;
}

std::vector<double> inverse_frequency_weights(std::span<const int> labels, std::size_t classes) {
	std::vector<double> counts(classes, 0.0);
	for (int y : labels) {
		counts.at(static_cast<std::size_t>(y)) += 1.0;
	}
	std::vector<double> w(classes, 0.0);
	const auto n = static_cast<double>(labels.size());
	for (std::size_t c = 0; c < classes; ++c) {
		if (counts[c] > 0.0) {
			w[c] = n / (static_cast<double>(classes) * counts[c]);
		}
	}
	return w;
}

TrainResult train_mlp(Mlp model, const Eigen::MatrixXd &inputs, std::span<const int> labels,
                      const TrainConfig &config) {
	config.validate();
	if (inputs.rows() == 0) {
		fail(ErrorCode::EmptyTrainingSet, "no training samples");
	}
	if (static_cast<std::size_t>(inputs.rows()) != labels.size()) {
		fail(ErrorCode::DimensionMismatch, "training matrix has " + std::to_string(inputs.rows()) + " rows but " +
		                                       std::to_string(labels.size()) + " labels");
	}
	if (static_cast<std::size_t>(inputs.cols()) != model.input_dim()) {
		fail(ErrorCode::DimensionMismatch, "training matrix has " + std::to_string(inputs.cols()) +
		                                       " features, network expects " + std::to_string(model.input_dim()));
	}
	TrainResult result;
	if (config.epochs == 0) {
		result.model = std::move(model);
		return result;
	}
	std::vector<double> class_weights;
	if (config.class_weighting) {
		class_weights = inverse_frequency_weights(labels, model.output_dim());
	}

	const std::size_t layers = model.layer_count();
	std::vector<Eigen::MatrixXd> m_w, v_w;
	std::vector<Eigen::VectorXd> m_b, v_b;
	for (std::size_t l = 0; l < layers; ++l) {
		m_w.push_back(Eigen::MatrixXd::Zero(model.weights(l).rows(), model.weights(l).cols()));
		v_w.push_back(m_w.back());
		m_b.push_back(Eigen::VectorXd::Zero(model.bias(l).size()));
		v_b.push_back(m_b.back());
	}

	const std::size_t n = labels.size();
	const std::size_t batch = std::min(config.batch_size, n);
	std::vector<std::size_t> order(n);
	std::iota(order.begin(), order.end(), std::size_t{0});
	Rng rng(config.seed);
	std::uint64_t step = 0;
	Eigen::MatrixXd xb;
	std::vector<int> yb;

	for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
		rng.shuffle(std::span<std::size_t>(order));
		double epoch_loss = 0.0;
		for (std::size_t start = 0; start < n; start += batch) {
			const std::size_t len = std::min(batch, n - start);
			xb.resize(static_cast<Eigen::Index>(len), inputs.cols());
			yb.resize(len);
			for (std::size_t i = 0; i < len; ++i) {
				xb.row(static_cast<Eigen::Index>(i)) = inputs.row(static_cast<Eigen::Index>(order[start + i]));
				yb[i] = labels[order[start + i]];
			}
			LossAndGradient lg = loss_and_gradient(model, xb, yb, config.l2, class_weights);
			epoch_loss += lg.loss * static_cast<double>(len);
			++step;

			if (config.optimizer == Optimizer::Sgd) {
				for (std::size_t l = 0; l < layers; ++l) {
					model.weights(l) -= config.learning_rate * lg.grad.weights[l];
					model.bias(l) -= config.learning_rate * lg.grad.biases[l];
				}
				continue;
			}
			const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
			const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
			const double lr = config.learning_rate * std::sqrt(c2) / c1;
			auto adam = [&](auto &param, auto &m, auto &v, const auto &g) {
				m = config.beta1 * m + (1.0 - config.beta1) * g;
				v = config.beta2 * v + (1.0 - config.beta2) * g.cwiseProduct(g);
				param.array() -= lr * m.array() / (v.array().sqrt() + config.epsilon);
			};
			for (std::size_t l = 0; l < layers; ++l) {
				adam(model.weights(l), m_w[l], v_w[l], lg.grad.weights[l]);
				adam(model.bias(l), m_b[l], v_b[l], lg.grad.biases[l]);
			}
		}
		result.loss_history.push_back(epoch_loss / static_cast<double>(n));
		if (!model.all_finite() || !std::isfinite(result.loss_history.back())) {
			fail(ErrorCode::Diverged, "non-finite parameters after epoch " + std::to_string(epoch + 1));
		}
	}
	result.model = std::move(model);
	return result;
}

nlohmann::json to_json(const Mlp &model) {
	nlohmann::json j;
	j["format"] = "benthic-mlp";
	j["version"] = 1;
	j["layer_sizes"] = model.layer_sizes();
	j["weights"] = nlohmann::json::array();
	j["biases"] = nlohmann::json::array();
	for (std::size_t l = 0; l < model.layer_count(); ++l) {
		const auto &w = model.weights(l);
		// Row-major: one array per input unit.
		std::vector<double> flat;
		flat.reserve(static_cast<std::size_t>(w.size()));
		for (Eigen::Index r = 0; r < w.rows(); ++r) {
			for (Eigen::Index c = 0; c < w.cols(); ++c) {
				flat.push_back(w(r, c));
			}
		}
		j["weights"].push_back(flat);
		const auto &b = model.bias(l);
		j["biases"].push_back(std::vector<double>(b.data(), b.data() + b.size()));
	}
	return j;
}

Mlp mlp_from_json(const nlohmann::json &j) {
	try {
		if (j.at("format") != "benthic-mlp") {
			fail(ErrorCode::MalformedModel, "not a benthic-mlp document");
		}
		if (j.at("version").get<int>() != 1) {
			fail(ErrorCode::MalformedModel, "unsupported network format version " + j.at("version").dump());
		}
		Mlp model(j.at("layer_sizes").get<std::vector<std::size_t>>());
		const auto &ws = j.at("weights");
		const auto &bs = j.at("biases");
		if (ws.size() != model.layer_count() || bs.size() != model.layer_count()) {
			fail(ErrorCode::MalformedModel, "layer count does not match layer_sizes");
		}
		for (std::size_t l = 0; l < model.layer_count(); ++l) {
			const auto flat = ws[l].get<std::vector<double>>();
			auto &w = model.weights(l);
			if (flat.size() != static_cast<std::size_t>(w.size())) {
				fail(ErrorCode::MalformedModel, "weight block " + std::to_string(l) + " has the wrong size");
			}
			std::size_t k = 0;
			for (Eigen::Index r = 0; r < w.rows(); ++r) {
				for (Eigen::Index c = 0; c < w.cols(); ++c) {
					w(r, c) = flat[k++];
				}
			}
			const auto b = bs[l].get<std::vector<double>>();
			if (b.size() != static_cast<std::size_t>(model.bias(l).size())) {
				fail(ErrorCode::MalformedModel, "bias block " + std::to_string(l) + " has the wrong size");
			}
			model.bias(l) = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
		}
		return model;
	} catch (const nlohmann::json::exception &e) {
		fail(ErrorCode::MalformedModel, std::string("network document: ") + e.what());
	}
}

} // namespace benthic
