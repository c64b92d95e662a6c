#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "benthic/error.hpp"

namespace benthic {

// Hidden layer widths used by every node classifier and the flat baseline.
inline constexpr std::size_t kHiddenLayers[] = {200, 100};

enum class Optimizer { Adam, Sgd };

struct TrainConfig {
	double learning_rate = 1e-3;
	std::size_t batch_size = 64;
	std::size_t epochs = 50;
	std::uint64_t seed = 0;
	Optimizer optimizer = Optimizer::Adam;
	double beta1 = 0.9;
	double beta2 = 0.999;
	double epsilon = 1e-8;
	double l2 = 1e-4;
	// Weight each sample's loss by n / (k * n_class). Off unless asked for.
	bool class_weighting = false;
	// Per-dimension standardization fit on the training features.
	bool standardize = true;

	/// Throws InvalidArgument when a field is out of range.
	void validate() const;
};

nlohmann::json to_json(const TrainConfig &config);
/// Missing keys keep their defaults.
TrainConfig train_config_from_json(const nlohmann::json &j);

/// Feed-forward network: ReLU hidden layers, softmax output.
///
/// Inputs are row vectors; layer l maps with `a * weights(l) + bias(l)`, so
/// weights(l) has shape (layer_sizes[l], layer_sizes[l + 1]).
class Mlp {
public:
	Mlp() = default;

	/// Zero-filled network with the given layer sizes (at least two entries).
	explicit Mlp(std::vector<std::size_t> layer_sizes);

	/// [input_dim, 200, 100, output_dim] with Glorot-uniform weights drawn
	/// from `seed` and zero biases. output_dim must be at least 2.
	static Mlp init(std::size_t input_dim, std::size_t output_dim, std::uint64_t seed);
	static Mlp init(std::vector<std::size_t> layer_sizes, std::uint64_t seed);

	const std::vector<std::size_t> &layer_sizes() const {
		return layer_sizes_;
	}
	std::size_t input_dim() const {
		return layer_sizes_.front();
	}
	std::size_t output_dim() const {
		return layer_sizes_.back();
	}
	std::size_t layer_count() const {
		return weights_.size();
	}
	std::size_t parameter_count() const;

	Eigen::MatrixXd &weights(std::size_t layer) {
		return weights_.at(layer);
	}
	const Eigen::MatrixXd &weights(std::size_t layer) const {
		return weights_.at(layer);
	}
	Eigen::VectorXd &bias(std::size_t layer) {
		return biases_.at(layer);
	}
	const Eigen::VectorXd &bias(std::size_t layer) const {
		return biases_.at(layer);
	}

	bool all_finite() const;

	/// Output logits for a batch (one row per sample).
	Eigen::MatrixXd logits(const Eigen::MatrixXd &batch) const;
	Eigen::MatrixXd predict_proba(const Eigen::MatrixXd &batch) const;
	std::vector<double> predict_proba(std::span<const double> x) const;

	bool operator==(const Mlp &other) const;

private:
	std::vector<std::size_t> layer_sizes_;
	std::vector<Eigen::MatrixXd> weights_;
	std::vector<Eigen::VectorXd> biases_;
};

/// Row-wise softmax with max subtraction.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd &logits);

struct Gradients {
	std::vector<Eigen::MatrixXd> weights;
	std::vector<Eigen::VectorXd> biases;
};

struct LossAndGradient {
	double loss = 0.0;
	Gradients grad;
};

/// Mean (optionally class-weighted) cross-entropy plus 0.5 * l2 * sum of
/// squared weights, and its gradient by backpropagation. `class_weights`
/// is either empty or has one entry per output.
LossAndGradient loss_and_gradient(const Mlp &model, const Eigen::MatrixXd &batch, std::span<const int> labels,
                                  double l2, std::span<const double> class_weights = {});

/// Loss only; shares the definition above.
double loss_value(const Mlp &model, const Eigen::MatrixXd &batch, std::span<const int> labels, double l2,
                  std::span<const double> class_weights = {});

struct TrainResult {
	Mlp model;
	std::vector<double> loss_history;
};

/// Mini-batch training with per-epoch shuffling drawn from config.seed. Each
/// history entry is the sample-weighted mean of the batch losses seen during
/// that epoch (before each update). Throws Diverged if a parameter becomes
/// non-finite.
TrainResult train_mlp(Mlp model, const Eigen::MatrixXd &inputs, std::span<const int> labels,
                      const TrainConfig &config);

/// Inverse-frequency weights n / (k * n_c); classes with no samples get 0.
std::vector<double> inverse_frequency_weights(std::span<const int> labels, std::size_t classes);

nlohmann::json to_json(const Mlp &model);
Mlp mlp_from_json(const nlohmann::json &j);

} // namespace benthic
