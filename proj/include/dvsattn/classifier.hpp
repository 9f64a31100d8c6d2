#pragma once

// Multi-layer perceptron readout over decoded feature vectors.

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dvsattn/decoders.hpp"

namespace dvsattn {

struct MlpHyperparams {
    std::size_t n_hidden = 32;
    double lr = 0.05;
    std::size_t epochs = 300;
    std::size_t batch = 16;
    std::uint64_t seed = 0;
};

/// n_in -> ReLU(n_hidden) -> softmax(n_classes). Inputs are standardized with
/// the per-feature mean and scale fitted on the training set.
struct MlpModel {
    std::size_t n_in = 0;
    std::size_t n_hidden = 0;
    std::size_t n_classes = 0;
    std::vector<int> classes;  ///< label of each output unit, ascending

    std::vector<double> mean;
    std::vector<double> scale;

    std::vector<double> w1;  ///< n_hidden x n_in
    std::vector<double> b1;
    std::vector<double> w2;  ///< n_classes x n_hidden
    std::vector<double> b2;

    std::vector<double> loss_history;  ///< mean cross-entropy per epoch

    std::vector<double> predict_proba(std::span<const double> x) const;
    int predict(std::span<const double> x) const;
    std::size_t class_index(int label) const;
};

struct MlpGradient {
    std::vector<double> w1, b1, w2, b2;
};

MlpModel init_mlp(std::size_t n_in, std::vector<int> classes, const MlpHyperparams& hp);

/// Mean cross-entropy of the batch; fills `grad` (may be null) with its
/// analytic gradient with respect to w1, b1, w2, b2.
double loss_and_gradient(const MlpModel& model, std::span<const FeatureVector> batch, MlpGradient* grad);

/// Mini-batch gradient descent on cross-entropy. Throws DivergenceError on a
/// non-finite epoch loss.
MlpModel train_mlp(std::span<const FeatureVector> train, const MlpHyperparams& hp);

struct Split {
    std::vector<FeatureVector> train;
    std::vector<FeatureVector> test;
};

/// Per class, round(n * test_fraction) samples (at least one, at most n - 1) go to test.
Split split_stratified(std::span<const FeatureVector> features, double test_fraction, std::uint64_t seed);

struct EvalReport {
    Coding coding = Coding::Rate;
    double accuracy = 0.0;
    std::vector<int> classes;
    std::vector<std::vector<std::size_t>> confusion;  ///< rows: true class, cols: predicted
    std::uint64_t seed = 0;
    MlpHyperparams hyperparams;
    double test_fraction = 0.0;
    std::vector<double> repeat_accuracies;  ///< one per seed when evaluated with repeats
};

EvalReport evaluate(const MlpModel& model, std::span<const FeatureVector> test);

/// `{coding, accuracy, classes, confusion, seed, hyperparams[, repeats]}` as pretty JSON.
std::string to_json(const EvalReport& report);

}  // namespace dvsattn
