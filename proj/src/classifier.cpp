#include "dvsattn/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "dvsattn/error.hpp"
#include "json.hpp"

namespace dvsattn {
namespace {

struct Forward {
    std::vector<double> z;       // standardized input
    std::vector<double> hidden;  // post-ReLU
    std::vector<double> proba;
};

Forward forward(const MlpModel& m, std::span<const double> x) {
    if (x.size() != m.n_in) {
        throw ShapeError("feature length " + std::to_string(x.size()) + " does not match model input " +
                         std::to_string(m.n_in));
    }
    Forward f;
    f.z.resize(m.n_in);
    for (std::size_t i = 0; i < m.n_in; ++i) f.z[i] = (x[i] - m.mean[i]) * m.scale[i];
    f.hidden.resize(m.n_hidden);
    for (std::size_t h = 0; h < m.n_hidden; ++h) {
        double a = m.b1[h];
        for (std::size_t i = 0; i < m.n_in; ++i) a += m.w1[h * m.n_in + i] * f.z[i];
        f.hidden[h] = std::max(a, 0.0);
    }
    f.proba.resize(m.n_classes);
    for (std::size_t c = 0; c < m.n_classes; ++c) {
        double a = m.b2[c];
        for (std::size_t h = 0; h < m.n_hidden; ++h) a += m.w2[c * m.n_hidden + h] * f.hidden[h];
        f.proba[c] = a;
    }
    const double top = *std::max_element(f.proba.begin(), f.proba.end());
    double sum = 0.0;
    for (double& p : f.proba) sum += (p = std::exp(p - top));
    for (double& p : f.proba) p /= sum;
    return f;
}

}  // namespace

std::vector<double> MlpModel::predict_proba(std::span<const double> x) const { return forward(*this, x).proba; }

int MlpModel::predict(std::span<const double> x) const {
    const auto p = predict_proba(x);
    return classes[static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin())];
}

std::size_t MlpModel::class_index(int label) const {
    const auto it = std::lower_bound(classes.begin(), classes.end(), label);
    if (it == classes.end() || *it != label) throw Error("label " + std::to_string(label) + " unknown to the model");
    return static_cast<std::size_t>(it - classes.begin());
}

MlpModel init_mlp(std::size_t n_in, std::vector<int> classes, const MlpHyperparams& hp) {
    if (n_in == 0 || classes.empty() || hp.n_hidden == 0) throw ConfigError("MLP layers must be non-empty");
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    MlpModel m;
    m.n_in = n_in;
    m.n_hidden = hp.n_hidden;
    m.n_classes = classes.size();
    m.classes = std::move(classes);
    m.mean.assign(n_in, 0.0);
    m.scale.assign(n_in, 1.0);

    std::mt19937_64 rng(hp.seed);
    std::normal_distribution<double> he(0.0, std::sqrt(2.0 / static_cast<double>(n_in)));
    std::normal_distribution<double> small(0.0, 0.01);
    m.w1.resize(m.n_hidden * n_in);
    for (double& w : m.w1) w = he(rng);
    m.b1.assign(m.n_hidden, 0.0);
    m.w2.resize(m.n_classes * m.n_hidden);
    for (double& w : m.w2) w = small(rng);
    m.b2.assign(m.n_classes, 0.0);
    return m;
}

double loss_and_gradient(const MlpModel& m, std::span<const FeatureVector> batch, MlpGradient* grad) {
    if (grad) {
        grad->w1.assign(m.w1.size(), 0.0);
        grad->b1.assign(m.b1.size(), 0.0);
        grad->w2.assign(m.w2.size(), 0.0);
        grad->b2.assign(m.b2.size(), 0.0);
    }
    if (batch.empty()) return 0.0;
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    std::vector<double> d_out(m.n_classes), d_hidden(m.n_hidden);
    for (const auto& sample : batch) {
        const auto f = forward(m, sample.values);
        const std::size_t target = m.class_index(sample.label);
        loss -= std::log(std::max(f.proba[target], 1e-300));
        if (!grad) continue;
        for (std::size_t c = 0; c < m.n_classes; ++c) {
            d_out[c] = (f.proba[c] - (c == target ? 1.0 : 0.0)) * inv_n;
        }
        std::fill(d_hidden.begin(), d_hidden.end(), 0.0);
        for (std::size_t c = 0; c < m.n_classes; ++c) {
            grad->b2[c] += d_out[c];
            for (std::size_t h = 0; h < m.n_hidden; ++h) {
                grad->w2[c * m.n_hidden + h] += d_out[c] * f.hidden[h];
                d_hidden[h] += d_out[c] * m.w2[c * m.n_hidden + h];
            }
        }
        for (std::size_t h = 0; h < m.n_hidden; ++h) {
            if (f.hidden[h] <= 0.0) continue;
            grad->b1[h] += d_hidden[h];
            for (std::size_t i = 0; i < m.n_in; ++i) grad->w1[h * m.n_in + i] += d_hidden[h] * f.z[i];
        }
    }
    return loss * inv_n;
}

MlpModel train_mlp(std::span<const FeatureVector> train, const MlpHyperparams& hp) {
    if (train.empty()) throw Error("train_mlp needs a non-empty training set");
    const std::size_t n_in = train.front().values.size();
    std::vector<int> labels;
    for (const auto& f : train) {
        if (f.values.size() != n_in) throw ShapeError("inconsistent feature lengths in training set");
        labels.push_back(f.label);
    }
    MlpModel m = init_mlp(n_in, labels, hp);

    const double n = static_cast<double>(train.size());
    for (std::size_t i = 0; i < n_in; ++i) {
        double mean = 0.0;
        for (const auto& f : train) mean += f.values[i];
        mean /= n;
        double var = 0.0;
        for (const auto& f : train) var += (f.values[i] - mean) * (f.values[i] - mean);
        const double sd = std::sqrt(var / n);
        m.mean[i] = mean;
        m.scale[i] = sd > 1e-12 ? 1.0 / sd : 1.0;
    }

    std::mt19937_64 rng(hp.seed ^ 0x5DEECE66Dull);
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t batch_size = std::max<std::size_t>(hp.batch, 1);
    std::vector<FeatureVector> batch;
    MlpGradient g;
    for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += batch_size) {
            const std::size_t stop = std::min(order.size(), start + batch_size);
            batch.clear();
            for (std::size_t k = start; k < stop; ++k) batch.push_back(train[order[k]]);
            epoch_loss += loss_and_gradient(m, batch, &g) * static_cast<double>(batch.size());
            for (std::size_t k = 0; k < m.w1.size(); ++k) m.w1[k] -= hp.lr * g.w1[k];
            for (std::size_t k = 0; k < m.b1.size(); ++k) m.b1[k] -= hp.lr * g.b1[k];
            for (std::size_t k = 0; k < m.w2.size(); ++k) m.w2[k] -= hp.lr * g.w2[k];
            for (std::size_t k = 0; k < m.b2.size(); ++k) m.b2[k] -= hp.lr * g.b2[k];
        }
        epoch_loss /= n;
        if (!std::isfinite(epoch_loss)) throw DivergenceError(epoch, "training loss is not finite");
        m.loss_history.push_back(epoch_loss);
    }
    return m;
}

Split split_stratified(std::span<const FeatureVector> features, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test_fraction must be in (0, 1)");
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < features.size(); ++i) by_class[features[i].label].push_back(i);

    std::mt19937_64 rng(seed);
    std::vector<bool> is_test(features.size(), false);
    for (auto& [label, idx] : by_class) {
        if (idx.size() < 2) {
            throw Error("class " + std::to_string(label) + " has fewer than 2 samples; cannot split");
        }
        std::shuffle(idx.begin(), idx.end(), rng);
        const auto want = static_cast<std::size_t>(std::llround(static_cast<double>(idx.size()) * test_fraction));
        const std::size_t n_test = std::clamp<std::size_t>(want, 1, idx.size() - 1);
        for (std::size_t k = 0; k < n_test; ++k) is_test[idx[k]] = true;
    }
    Split split;
    for (std::size_t i = 0; i < features.size(); ++i) {
        (is_test[i] ? split.test : split.train).push_back(features[i]);
    }
    return split;
}

EvalReport evaluate(const MlpModel& model, std::span<const FeatureVector> test) {
    if (test.empty()) throw Error("evaluate needs a non-empty test set");
    EvalReport r;
    r.coding = test.front().coding;
    r.classes = model.classes;
    r.confusion.assign(model.n_classes, std::vector<std::size_t>(model.n_classes, 0));
    std::size_t correct = 0;
    for (const auto& f : test) {
        const int predicted = model.predict(f.values);
        r.confusion[model.class_index(f.label)][model.class_index(predicted)] += 1;
        if (predicted == f.label) ++correct;
    }
    r.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
    return r;
}

std::string to_json(const EvalReport& report) {
    nlohmann::ordered_json j;
    j["coding"] = std::string(to_string(report.coding));
    j["accuracy"] = report.accuracy;
    j["classes"] = report.classes;
    j["confusion"] = report.confusion;
    j["seed"] = report.seed;
    j["hyperparams"] = {{"n_hidden", report.hyperparams.n_hidden},
                        {"lr", report.hyperparams.lr},
                        {"epochs", report.hyperparams.epochs},
                        {"batch", report.hyperparams.batch},
                        {"test_fraction", report.test_fraction}};
    if (!report.repeat_accuracies.empty()) {
        const auto& acc = report.repeat_accuracies;
        const double n = static_cast<double>(acc.size());
        const double mean = std::accumulate(acc.begin(), acc.end(), 0.0) / n;
        double var = 0.0;
        for (const double a : acc) var += (a - mean) * (a - mean);
        j["repeats"] = {{"accuracies", acc}, {"mean", mean}, {"std", std::sqrt(var / n)}};
    }
    return j.dump(2) + "\n";
}

}  // namespace dvsattn
