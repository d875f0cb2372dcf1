#include <algorithm>
#include <cmath>
#include <vector>

#include "unleak/classifier.hpp"

namespace unleak::detail {

namespace {

// Row-wise softmax of logits z (length ℓ), max-subtracted for stability.
void softmax_inplace(std::vector<double>& z) {
    double m = z[0];
    for (double v : z) m = std::max(m, v);
    double sum = 0.0;
    for (double& v : z) {
        v = std::exp(v - m);
        sum += v;
    }
    for (double& v : z) v /= sum;
}

// Logits for one sample under weights[(d+1)*c + j], bias in column d.
void logits(const TrainData& data, const std::vector<double>& w, std::size_t i,
            std::vector<double>& out) {
    const std::size_t cols = data.d + 1;
    const auto x = data.row(i);
    for (int c = 0; c < data.num_classes; ++c) {
        const double* wc = w.data() + static_cast<std::size_t>(c) * cols;
        double z = wc[data.d];
        for (std::size_t j = 0; j < data.d; ++j) z += wc[j] * x[j];
        out[static_cast<std::size_t>(c)] = z;
    }
}

}  // namespace

double lr_loss(const TrainData& data, const std::vector<double>& weights, double l2) {
    const std::size_t cols = data.d + 1;
    std::vector<double> p(data.num_classes);
    double loss = 0.0;
    for (std::size_t i = 0; i < data.n; ++i) {
        logits(data, weights, i, p);
        softmax_inplace(p);
        loss -= std::log(std::max(p[static_cast<std::size_t>(data.y[i])], 1e-300));
    }
    loss /= static_cast<double>(data.n);
    double reg = 0.0;  // bias column stays unpenalized
    for (int c = 0; c < data.num_classes; ++c)
        for (std::size_t j = 0; j < data.d; ++j) {
            const double w = weights[static_cast<std::size_t>(c) * cols + j];
            reg += w * w;
        }
    return loss + 0.5 * l2 * reg;
}

std::vector<double> lr_gradient(const TrainData& data, const std::vector<double>& weights,
                                double l2) {
    const std::size_t cols = data.d + 1;
    std::vector<double> grad(weights.size(), 0.0);
    std::vector<double> p(data.num_classes);
    for (std::size_t i = 0; i < data.n; ++i) {
        logits(data, weights, i, p);
        softmax_inplace(p);
        const auto x = data.row(i);
        for (int c = 0; c < data.num_classes; ++c) {
            const double delta = p[static_cast<std::size_t>(c)] - (data.y[i] == c ? 1.0 : 0.0);
            double* gc = grad.data() + static_cast<std::size_t>(c) * cols;
            for (std::size_t j = 0; j < data.d; ++j) gc[j] += delta * x[j];
            gc[data.d] += delta;
        }
    }
    const double inv_n = 1.0 / static_cast<double>(data.n);
    for (double& g : grad) g *= inv_n;
    for (int c = 0; c < data.num_classes; ++c)
        for (std::size_t j = 0; j < data.d; ++j) {
            const std::size_t k = static_cast<std::size_t>(c) * cols + j;
            grad[k] += l2 * weights[k];
        }
    return grad;
}

LinearModel train_linear(const TrainData& data, const HyperParams& params,
                         std::vector<double>* loss_trace) {
    const std::size_t cols = data.d + 1;
    LinearModel model;
    model.weights.assign(static_cast<std::size_t>(data.num_classes) * cols, 0.0);

    // Full-batch gradient descent with step halving on loss increase: the
    // accepted loss sequence is non-increasing by construction.
    double step = 1.0;
    double loss = lr_loss(data, model.weights, params.lr_l2);
    if (loss_trace) loss_trace->push_back(loss);
    std::vector<double> trial(model.weights.size());
    for (int epoch = 0; epoch < params.lr_epochs; ++epoch) {
        auto grad = lr_gradient(data, model.weights, params.lr_l2);
        double gnorm2 = 0.0;
        for (double g : grad) gnorm2 += g * g;
        if (std::sqrt(gnorm2) <= 1e-6) break;

        double trial_loss;
        for (;;) {
            for (std::size_t k = 0; k < trial.size(); ++k)
                trial[k] = model.weights[k] - step * grad[k];
            trial_loss = lr_loss(data, trial, params.lr_l2);
            if (trial_loss <= loss || step <= 1e-15) break;
            step *= 0.5;
        }
        if (trial_loss > loss) break;  // step exhausted, no descent direction left
        model.weights.swap(trial);
        loss = trial_loss;
        if (loss_trace) loss_trace->push_back(loss);
        step *= 1.1;  // recover step size after successful moves
    }
    return model;
}

}  // namespace unleak::detail
