#include <algorithm>
#include <cmath>
#include <vector>

#include "unleak/classifier.hpp"
#include "unleak/rng.hpp"

namespace unleak::detail {

namespace {

constexpr std::size_t kBatchSize = 32;

struct Forward {
    std::vector<double> hidden;  // post-ReLU
    std::vector<double> probs;
};

void forward_one(const MlpModel& m, std::span<const double> x, int num_classes, Forward& f) {
    const std::size_t d = x.size();
    const auto h = static_cast<std::size_t>(m.hidden);
    f.hidden.resize(h);
    for (std::size_t j = 0; j < h; ++j) {
        double z = m.b1[j];
        const double* w = m.w1.data() + j * d;
        for (std::size_t k = 0; k < d; ++k) z += w[k] * x[k];
        f.hidden[j] = z > 0.0 ? z : 0.0;
    }
    f.probs.resize(static_cast<std::size_t>(num_classes));
    double zmax = -1e300;
    for (int c = 0; c < num_classes; ++c) {
        double z = m.b2[static_cast<std::size_t>(c)];
        const double* w = m.w2.data() + static_cast<std::size_t>(c) * h;
        for (std::size_t j = 0; j < h; ++j) z += w[j] * f.hidden[j];
        f.probs[static_cast<std::size_t>(c)] = z;
        zmax = std::max(zmax, z);
    }
    double sum = 0.0;
    for (double& p : f.probs) {
        p = std::exp(p - zmax);
        sum += p;
    }
    for (double& p : f.probs) p /= sum;
}

}  // namespace

double mlp_loss(const TrainData& data, const MlpModel& m, double l2) {
    Forward f;
    double loss = 0.0;
    for (std::size_t i = 0; i < data.n; ++i) {
        forward_one(m, data.row(i), data.num_classes, f);
        loss -= std::log(std::max(f.probs[static_cast<std::size_t>(data.y[i])], 1e-300));
    }
    loss /= static_cast<double>(data.n);
    double reg = 0.0;
    for (double w : m.w1) reg += w * w;
    for (double w : m.w2) reg += w * w;
    return loss + 0.5 * l2 * reg;
}

MlpModel train_mlp(const TrainData& data, const HyperParams& params, std::uint64_t seed,
                   std::vector<double>* loss_trace) {
    const std::size_t d = data.d;
    const auto h = static_cast<std::size_t>(params.mlp_hidden);
    const auto ell = static_cast<std::size_t>(data.num_classes);

    Rng rng(seed);
    MlpModel m;
    m.hidden = params.mlp_hidden;
    m.w1.resize(h * d);
    m.b1.assign(h, 0.0);
    m.w2.resize(ell * h);
    m.b2.assign(ell, 0.0);
    const double s1 = 1.0 / std::sqrt(static_cast<double>(d));
    for (double& w : m.w1) w = rng.next_normal() * s1;
    const double s2 = 1.0 / std::sqrt(static_cast<double>(h));
    for (double& w : m.w2) w = rng.next_normal() * s2;

    std::vector<std::size_t> order(data.n);
    for (std::size_t i = 0; i < data.n; ++i) order[i] = i;

    std::vector<double> gw1(h * d), gb1(h), gw2(ell * h), gb2(ell);
    Forward f;

    double lr = params.mlp_learning_rate;
    const double l2 = params.mlp_l2;
    double loss = mlp_loss(data, m, l2);
    if (loss_trace) loss_trace->push_back(loss);

    int epoch = 0;
    while (epoch < params.mlp_epochs && lr > 1e-12) {
        const MlpModel before = m;
        rng.shuffle(order);

        for (std::size_t start = 0; start < data.n; start += kBatchSize) {
            const std::size_t end = std::min(start + kBatchSize, data.n);
            const double inv_b = 1.0 / static_cast<double>(end - start);
            std::fill(gw1.begin(), gw1.end(), 0.0);
            std::fill(gb1.begin(), gb1.end(), 0.0);
            std::fill(gw2.begin(), gw2.end(), 0.0);
            std::fill(gb2.begin(), gb2.end(), 0.0);

            for (std::size_t idx = start; idx < end; ++idx) {
                const std::size_t i = order[idx];
                const auto x = data.row(i);
                forward_one(m, x, data.num_classes, f);
                // dL/dz2 = p - onehot(y)
                for (std::size_t c = 0; c < ell; ++c) {
                    const double delta =
                        f.probs[c] - (static_cast<std::size_t>(data.y[i]) == c ? 1.0 : 0.0);
                    gb2[c] += delta;
                    double* g = gw2.data() + c * h;
                    for (std::size_t j = 0; j < h; ++j) g[j] += delta * f.hidden[j];
                }
                for (std::size_t j = 0; j < h; ++j) {
                    if (f.hidden[j] <= 0.0) continue;  // ReLU gate
                    double back = 0.0;
                    for (std::size_t c = 0; c < ell; ++c) {
                        const double delta =
                            f.probs[c] - (static_cast<std::size_t>(data.y[i]) == c ? 1.0 : 0.0);
                        back += delta * m.w2[c * h + j];
                    }
                    gb1[j] += back;
                    double* g = gw1.data() + j * d;
                    for (std::size_t k = 0; k < d; ++k) g[k] += back * x[k];
                }
            }

            for (std::size_t k = 0; k < m.w1.size(); ++k)
                m.w1[k] -= lr * (gw1[k] * inv_b + l2 * m.w1[k]);
            for (std::size_t j = 0; j < h; ++j) m.b1[j] -= lr * gb1[j] * inv_b;
            for (std::size_t k = 0; k < m.w2.size(); ++k)
                m.w2[k] -= lr * (gw2[k] * inv_b + l2 * m.w2[k]);
            for (std::size_t c = 0; c < ell; ++c) m.b2[c] -= lr * gb2[c] * inv_b;
        }

        // Epoch acceptance: a pass may not raise the full-batch loss. On an
        // increase, rewind and retry the epoch at half the learning rate.
        const double new_loss = mlp_loss(data, m, l2);
        if (new_loss <= loss) {
            loss = new_loss;
            if (loss_trace) loss_trace->push_back(loss);
            ++epoch;
        } else {
            m = before;
            lr *= 0.5;
        }
    }
    return m;
}

}  // namespace unleak::detail
