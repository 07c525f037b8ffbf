#pragma once

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "shellforge/grid.hpp"
#include "shellforge/nn/network.hpp"
#include "shellforge/rng.hpp"

namespace shellforge::nn {

struct TrainConfig {
    std::string loss = "l2";       // l2 | bce
    std::vector<double> lambda;    // per-head weights; empty = equal
    double learning_rate = 1e-3;
    int batch_size = 8;
    int epochs = 10;
    std::uint64_t seed = 0;
    std::string optimizer = "sgd";  // sgd | adam

    void validate(std::size_t head_count) const {
        if (loss != "l2" && loss != "bce")
            throw std::invalid_argument("unknown loss: " + loss);
        if (optimizer != "sgd" && optimizer != "adam")
            throw std::invalid_argument("unknown optimizer: " + optimizer);
        if (batch_size < 1 || epochs < 0 || learning_rate < 0.0)
            throw std::invalid_argument("bad training hyperparameters");
        if (!lambda.empty()) {
            if (lambda.size() != head_count)
                throw std::invalid_argument("lambda size must match head count");
            double sum = 0.0;
            for (double l : lambda) {
                if (l < 0.0) throw std::invalid_argument("lambda must be >= 0");
                sum += l;
            }
            if (sum <= 0.0) throw std::invalid_argument("lambda must sum > 0");
        }
    }

    std::vector<double> head_weights(std::size_t head_count) const {
        if (!lambda.empty()) return lambda;
        return std::vector<double>(head_count, 1.0 / head_count);
    }
};

// One training example: input image and truth occupancy at the largest head
// resolution, values in [0, 1].
template <class T>
struct Sample {
    Tensor<T> image;
    Tensor<T> truth;
};

struct EpochStats {
    int epoch = 0;
    std::vector<double> head_losses;  // per-sample average, config head order
    double combined = 0.0;
    double val_combined = 0.0;
};

// Per-head loss terms for one sample; truth is at the largest head resolution.
template <class T>
std::vector<VarPtr<T>> head_loss_terms(const std::vector<VarPtr<T>>& heads,
                                       const Tensor<T>& truth,
                                       const std::string& loss) {
    if (heads.empty()) throw std::invalid_argument("no heads");
    int rmax = heads.back()->val.shape[0];
    if (truth.shape != std::vector<int>{rmax, rmax, rmax})
        throw std::invalid_argument(
            "truth resolution must equal the largest head resolution " +
            Tensor<T>::shape_str({rmax, rmax, rmax}) + ", got " +
            Tensor<T>::shape_str(truth.shape));
    std::vector<VarPtr<T>> terms;
    for (const auto& h : heads) {
        int r = h->val.shape[0];
        if (rmax % r != 0)
            throw std::invalid_argument("head resolution does not divide truth");
        Tensor<T> target = downsample(truth, rmax / r);
        terms.push_back(loss == "bce" ? bce_loss(h, target) : l2_loss(h, target));
    }
    return terms;
}

// Eq.-style weighted deep-supervision loss over all heads.
template <class T>
VarPtr<T> deep_supervision_loss(const std::vector<VarPtr<T>>& heads,
                                const Tensor<T>& truth,
                                const TrainConfig& cfg) {
    auto terms = head_loss_terms(heads, truth, cfg.loss);
    auto wd = cfg.head_weights(terms.size());
    std::vector<T> w(wd.begin(), wd.end());
    return weighted_sum(terms, w);
}

namespace detail {

template <class T>
struct AdamState {
    std::vector<std::vector<T>> m, v;
    long t = 0;
};

template <class T>
void apply_step(Network<T>& net, const TrainConfig& cfg, double scale,
                AdamState<T>& adam) {
    const T lr = static_cast<T>(cfg.learning_rate);
    if (cfg.optimizer == "sgd") {
        for (auto& p : net.params)
            for (std::size_t i = 0; i < p->grad.v.size(); ++i)
                p->val.v[i] -= lr * static_cast<T>(scale) * p->grad.v[i];
        return;
    }
    const T b1 = static_cast<T>(0.9), b2 = static_cast<T>(0.999);
    const T eps = static_cast<T>(1e-8);
    if (adam.m.empty()) {
        adam.m.resize(net.params.size());
        adam.v.resize(net.params.size());
        for (std::size_t k = 0; k < net.params.size(); ++k) {
            adam.m[k].assign(net.params[k]->val.v.size(), T{0});
            adam.v[k].assign(net.params[k]->val.v.size(), T{0});
        }
    }
    ++adam.t;
    T c1 = T{1} - static_cast<T>(std::pow(b1, adam.t));
    T c2 = T{1} - static_cast<T>(std::pow(b2, adam.t));
    for (std::size_t k = 0; k < net.params.size(); ++k) {
        auto& p = *net.params[k];
        for (std::size_t i = 0; i < p.grad.v.size(); ++i) {
            T g = static_cast<T>(scale) * p.grad.v[i];
            adam.m[k][i] = b1 * adam.m[k][i] + (T{1} - b1) * g;
            adam.v[k][i] = b2 * adam.v[k][i] + (T{1} - b2) * g * g;
            T mh = adam.m[k][i] / c1, vh = adam.v[k][i] / c2;
            p.val.v[i] -= lr * mh / (std::sqrt(vh) + eps);
        }
    }
}

}  // namespace detail

// Seeded mini-batch training. Deterministic for a fixed seed (single worker).
// Writes a JSON-lines log when log_path is non-empty. Throws on NaN loss with
// the offending epoch index.
template <class T>
std::vector<EpochStats> train(Network<T>& net, const TrainConfig& cfg,
                              const std::vector<Sample<T>>& train_set,
                              const std::vector<Sample<T>>& val_set,
                              const std::string& log_path = "") {
    if (train_set.empty()) throw std::invalid_argument("empty training set");
    std::size_t heads = net.config.head_resolutions.size();
    cfg.validate(heads);
    auto weights = cfg.head_weights(heads);

    std::ofstream log;
    if (!log_path.empty()) {
        log.open(log_path);
        if (!log) throw std::runtime_error("cannot open training log " + log_path);
    }

    std::vector<EpochStats> history;
    detail::AdamState<T> adam;
    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Seeded Fisher-Yates shuffle, one stream per epoch.
        RngStream rng(cfg.seed, 0x7261696eULL + epoch);
        for (std::size_t i = order.size(); i > 1; --i) {
            std::size_t j = rng.next_u64() % i;
            std::swap(order[i - 1], order[j]);
        }

        EpochStats st;
        st.epoch = epoch;
        st.head_losses.assign(heads, 0.0);
        std::size_t cursor = 0;
        while (cursor < order.size()) {
            std::size_t batch = std::min<std::size_t>(cfg.batch_size,
                                                      order.size() - cursor);
            net.zero_grad();
            for (std::size_t b = 0; b < batch; ++b) {
                const Sample<T>& s = train_set[order[cursor + b]];
                auto outs = net.forward(s.image);
                auto terms = head_loss_terms(outs, s.truth, cfg.loss);
                for (std::size_t h = 0; h < heads; ++h)
                    st.head_losses[h] += static_cast<double>(terms[h]->val.v[0]);
                std::vector<T> w(weights.begin(), weights.end());
                auto loss = weighted_sum(terms, w);
                backward(loss);
            }
            detail::apply_step(net, cfg, 1.0 / static_cast<double>(batch), adam);
            cursor += batch;
        }
        for (double& h : st.head_losses) h /= train_set.size();
        for (std::size_t h = 0; h < heads; ++h)
            st.combined += weights[h] * st.head_losses[h];

        if (!val_set.empty()) {
            for (const Sample<T>& s : val_set) {
                auto outs = net.forward(s.image);
                auto terms = head_loss_terms(outs, s.truth, cfg.loss);
                for (std::size_t h = 0; h < heads; ++h)
                    st.val_combined +=
                        weights[h] * static_cast<double>(terms[h]->val.v[0]);
            }
            st.val_combined /= val_set.size();
        }

        if (!std::isfinite(st.combined) || !std::isfinite(st.val_combined))
            throw std::runtime_error("training diverged (non-finite loss) at epoch " +
                                     std::to_string(epoch));

        if (log) {
            nlohmann::json line = {{"epoch", st.epoch},
                                   {"head_losses", st.head_losses},
                                   {"combined", st.combined},
                                   {"val_combined", st.val_combined}};
            log << line.dump() << "\n";
        }
        history.push_back(st);
    }
    return history;
}

// Forward pass to a physical volume: largest head rescaled from occupancy to
// density by `density_scale`, with grid geometry attached.
template <class T>
DensityVolume reconstruct(const Network<T>& net, const Tensor<T>& image,
                          double density_scale, const GridSpec& grid) {
    auto outs = net.forward(image);
    const Tensor<T>& top = outs.back()->val;
    if (grid.resolution != top.shape[0])
        throw std::invalid_argument("grid resolution must match the largest head");
    DensityVolume v(grid);
    const int r = grid.resolution;
    // Tensor layout [z][y][x] matches the volume's x-fastest indexing.
    for (int z = 0; z < r; ++z)
        for (int y = 0; y < r; ++y)
            for (int x = 0; x < r; ++x)
                v.at(x, y, z) = static_cast<float>(
                    density_scale *
                    top.v[(static_cast<std::size_t>(z) * r + y) * r + x]);
    return v;
}

}  // namespace shellforge::nn
