#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "shellforge/nn/autodiff.hpp"
#include "shellforge/rng.hpp"

namespace shellforge::nn {

struct NetworkConfig {
    int input_size = 64;                       // square input, pixels
    std::vector<int> encoder_channels = {8, 16, 32, 32};
    int bottleneck_dim = 1024;                 // reshaped to [dim/64, 4, 4, 4]
    std::vector<int> head_resolutions = {16, 32};
    std::string activation = "relu";
    std::string output_nonlinearity = "sigmoid";

    void validate() const {
        if (input_size < 8) throw std::invalid_argument("input_size too small");
        if (encoder_channels.empty())
            throw std::invalid_argument("encoder_channels empty");
        // Each strided conv halves the spatial size; the encoder must land
        // exactly on the 4x4 bottleneck plane.
        int s = input_size;
        for (std::size_t i = 0; i < encoder_channels.size(); ++i) {
            if (encoder_channels[i] <= 0)
                throw std::invalid_argument("encoder layer " + std::to_string(i) +
                                            ": channel count must be positive");
            if (s % 2 != 0)
                throw std::invalid_argument(
                    "encoder layer " + std::to_string(i) +
                    ": odd spatial size " + std::to_string(s));
            s /= 2;
        }
        if (s != 4)
            throw std::invalid_argument(
                "encoder_channels length inconsistent with input_size: final "
                "plane is " + std::to_string(s) + ", expected 4");
        if (bottleneck_dim <= 0 || bottleneck_dim % 64 != 0)
            throw std::invalid_argument("bottleneck_dim must be a positive multiple of 64");
        if (head_resolutions.empty())
            throw std::invalid_argument("head_resolutions empty");
        int prev = 4;
        for (std::size_t i = 0; i < head_resolutions.size(); ++i) {
            int r = head_resolutions[i];
            bool ok = r > prev && (i == 0 ? (r % 4 == 0 && ((r / 4) & (r / 4 - 1)) == 0)
                                          : r == 2 * prev);
            if (!ok)
                throw std::invalid_argument(
                    "head " + std::to_string(i) +
                    ": resolutions must be strictly increasing, each double the "
                    "previous, reachable from the 4^3 bottleneck by doubling");
            prev = r;
        }
        if (activation != "relu")
            throw std::invalid_argument("unknown activation: " + activation);
        if (output_nonlinearity != "sigmoid" && output_nonlinearity != "linear")
            throw std::invalid_argument("unknown output_nonlinearity: " +
                                        output_nonlinearity);
    }
};

// Encoder-decoder network. Parameters live in leaf autodiff nodes so gradient
// accumulation across a batch lands directly in Node::grad.
template <class T>
class Network {
  public:
    NetworkConfig config;
    std::vector<std::string> param_names;
    std::vector<VarPtr<T>> params;

    explicit Network(NetworkConfig cfg, std::uint64_t seed = 0)
        : config(std::move(cfg)) {
        config.validate();
        build(seed);
    }

    // Heads in config order (smallest resolution first), each [R, R, R].
    std::vector<VarPtr<T>> forward(const Tensor<T>& image) const {
        const int n = config.input_size;
        if (image.shape != std::vector<int>{n, n})
            throw std::invalid_argument(
                "forward: input layer expects " +
                Tensor<T>::shape_str({n, n}) + ", got " +
                Tensor<T>::shape_str(image.shape));

        auto x = reshape(constant(image), {1, n, n});
        std::size_t pi = 0;
        for (std::size_t i = 0; i < config.encoder_channels.size(); ++i) {
            auto w = params[pi++];
            auto b = params[pi++];
            x = relu(conv2d(x, w, b, 2, 1));
        }
        // Flatten the 4x4 feature plane through the fully connected bottleneck.
        int flat = config.encoder_channels.back() * 16;
        x = reshape(x, {flat});
        x = relu(linear(x, params[pi], params[pi + 1]));
        pi += 2;
        auto cube = reshape(x, {config.bottleneck_dim / 64, 4, 4, 4});

        std::vector<VarPtr<T>> heads;
        int res = 4;
        std::size_t next_head = 0;
        while (next_head < config.head_resolutions.size()) {
            auto w = params[pi++];
            auto b = params[pi++];
            cube = relu(conv_transpose3d(cube, w, b, 2, 0));
            res *= 2;
            if (res == config.head_resolutions[next_head]) {
                auto hw = params[pi++];
                auto hb = params[pi++];
                auto h = conv_transpose3d(cube, hw, hb, 1, 0);
                if (config.output_nonlinearity == "sigmoid") h = sigmoid(h);
                heads.push_back(reshape(h, {res, res, res}));
                ++next_head;
            }
        }
        return heads;
    }

    void zero_grad() {
        for (auto& p : params) p->zero_grad();
    }

  private:
    void add_param(const std::string& name, std::vector<int> shape, int fan_in,
                   std::uint64_t seed) {
        Tensor<T> t(std::move(shape));
        RngStream rng(seed, 0x4e4e0000ULL + params.size());
        double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (T& v : t.v) v = static_cast<T>(rng.uniform(-bound, bound));
        param_names.push_back(name);
        params.push_back(make_leaf(std::move(t), true));
    }

    void build(std::uint64_t seed) {
        int cin = 1;
        for (std::size_t i = 0; i < config.encoder_channels.size(); ++i) {
            int cout = config.encoder_channels[i];
            std::string tag = "enc" + std::to_string(i);
            add_param(tag + ".w", {cout, cin, 3, 3}, cin * 9, seed);
            add_param(tag + ".b", {cout}, cin * 9, seed);
            cin = cout;
        }
        int flat = cin * 16;
        add_param("fc.w", {config.bottleneck_dim, flat}, flat, seed);
        add_param("fc.b", {config.bottleneck_dim}, flat, seed);

        int c = config.bottleneck_dim / 64;
        int res = 4;
        std::size_t next_head = 0;
        int stage = 0;
        while (next_head < config.head_resolutions.size()) {
            int cout = std::max(4, c / 2);
            std::string tag = "dec" + std::to_string(stage++);
            add_param(tag + ".w", {c, cout, 2, 2, 2}, c * 8, seed);
            add_param(tag + ".b", {cout}, c * 8, seed);
            c = cout;
            res *= 2;
            if (res == config.head_resolutions[next_head]) {
                std::string ht = "head" + std::to_string(res);
                add_param(ht + ".w", {c, 1, 1, 1, 1}, c, seed);
                add_param(ht + ".b", {1}, c, seed);
                ++next_head;
            }
        }
    }
};

}  // namespace shellforge::nn
