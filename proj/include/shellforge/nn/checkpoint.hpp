#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "shellforge/nn/network.hpp"

namespace shellforge::nn {

// Checkpoint file layout: u64 little-endian header length, JSON header bytes,
// then all tensors as little-endian float32. Header offsets count floats from
// the start of the payload.
template <class T>
void save_checkpoint(const Network<T>& net, const std::string& path) {
    nlohmann::json tensors = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (std::size_t i = 0; i < net.params.size(); ++i) {
        const auto& t = net.params[i]->val;
        tensors.push_back({{"name", net.param_names[i]},
                           {"shape", t.shape},
                           {"offset", offset}});
        offset += t.numel();
    }
    nlohmann::json header = {{"format", "shellforge-checkpoint-v1"},
                             {"tensors", tensors},
                             {"float_count", offset}};
    std::string hs = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path);
    std::uint64_t hlen = hs.size();
    char lenb[8];
    for (int i = 0; i < 8; ++i) lenb[i] = static_cast<char>((hlen >> (8 * i)) & 0xff);
    out.write(lenb, 8);
    out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    for (const auto& p : net.params) {
        std::vector<float> buf(p->val.v.begin(), p->val.v.end());
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
    if (!out) throw std::runtime_error("short write on checkpoint " + path);
}

// Loads parameters into an already-constructed network; names and shapes must
// match the network exactly.
template <class T>
void load_checkpoint(Network<T>& net, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read checkpoint " + path);
    char lenb[8];
    in.read(lenb, 8);
    if (!in) throw std::runtime_error("truncated checkpoint " + path);
    std::uint64_t hlen = 0;
    for (int i = 0; i < 8; ++i)
        hlen |= static_cast<std::uint64_t>(static_cast<unsigned char>(lenb[i]))
                << (8 * i);
    std::string hs(hlen, '\0');
    in.read(hs.data(), static_cast<std::streamsize>(hlen));
    if (!in) throw std::runtime_error("truncated checkpoint header " + path);
    nlohmann::json header = nlohmann::json::parse(hs);
    const auto& tensors = header.at("tensors");
    if (tensors.size() != net.params.size())
        throw std::runtime_error("checkpoint tensor count does not match network");

    std::vector<float> payload(header.at("float_count").get<std::uint64_t>());
    in.read(reinterpret_cast<char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(float)));
    if (!in) throw std::runtime_error("truncated checkpoint payload " + path);

    for (std::size_t i = 0; i < net.params.size(); ++i) {
        const auto& entry = tensors[i];
        if (entry.at("name").get<std::string>() != net.param_names[i])
            throw std::runtime_error("checkpoint tensor " + std::to_string(i) +
                                     " name mismatch");
        if (entry.at("shape").get<std::vector<int>>() != net.params[i]->val.shape)
            throw std::runtime_error("checkpoint tensor " + net.param_names[i] +
                                     " shape mismatch");
        std::uint64_t off = entry.at("offset").get<std::uint64_t>();
        auto& dst = net.params[i]->val.v;
        if (off + dst.size() > payload.size())
            throw std::runtime_error("checkpoint offset out of range");
        for (std::size_t j = 0; j < dst.size(); ++j)
            dst[j] = static_cast<T>(payload[off + j]);
    }
}

}  // namespace shellforge::nn
