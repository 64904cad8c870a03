// Copyright 2026 The signpose Authors
// SPDX-License-Identifier: Apache-2.0
//
// Checkpoint container. Layout (all integers little-endian):
//
//   bytes 0-3   magic "SPCK"
//   u32         format version (1)
//   u64         header length L
//   L bytes     UTF-8 JSON header: config echo, class list, epoch, seed,
//               metrics history, optimizer step, and the ordered list of
//               tensors with their shapes
//   then, for each listed tensor in order: its values as IEEE-754 binary64,
//   followed (when the header says "has_optimizer") by the Adam first- and
//   second-moment buffers of the same shape.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "signpose/config.hpp"
#include "signpose/ndcore/adam.hpp"

namespace signpose {

struct NamedTensor {
    std::string name;
    nd::Tensor<double> value;
    bool operator==(const NamedTensor&) const = default;
};

struct Checkpoint {
    TrainConfig config;  // config.model carries the resolved n_classes
    std::vector<std::string> classes;
    int epoch = 0;  // epochs completed when the parameters were captured
    std::vector<NamedTensor> params;
    // Adam state; empty when not captured.
    std::int64_t optimizer_step = 0;
    std::vector<nd::Tensor<double>> adam_m, adam_v;
    std::vector<EpochMetrics> history;

    bool operator==(const Checkpoint& o) const {
        return to_json(config) == to_json(o.config) && classes == o.classes && epoch == o.epoch &&
               params == o.params && optimizer_step == o.optimizer_step && adam_m == o.adam_m &&
               adam_v == o.adam_v && history == o.history;
    }
};

template <class T>
void capture_parameters(Checkpoint& ck, Classifier<T>& model, const nd::AdamState<T>* adam = nullptr) {
    ck.params.clear();
    ck.adam_m.clear();
    ck.adam_v.clear();
    ck.optimizer_step = 0;
    for (auto* p : model.parameters()) ck.params.push_back({p->name, p->value.template cast<double>()});
    if (adam) {
        ck.optimizer_step = adam->step;
        for (const auto& m : adam->m) ck.adam_m.push_back(m.template cast<double>());
        for (const auto& v : adam->v) ck.adam_v.push_back(v.template cast<double>());
    }
}

/// Copies checkpoint parameters into `model`, checking names and shapes.
template <class T>
void restore_parameters(const Checkpoint& ck, Classifier<T>& model, nd::AdamState<T>* adam = nullptr) {
    auto params = model.parameters();
    if (params.size() != ck.params.size())
        throw std::invalid_argument("checkpoint holds " + std::to_string(ck.params.size()) +
                                    " tensors, model expects " + std::to_string(params.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& src = ck.params[i];
        if (src.name != params[i]->name || src.value.shape() != params[i]->value.shape())
            throw std::invalid_argument("checkpoint tensor '" + src.name + "' " + nd::shape_string(src.value.shape()) +
                                        " does not match model tensor '" + params[i]->name + "' " +
                                        nd::shape_string(params[i]->value.shape()));
        params[i]->value = src.value.template cast<T>();
    }
    if (adam && !ck.adam_m.empty()) {
        adam->step = ck.optimizer_step;
        adam->m.clear();
        adam->v.clear();
        for (const auto& m : ck.adam_m) adam->m.push_back(m.template cast<T>());
        for (const auto& v : ck.adam_v) adam->v.push_back(v.template cast<T>());
    }
}

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_tensor(std::string& out, const nd::Tensor<double>& t) {
    for (double v : t.values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
}

class ByteReader {
public:
    explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

    std::string_view take(std::size_t n) {
        if (bytes_.size() - pos_ < n) throw std::runtime_error("checkpoint is truncated");
        auto s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    std::uint64_t u(int width) {
        auto s = take(static_cast<std::size_t>(width));
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i) v |= std::uint64_t{static_cast<unsigned char>(s[i])} << (8 * i);
        return v;
    }

    nd::Tensor<double> tensor(const nd::Shape& shape) {
        nd::Tensor<double> t(shape);
        for (auto& v : t.values()) v = std::bit_cast<double>(u(8));
        return t;
    }

    bool done() const { return pos_ == bytes_.size(); }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline constexpr std::uint32_t kCheckpointVersion = 1;

inline std::string serialize_checkpoint(const Checkpoint& ck) {
    using nlohmann::json;
    json header;
    header["config"] = to_json(ck.config);
    header["classes"] = ck.classes;
    header["epoch"] = ck.epoch;
    header["seed"] = ck.config.seed;
    header["optimizer_step"] = ck.optimizer_step;
    header["has_optimizer"] = !ck.adam_m.empty();
    json hist = json::array();
    for (const auto& m : ck.history) hist.push_back(to_json(m));
    header["history"] = hist;
    json tensors = json::array();
    for (const auto& p : ck.params) tensors.push_back({{"name", p.name}, {"shape", p.value.shape()}});
    header["tensors"] = tensors;
    const std::string h = header.dump();

    std::string out = "SPCK";
    detail::put_u32(out, kCheckpointVersion);
    detail::put_u64(out, h.size());
    out += h;
    const bool opt = !ck.adam_m.empty();
    for (std::size_t i = 0; i < ck.params.size(); ++i) {
        detail::put_tensor(out, ck.params[i].value);
        if (opt) {
            detail::put_tensor(out, ck.adam_m.at(i));
            detail::put_tensor(out, ck.adam_v.at(i));
        }
    }
    return out;
}

inline Checkpoint deserialize_checkpoint(std::string_view bytes) {
    detail::ByteReader r(bytes);
    if (r.take(4) != "SPCK") throw std::runtime_error("not a checkpoint file (bad magic)");
    const auto version = r.u(4);
    if (version != kCheckpointVersion)
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
    const auto hlen = r.u(8);
    const auto header = nlohmann::json::parse(r.take(static_cast<std::size_t>(hlen)));
    Checkpoint ck;
    ck.config = train_config_from_json(header.at("config"));
    ck.classes = header.at("classes").get<std::vector<std::string>>();
    ck.epoch = header.at("epoch").get<int>();
    ck.optimizer_step = header.at("optimizer_step").get<std::int64_t>();
    for (const auto& m : header.at("history")) ck.history.push_back(epoch_metrics_from_json(m));
    const bool opt = header.at("has_optimizer").get<bool>();
    for (const auto& t : header.at("tensors")) {
        const auto shape = t.at("shape").get<nd::Shape>();
        ck.params.push_back({t.at("name").get<std::string>(), r.tensor(shape)});
        if (opt) {
            ck.adam_m.push_back(r.tensor(shape));
            ck.adam_v.push_back(r.tensor(shape));
        }
    }
    if (!r.done()) throw std::runtime_error("checkpoint has trailing bytes");
    return ck;
}

/// Writes via a temporary file and rename so readers never see a partial file.
inline void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write checkpoint '" + tmp + "'");
        const auto bytes = serialize_checkpoint(ck);
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!f) throw std::runtime_error("failed writing checkpoint '" + tmp + "'");
    }
    std::filesystem::rename(tmp, path);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open checkpoint '" + path.string() + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    try {
        return deserialize_checkpoint(ss.str());
    } catch (const std::exception& e) {
        throw std::runtime_error("checkpoint '" + path.string() + "': " + e.what());
    }
}

}  // namespace signpose
