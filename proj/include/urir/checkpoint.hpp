#pragma once
// Versioned binary checkpoint: model configuration fingerprint plus all
// parameter tensors. Little-endian, fixed tensor order. Evaluation reads
// the fingerprint back so a checkpoint is scoreable without the original
// command line.

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "urir/errors.hpp"
#include "urir/params.hpp"
#include "urir/trainer.hpp"

namespace urir {

struct CheckpointMeta {
    int32_t d = 0, d_h = 0, L = 0, k = 0, n = 0;
    uint64_t seed = 0;
    uint8_t user_encoder = 0;  // 0 = rnn, 1 = sum
    uint8_t history_mode = 0;  // 0 = last, 1 = first, 2 = random
    uint8_t attention_logit_relu = 1;
    uint8_t ripple_with_replacement = 0;
    uint8_t ripple_exclude_before_sampling = 0;
    int32_t num_users = 0, num_entities = 0, num_relations = 0;

    static CheckpointMeta from_config(const TrainConfig& cfg, int32_t users, int32_t entities,
                                      int32_t relations) {
        const TrainConfig c = cfg.resolved();
        CheckpointMeta m;
        m.d = c.d;
        m.d_h = c.d_h;
        m.L = c.L;
        m.k = c.k;
        m.n = c.n;
        m.seed = c.seed;
        m.user_encoder = c.user_encoder == UserEncoderKind::Sum ? 1 : 0;
        m.history_mode = c.history_mode == HistoryMode::LastN    ? 0
                         : c.history_mode == HistoryMode::FirstN ? 1
                                                                 : 2;
        m.attention_logit_relu = c.attention_logit_relu ? 1 : 0;
        m.ripple_with_replacement = c.ripple.with_replacement ? 1 : 0;
        m.ripple_exclude_before_sampling = c.ripple.exclude_before_sampling ? 1 : 0;
        m.num_users = users;
        m.num_entities = entities;
        m.num_relations = relations;
        return m;
    }

    UserEncoderKind encoder_kind() const {
        return user_encoder == 1 ? UserEncoderKind::Sum : UserEncoderKind::Rnn;
    }
    HistoryMode history_kind() const {
        return history_mode == 0 ? HistoryMode::LastN
               : history_mode == 1 ? HistoryMode::FirstN
                                   : HistoryMode::RandomN;
    }
    RippleOptions ripple_options() const {
        return {ripple_with_replacement == 1, ripple_exclude_before_sampling == 1};
    }
    RippleFingerprint ripple_fingerprint() const {
        return {L, k, seed, ripple_with_replacement == 1, ripple_exclude_before_sampling == 1};
    }
};

namespace detail {

constexpr uint32_t kCheckpointMagic = 0x4B435255; // "URCK" little-endian
constexpr uint32_t kCheckpointVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::istream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
}

inline void write_tensor(std::ostream& out, const Tensor& t) {
    write_pod(out, static_cast<int32_t>(t.shape.size()));
    for (int d : t.shape) write_pod(out, static_cast<int32_t>(d));
    out.write(reinterpret_cast<const char*>(t.values.data()),
              static_cast<std::streamsize>(t.values.size() * sizeof(double)));
}

inline void read_tensor(std::istream& in, Tensor& t) {
    int32_t ndims = 0;
    read_pod(in, ndims);
    if (!in || ndims < 1 || ndims > 4) throw DataError("checkpoint: corrupt tensor header");
    std::vector<int> dims(static_cast<size_t>(ndims));
    int64_t total = 1;
    for (int32_t i = 0; i < ndims; ++i) {
        int32_t d = 0;
        read_pod(in, d);
        if (!in || d <= 0) throw DataError("checkpoint: corrupt tensor dims");
        dims[static_cast<size_t>(i)] = d;
        total *= d;
    }
    t = Tensor::zeros(dims);
    in.read(reinterpret_cast<char*>(t.values.data()),
            static_cast<std::streamsize>(static_cast<size_t>(total) * sizeof(double)));
    if (!in) throw DataError("checkpoint: truncated tensor payload");
}

} // namespace detail

inline void save_checkpoint(const std::string& path, const ModelParams& params,
                            const CheckpointMeta& meta) {
    if (!params.finite()) throw NumericError("save_checkpoint: non-finite parameter values");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    detail::write_pod(out, detail::kCheckpointMagic);
    detail::write_pod(out, detail::kCheckpointVersion);
    detail::write_pod(out, meta);
    params.for_each([&](const char*, const Tensor& t) { detail::write_tensor(out, t); });
    if (!out) throw DataError("checkpoint write failed: " + path);
}

struct Checkpoint {
    ModelParams params;
    CheckpointMeta meta;
};

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    uint32_t magic = 0, version = 0;
    detail::read_pod(in, magic);
    detail::read_pod(in, version);
    if (!in || magic != detail::kCheckpointMagic) {
        throw DataError("not a checkpoint file: " + path);
    }
    if (version != detail::kCheckpointVersion) {
        throw DataError("unsupported checkpoint version " + std::to_string(version) + ": " + path);
    }
    Checkpoint ck;
    detail::read_pod(in, ck.meta);
    if (!in) throw DataError("checkpoint: truncated header: " + path);
    ck.params.d = ck.meta.d;
    ck.params.d_h = ck.meta.d_h;
    ck.params.for_each([&](const char*, Tensor& t) { detail::read_tensor(in, t); });
    if (!ck.params.finite()) throw NumericError("load_checkpoint: non-finite parameter values");
    return ck;
}

} // namespace urir
