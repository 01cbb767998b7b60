#pragma once
// Frozen-parameter scoring for evaluation. Runs the same encoders as
// training on a gradient-free tape and caches each item/user
// representation, so a full ranking pass encodes every item once.

#include <map>
#include <unordered_map>
#include <vector>

#include "urir/autodiff.hpp"
#include "urir/graph_store.hpp"
#include "urir/item_encoder.hpp"
#include "urir/params.hpp"
#include "urir/user_encoder.hpp"

namespace urir {

struct EncoderConfig {
    int L = 1;
    bool attention_logit_relu = true;
    UserEncoderKind user_encoder = UserEncoderKind::Rnn;
};

class ScoringContext {
public:
    ScoringContext(const ModelParams& params, const std::map<ItemId, RippleSets>& ripples,
                   const std::unordered_map<UserId, std::vector<ItemId>>& histories,
                   EncoderConfig cfg)
        : params_(params), ripples_(ripples), histories_(histories), cfg_(cfg), tape_(false) {
        att_.W1 = matrix_const(params.W1);
        att_.b1 = vector_const(params.b1);
        att_.W2 = matrix_const(params.W2);
        att_.b2 = vector_const(params.b2);
        att_.W3 = matrix_const(params.W3);
        att_.b3 = vector_const(params.b3);
        att_.logit_relu = cfg.attention_logit_relu;
        rnn_.W = matrix_const(params.rnn_W);
        rnn_.H = matrix_const(params.rnn_H);
        rnn_.U = matrix_const(params.rnn_U);
        emb_.entity = [this](EntityId e) { return entity(e); };
        emb_.relation = [this](RelationId r) { return relation(r); };
    }

    double score(UserId u, ItemId v) {
        const auto uv = tape_.val(user_var(u));
        const auto vv = tape_.val(item_var(v));
        double acc = 0.0;
        for (size_t i = 0; i < uv.size(); ++i) acc += uv[i] * vv[i];
        return Tape::stable_sigmoid(acc);
    }

    std::vector<double> item_vec(ItemId v) { return tape_.values(item_var(v)); }
    std::vector<double> user_vec(UserId u) { return tape_.values(user_var(u)); }

    ItemRepresentation item_representation(ItemId v) {
        item_var(v);
        return extract_item_representation(tape_, item_encodings_.at(v), v);
    }

private:
    Var matrix_const(const Tensor& t) { return tape_.value_matrix(t.values, t.rows(), t.cols()); }
    Var vector_const(const Tensor& t) { return tape_.value(t.values); }

    Var row_const(std::unordered_map<int32_t, Var>& cache, const Tensor& table, int32_t row) {
        auto it = cache.find(row);
        if (it != cache.end()) return it->second;
        const int d = table.cols();
        if (row < 0 || row >= table.rows()) {
            throw IndexError("scoring: row " + std::to_string(row) + " out of range [0," +
                             std::to_string(table.rows()) + ")");
        }
        std::vector<double> v(table.values.begin() + static_cast<int64_t>(row) * d,
                              table.values.begin() + static_cast<int64_t>(row + 1) * d);
        const Var var = tape_.value(std::move(v));
        cache.emplace(row, var);
        return var;
    }

    Var entity(EntityId e) { return row_const(entity_cache_, params_.entity_emb, e); }
    Var relation(RelationId r) { return row_const(relation_cache_, params_.relation_emb, r); }
    Var user_emb(UserId u) { return row_const(user_emb_cache_, params_.user_emb, u); }

    Var item_var(ItemId v) {
        auto it = item_cache_.find(v);
        if (it != item_cache_.end()) return it->second;
        auto rit = ripples_.find(v);
        if (rit == ripples_.end()) {
            throw IndexError("scoring: no ripple sets for item " + std::to_string(v));
        }
        const ItemEncodingVars enc =
            encode_item(tape_, rit->second, v, params_.d, cfg_.L, emb_, att_);
        item_cache_.emplace(v, enc.vec);
        item_encodings_.emplace(v, enc);
        return enc.vec;
    }

    Var user_var(UserId u) {
        auto it = user_cache_.find(u);
        if (it != user_cache_.end()) return it->second;
        std::vector<Var> reps;
        auto hit = histories_.find(u);
        if (hit != histories_.end()) {
            reps.reserve(hit->second.size());
            for (ItemId v : hit->second) reps.push_back(item_var(v));
        }
        const Var ue = user_emb(u);
        const Var out = cfg_.user_encoder == UserEncoderKind::Rnn
                            ? encode_user(tape_, ue, reps, params_.d, rnn_)
                            : encode_user_ablation(tape_, ue, reps);
        user_cache_.emplace(u, out);
        return out;
    }

    const ModelParams& params_;
    const std::map<ItemId, RippleSets>& ripples_;
    const std::unordered_map<UserId, std::vector<ItemId>>& histories_;
    EncoderConfig cfg_;
    Tape tape_;
    AttentionVars att_;
    RnnVars rnn_;
    EmbeddingVars emb_;
    std::unordered_map<int32_t, Var> entity_cache_, relation_cache_, user_emb_cache_;
    std::unordered_map<ItemId, Var> item_cache_;
    std::unordered_map<UserId, Var> user_cache_;
    std::unordered_map<ItemId, ItemEncodingVars> item_encodings_;
};

} // namespace urir
