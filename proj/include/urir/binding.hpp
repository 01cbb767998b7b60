#pragma once
// Binds ModelParams to tape leaves for a training forward pass. Leaf
// vars are cached so a tensor (or embedding row) used twice in one tape
// contributes one leaf with accumulated gradients.

#include <unordered_map>

#include "urir/autodiff.hpp"
#include "urir/item_encoder.hpp"
#include "urir/params.hpp"
#include "urir/user_encoder.hpp"

namespace urir {

class ParamBinding {
public:
    ParamBinding(Tape& tape, ModelParams& params, bool attention_logit_relu = true)
        : tape_(tape), params_(params) {
        att_.W1 = tape.leaf(params.W1);
        att_.b1 = tape.leaf(params.b1);
        att_.W2 = tape.leaf(params.W2);
        att_.b2 = tape.leaf(params.b2);
        att_.W3 = tape.leaf(params.W3);
        att_.b3 = tape.leaf(params.b3);
        att_.logit_relu = attention_logit_relu;
        rnn_.W = tape.leaf(params.rnn_W);
        rnn_.H = tape.leaf(params.rnn_H);
        rnn_.U = tape.leaf(params.rnn_U);
    }

    const AttentionVars& attention() const { return att_; }
    const RnnVars& rnn() const { return rnn_; }

    Var user(UserId u) { return cached(user_cache_, params_.user_emb, u); }
    Var entity(EntityId e) { return cached(entity_cache_, params_.entity_emb, e); }
    Var relation(RelationId r) { return cached(relation_cache_, params_.relation_emb, r); }

    EmbeddingVars embeddings() {
        return {[this](EntityId e) { return entity(e); },
                [this](RelationId r) { return relation(r); }};
    }

private:
    Var cached(std::unordered_map<int32_t, Var>& cache, Tensor& table, int32_t row) {
        auto it = cache.find(row);
        if (it != cache.end()) return it->second;
        const Var v = tape_.leaf_row(table, row);
        cache.emplace(row, v);
        return v;
    }

    Tape& tape_;
    ModelParams& params_;
    AttentionVars att_;
    RnnVars rnn_;
    std::unordered_map<int32_t, Var> user_cache_, entity_cache_, relation_cache_;
};

} // namespace urir
