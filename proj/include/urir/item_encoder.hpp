#pragma once
// Knowledge-aware attentive item encoding.
//
// Each triple (h, r, t) of a level gets a non-negative logit from a
// 3-layer ReLU MLP over h (+) r (+) t; logits are softmax-normalized per
// level; the level vector is the weighted sum of tail embeddings; the
// item representation averages the L level vectors with the item's own
// embedding, dividing by L+1 regardless of empty levels.

#include <functional>
#include <vector>

#include "urir/autodiff.hpp"
#include "urir/errors.hpp"
#include "urir/graph_store.hpp"
#include "urir/types.hpp"

namespace urir {

// Tape vars for the embedding tables; training binds parameter leaves,
// frozen evaluation binds constant copies.
struct EmbeddingVars {
    std::function<Var(EntityId)> entity;
    std::function<Var(RelationId)> relation;
};

struct AttentionVars {
    Var W1 = Tape::kNone, b1 = Tape::kNone;
    Var W2 = Tape::kNone, b2 = Tape::kNone;
    Var W3 = Tape::kNone, b3 = Tape::kNone;
    bool logit_relu = true; // final ReLU on the scalar logit, as modeled
};

// pi = ReLU(W3 ReLU(W2 ReLU(W1 (h+r+t) + b1) + b2) + b3), scalar.
inline Var triple_logit(Tape& tape, Var h, Var r, Var t, const AttentionVars& att) {
    const Var z0 = tape.concat3(h, r, t);
    const Var z1 = tape.relu(tape.affine(att.W1, z0, att.b1));
    const Var z2 = tape.relu(tape.affine(att.W2, z1, att.b2));
    const Var pre = tape.affine(att.W3, z2, att.b3);
    return att.logit_relu ? tape.relu(pre) : pre;
}

// Softmax over one level's logits. Callers skip empty levels.
inline Var normalize_level(Tape& tape, const std::vector<Var>& logits) {
    if (logits.empty()) throw DimensionError("normalize_level: empty level");
    return tape.softmax(tape.pack_scalars(logits));
}

// v_l = sum_i weights[i] * tail_emb[i]
inline Var aggregate_level(Tape& tape, const std::vector<Var>& tail_embs, Var weights) {
    return tape.weighted_sum(tail_embs, weights);
}

struct ItemEncodingVars {
    Var vec = Tape::kNone;        // the item representation
    std::vector<Var> per_level;   // v_l per level (zero vector when empty)
    std::vector<Var> weights;     // normalized weights per level (kNone when empty)
};

inline ItemEncodingVars encode_item(Tape& tape, const RippleSets& ripple, ItemId item, int d,
                                    int level_count, const EmbeddingVars& emb,
                                    const AttentionVars& att) {
    if (static_cast<int>(ripple.levels.size()) != level_count) {
        throw StateError("encode_item: ripple sets built with L=" +
                         std::to_string(ripple.levels.size()) + " but config has L=" +
                         std::to_string(level_count));
    }
    ItemEncodingVars out;
    std::vector<Var> terms;
    terms.reserve(static_cast<size_t>(level_count) + 1);
    for (int l = 0; l < level_count; ++l) {
        const auto& level = ripple.levels[static_cast<size_t>(l)];
        if (level.empty()) {
            out.per_level.push_back(tape.zeros(d));
            out.weights.push_back(Tape::kNone);
        } else {
            std::vector<Var> logits, tails;
            logits.reserve(level.size());
            tails.reserve(level.size());
            for (const Triple& t : level) {
                logits.push_back(
                    triple_logit(tape, emb.entity(t.head), emb.relation(t.relation), emb.entity(t.tail), att));
                tails.push_back(emb.entity(t.tail));
            }
            const Var w = normalize_level(tape, logits);
            out.per_level.push_back(aggregate_level(tape, tails, w));
            out.weights.push_back(w);
        }
        terms.push_back(out.per_level.back());
    }
    terms.push_back(emb.entity(item));
    out.vec = tape.scale(tape.addn(terms), 1.0 / (level_count + 1));
    return out;
}

// Value-level snapshot for export and inspection.
struct ItemRepresentation {
    ItemId item = 0;
    std::vector<double> vector;
    std::vector<std::vector<double>> per_level;
    std::vector<std::vector<double>> weights; // empty vector for empty levels
};

inline ItemRepresentation extract_item_representation(const Tape& tape, const ItemEncodingVars& enc,
                                                      ItemId item) {
    ItemRepresentation rep;
    rep.item = item;
    rep.vector = tape.values(enc.vec);
    for (Var v : enc.per_level) rep.per_level.push_back(tape.values(v));
    for (Var w : enc.weights) {
        rep.weights.push_back(w == Tape::kNone ? std::vector<double>{} : tape.values(w));
    }
    return rep;
}

} // namespace urir
