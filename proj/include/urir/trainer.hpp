#pragma once
// Training: negative sampling, the BCE + L2 objective, and the epoch
// loop with per-epoch validation AUC and best-checkpoint retention.
//
// Negatives are drawn once up front (positives:negatives defaults to
// 4:1), per-epoch validation scores a held-out slice of training
// positives, and the whole run is deterministic for a fixed seed.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "urir/binding.hpp"
#include "urir/eval.hpp"
#include "urir/graph_store.hpp"
#include "urir/item_encoder.hpp"
#include "urir/params.hpp"
#include "urir/rng.hpp"
#include "urir/scoring.hpp"
#include "urir/user_encoder.hpp"

namespace urir {

struct NegRatio {
    int positives = 4;
    int negatives = 1;
};

enum class AucMode { PerList, Global };

struct TrainConfig {
    int d = 4;
    int d_h = 0; // 0 = follow d
    int k = 4;
    int L = 2;
    int n = 5;
    double learning_rate = 0.02;
    int epochs = 10;
    int batch_size = 256;
    double lambda = 0.001;
    NegRatio neg_ratio;
    uint64_t seed = 7;

    UserEncoderKind user_encoder = UserEncoderKind::Rnn;
    HistoryMode history_mode = HistoryMode::LastN;
    bool attention_logit_relu = true;
    RippleOptions ripple;

    double split_ratio = 0.7;
    int cold_start_max = 20;
    int eval_negatives = 50;
    double val_fraction = 0.1;
    AucMode auc_mode = AucMode::PerList;
    bool all_test_positives = false;
    std::vector<int> ks = {1, 2, 4, 5, 6, 8, 10};

    TrainConfig resolved() const {
        TrainConfig c = *this;
        if (c.d_h == 0) c.d_h = c.d;
        return c;
    }

    void validate() const {
        if (d <= 0 || k <= 0 || L <= 0 || n <= 0) {
            throw ConfigError("config: d, k, L and n must be positive");
        }
        if (d_h < 0) throw ConfigError("config: d_h must be >= 0 (0 follows d)");
        if (learning_rate <= 0.0) throw ConfigError("config: learning_rate must be positive");
        if (epochs < 0) throw ConfigError("config: epochs must be >= 0");
        if (batch_size <= 0) throw ConfigError("config: batch_size must be positive");
        if (lambda < 0.0) throw ConfigError("config: lambda must be >= 0");
        if (neg_ratio.positives <= 0 || neg_ratio.negatives <= 0) {
            throw ConfigError("config: neg_ratio must be a pair of positive integers");
        }
        if (split_ratio <= 0.0 || split_ratio >= 1.0) {
            throw ConfigError("config: split_ratio must be in (0,1)");
        }
        if (cold_start_max < 0) throw ConfigError("config: cold_start_max must be >= 0");
        if (eval_negatives <= 0) throw ConfigError("config: eval_negatives must be positive");
        if (val_fraction < 0.0 || val_fraction >= 1.0) {
            throw ConfigError("config: val_fraction must be in [0,1)");
        }
        if (ks.empty()) throw ConfigError("config: ks must not be empty");
        for (int k_ : ks) {
            if (k_ <= 0) throw ConfigError("config: every K must be positive");
        }
    }

    // Per-dataset defaults as tuned for the three reference datasets.
    static TrainConfig preset(const std::string& name) {
        TrainConfig c;
        if (name == "job") {
            c.learning_rate = 0.02;
            c.epochs = 11;
            c.d = 8;
            c.k = 4;
            c.L = 1;
            c.n = 5;
            c.lambda = 0.001;
            c.batch_size = 256;
        } else if (name == "ml") {
            c.learning_rate = 0.05;
            c.epochs = 10;
            c.d = 64;
            c.k = 16;
            c.L = 1;
            c.n = 5;
            c.lambda = 0.0001;
            c.batch_size = 256;
        } else if (name == "yelp") {
            c.learning_rate = 0.05;
            c.epochs = 6;
            c.d = 64;
            c.k = 16;
            c.L = 1;
            c.n = 5;
            c.lambda = 0.0001;
            c.batch_size = 256;
        } else {
            throw ConfigError("unknown preset: " + name + " (expected job, ml or yelp)");
        }
        return c;
    }
};

struct TrainExample {
    UserId user = 0;
    ItemId item = 0;
    double label = 0.0; // 1 = interacted, 0 = sampled negative
};

// ---- negative sampling -----------------------------------------------------

struct NegativeSamplingResult {
    std::vector<TrainExample> examples;
    int32_t users_without_eligible = 0;
};

// Per user: ceil(positives * neg/pos) items drawn without replacement
// from catalog items the user never interacted with (train or test).
inline NegativeSamplingResult sample_negatives(
    const std::unordered_map<UserId, std::vector<ItemId>>& positives_per_user,
    const std::unordered_map<UserId, std::unordered_set<ItemId>>& interacted,
    const std::vector<ItemId>& catalog, NegRatio ratio, uint64_t seed) {
    if (ratio.positives <= 0 || ratio.negatives <= 0) {
        throw ConfigError("sample_negatives: ratio must be positive");
    }
    std::vector<UserId> users;
    users.reserve(positives_per_user.size());
    for (const auto& [u, items] : positives_per_user) {
        if (!items.empty()) users.push_back(u);
    }
    std::sort(users.begin(), users.end());

    NegativeSamplingResult res;
    for (UserId u : users) {
        const int64_t pos = static_cast<int64_t>(positives_per_user.at(u).size());
        const int64_t want =
            (pos * ratio.negatives + ratio.positives - 1) / ratio.positives; // ceil
        const auto& seen = interacted.at(u);
        std::vector<ItemId> eligible;
        for (ItemId v : catalog) {
            if (!seen.count(v)) eligible.push_back(v);
        }
        if (eligible.empty()) {
            ++res.users_without_eligible;
            continue;
        }
        const size_t take = std::min<size_t>(static_cast<size_t>(want), eligible.size());
        Rng rng(sub_seed(seed, Stream::Negatives, static_cast<uint64_t>(u)));
        for (size_t i : rng.sample_without_replacement(eligible.size(), take)) {
            res.examples.push_back({u, eligible[i], 0.0});
        }
    }
    return res;
}

// ---- prediction and loss -----------------------------------------------------

// r = sigmoid(u . v)
inline double predict(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) {
        throw DimensionError("predict: lengths " + std::to_string(u.size()) + " vs " +
                             std::to_string(v.size()));
    }
    double acc = 0.0;
    for (size_t i = 0; i < u.size(); ++i) acc += u[i] * v[i];
    return Tape::stable_sigmoid(acc);
}

// Everything a forward pass reads besides the parameters.
struct ForwardData {
    const std::map<ItemId, RippleSets>& ripples;
    const std::unordered_map<UserId, std::vector<ItemId>>& histories;
    int d = 0;
    int L = 1;
    bool attention_logit_relu = true;
    UserEncoderKind user_encoder = UserEncoderKind::Rnn;
};

// Mean BCE over the batch plus lambda * sum of squared parameter norms.
// With with_grad, gradients (including the L2 term) land in params.grad.
inline double batch_loss_impl(const std::vector<TrainExample>& batch, ModelParams& params,
                              const ForwardData& fwd, double lambda, bool with_grad) {
    if (batch.empty()) throw DataError("batch_loss: empty batch");
    Tape tape(with_grad);
    ParamBinding bind(tape, params, fwd.attention_logit_relu);
    EmbeddingVars emb = bind.embeddings();
    std::unordered_map<ItemId, Var> item_cache;
    std::unordered_map<UserId, Var> user_cache;

    auto item_var = [&](ItemId v) {
        auto it = item_cache.find(v);
        if (it != item_cache.end()) return it->second;
        auto rit = fwd.ripples.find(v);
        if (rit == fwd.ripples.end()) {
            throw IndexError("batch_loss: no ripple sets for item " + std::to_string(v));
        }
        const Var x = encode_item(tape, rit->second, v, fwd.d, fwd.L, emb, bind.attention()).vec;
        item_cache.emplace(v, x);
        return x;
    };
    auto user_var = [&](UserId u) {
        auto it = user_cache.find(u);
        if (it != user_cache.end()) return it->second;
        std::vector<Var> reps;
        auto hit = fwd.histories.find(u);
        if (hit != fwd.histories.end()) {
            for (ItemId v : hit->second) reps.push_back(item_var(v));
        }
        const Var ue = bind.user(u);
        const Var x = fwd.user_encoder == UserEncoderKind::Rnn
                          ? encode_user(tape, ue, reps, fwd.d, bind.rnn())
                          : encode_user_ablation(tape, ue, reps);
        user_cache.emplace(u, x);
        return x;
    };

    std::vector<Var> losses;
    losses.reserve(batch.size());
    for (const TrainExample& ex : batch) {
        const Var prob = tape.sigmoid(tape.dot(user_var(ex.user), item_var(ex.item)));
        const Var l = tape.bce(prob, ex.label);
        if (!std::isfinite(tape.scalar(l))) {
            throw NumericError("batch_loss: non-finite loss at example (user=" +
                               std::to_string(ex.user) + ", item=" + std::to_string(ex.item) + ")");
        }
        losses.push_back(l);
    }
    const Var total = tape.mean(losses);
    double loss = tape.scalar(total);
    if (lambda > 0.0) loss += lambda * params.sum_squares();
    if (with_grad) {
        params.zero_all_grads();
        tape.backward(total);
        if (lambda > 0.0) {
            params.for_each([&](const char*, Tensor& t) {
                for (size_t i = 0; i < t.values.size(); ++i) t.grad[i] += 2.0 * lambda * t.values[i];
            });
        }
    }
    if (!std::isfinite(loss)) throw NumericError("batch_loss: non-finite total loss");
    return loss;
}

inline double batch_loss(const std::vector<TrainExample>& batch, ModelParams& params,
                         const ForwardData& fwd, double lambda) {
    return batch_loss_impl(batch, params, fwd, lambda, false);
}

// ---- training --------------------------------------------------------------

// In-memory prepared dataset: split interactions, sampled negatives and
// prebuilt validation candidate lists.
struct Dataset {
    KnowledgeGraph kg;
    int32_t num_users = 0;
    int32_t num_entities = 0;
    int32_t num_relations = 0;
    std::vector<ItemId> catalog; // ascending
    std::vector<Interaction> train_fit;
    std::vector<Interaction> val;
    std::vector<Interaction> test;
    std::vector<TrainExample> negatives;
    std::vector<RankedList> val_lists; // scaffolds: candidates[0] is the positive

    std::unordered_map<UserId, std::vector<ItemId>> history_pool() const {
        std::unordered_map<UserId, std::vector<ItemId>> pool;
        for (const Interaction& r : train_fit) pool[r.user].push_back(r.item);
        return pool;
    }
};

// Per-user view over a dataset. train_items covers only the fitted
// positives; the exclusion set covers everything the user touched.
inline UserIndex index_from_dataset(const Dataset& data) {
    UserIndex idx;
    for (const Interaction& r : data.train_fit) {
        idx.train_items[r.user].push_back(r.item);
        idx.interacted[r.user].insert(r.item);
    }
    for (const Interaction& r : data.val) idx.interacted[r.user].insert(r.item);
    for (const Interaction& r : data.test) {
        idx.test_items[r.user].push_back(r.item);
        idx.interacted[r.user].insert(r.item);
    }
    return idx;
}

struct ValHoldout {
    std::vector<Interaction> train_fit;
    std::vector<Interaction> val;
};

// Holds out ~fraction of training positives for per-epoch validation,
// never taking a user's last remaining positive. Record order preserved.
inline ValHoldout hold_out_validation(const std::vector<Interaction>& train, double fraction,
                                      uint64_t seed) {
    std::unordered_map<UserId, int> counts;
    for (const Interaction& r : train) ++counts[r.user];
    std::vector<size_t> candidates;
    for (size_t i = 0; i < train.size(); ++i) {
        if (counts[train[i].user] >= 2) candidates.push_back(i);
    }
    size_t want = static_cast<size_t>(std::floor(fraction * static_cast<double>(train.size())));
    std::vector<char> held(train.size(), 0);
    if (want > 0 && !candidates.empty()) {
        Rng rng(sub_seed(seed, Stream::ValHoldout));
        rng.shuffle(candidates);
        for (size_t i = 0; i < candidates.size() && want > 0; ++i) {
            const size_t idx = candidates[i];
            if (counts[train[idx].user] >= 2) {
                held[idx] = 1;
                --counts[train[idx].user];
                --want;
            }
        }
    }
    ValHoldout out;
    for (size_t i = 0; i < train.size(); ++i) {
        (held[i] ? out.val : out.train_fit).push_back(train[i]);
    }
    return out;
}

inline std::map<ItemId, RippleSets> build_all_ripples(const KnowledgeGraph& kg,
                                                      const std::vector<ItemId>& items, int L,
                                                      int k, uint64_t seed,
                                                      const RippleOptions& opt = {}) {
    std::map<ItemId, RippleSets> out;
    for (ItemId v : items) {
        out.emplace(v, build_ripple_sets(kg, v, L, k,
                                         sub_seed(seed, Stream::RippleItem, static_cast<uint64_t>(v)),
                                         opt));
    }
    return out;
}

struct EpochRow {
    int epoch = 0;
    double train_loss = 0.0;
    double val_auc = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
    ModelParams params; // best-validation checkpoint (last epoch when no validation set)
    int best_epoch = 0;
    double best_val_auc = std::numeric_limits<double>::quiet_NaN();
    std::vector<EpochRow> log;
    bool diverged = false;
};

inline TrainResult train(const TrainConfig& config, const Dataset& data,
                         const std::map<ItemId, RippleSets>* precomputed_ripples = nullptr) {
    const TrainConfig cfg = config.resolved();
    cfg.validate();
    if (data.train_fit.empty()) throw DataError("train: no training interactions");

    ModelDims dims;
    dims.d = cfg.d;
    dims.d_h = cfg.d_h;
    dims.num_users = std::max<int32_t>(1, data.num_users);
    dims.num_entities = std::max<int32_t>(1, data.num_entities);
    dims.num_relations = std::max<int32_t>(1, data.num_relations);

    std::map<ItemId, RippleSets> built;
    if (precomputed_ripples == nullptr) {
        built = build_all_ripples(data.kg, data.catalog, cfg.L, cfg.k, cfg.seed, cfg.ripple);
    }
    const std::map<ItemId, RippleSets>& ripples = precomputed_ripples ? *precomputed_ripples : built;

    std::unordered_map<UserId, std::vector<ItemId>> histories;
    for (const auto& [u, items] : data.history_pool()) {
        histories.emplace(u, build_history(u, items, cfg.n, cfg.history_mode, cfg.seed).items);
    }

    std::vector<TrainExample> examples;
    examples.reserve(data.train_fit.size() + data.negatives.size());
    for (const Interaction& r : data.train_fit) examples.push_back({r.user, r.item, 1.0});
    examples.insert(examples.end(), data.negatives.begin(), data.negatives.end());

    ForwardData fwd{ripples, histories, cfg.d, cfg.L, cfg.attention_logit_relu, cfg.user_encoder};

    TrainResult result;
    ModelParams params = init_params(dims, cfg.seed);
    AdamState adam = AdamState::create(params, cfg.learning_rate);
    result.params = params;

    auto val_auc_now = [&]() {
        if (data.val_lists.empty()) return std::numeric_limits<double>::quiet_NaN();
        ScoringContext ctx(params, ripples, histories,
                           {cfg.L, cfg.attention_logit_relu, cfg.user_encoder});
        auto scorer = [&](UserId u, ItemId v) { return ctx.score(u, v); };
        double acc = 0.0;
        for (const RankedList& scaffold : data.val_lists) {
            RankedList list = scaffold;
            rank_and_score(scorer, list);
            acc += user_auc(list);
        }
        return acc / static_cast<double>(data.val_lists.size());
    };

    std::vector<size_t> order(examples.size());
    std::iota(order.begin(), order.end(), size_t{0});
    bool have_best = false;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        try {
            Rng rng(sub_seed(cfg.seed, Stream::EpochShuffle, static_cast<uint64_t>(epoch)));
            rng.shuffle(order);
            double loss_sum = 0.0;
            for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
                const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
                std::vector<TrainExample> batch;
                batch.reserve(end - start);
                for (size_t i = start; i < end; ++i) batch.push_back(examples[order[i]]);
                const double loss = batch_loss_impl(batch, params, fwd, cfg.lambda, true);
                loss_sum += loss * static_cast<double>(batch.size());
                adam_step(params, adam);
            }
            EpochRow row;
            row.epoch = epoch;
            row.train_loss = loss_sum / static_cast<double>(examples.size());
            row.val_auc = val_auc_now();
            result.log.push_back(row);
            if (data.val_lists.empty()) {
                result.params = params; // no validation: keep the latest
                result.best_epoch = epoch;
            } else if (!have_best || row.val_auc > result.best_val_auc) {
                have_best = true;
                result.params = params;
                result.best_epoch = epoch;
                result.best_val_auc = row.val_auc;
            }
        } catch (const NumericError&) {
            result.diverged = true; // keep the last good checkpoint
            break;
        }
    }
    return result;
}

} // namespace urir
