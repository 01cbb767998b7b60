#pragma once
// Split, candidate construction and ranking metrics.
//
// Protocol: users with too many interactions are dropped (cold-start
// filter), each remaining user's records are shuffled and split 7:3 into
// train/test, and evaluation ranks one sampled test positive against
// num_negatives items the user never interacted with. Reported metrics
// are AUC plus Precision/Recall/MRR at each K, averaged per user first.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "urir/errors.hpp"
#include "urir/interactions.hpp"
#include "urir/rng.hpp"
#include "urir/types.hpp"

namespace urir {

struct SplitConfig {
    double train_fraction = 0.7;
    int cold_start_max = 20; // drop users with >= this many interactions; 0 disables
};

struct SplitInteractions {
    std::vector<Interaction> train; // sorted by record_index
    std::vector<Interaction> test;
    int32_t users_retained = 0;
    int32_t users_dropped_cold_start = 0;
    int32_t users_train_only = 0; // < 2 interactions, never evaluated
};

inline SplitInteractions split_interactions(const InteractionLog& log, const SplitConfig& cfg,
                                            uint64_t seed) {
    if (cfg.train_fraction <= 0.0 || cfg.train_fraction >= 1.0) {
        throw ConfigError("split_interactions: train fraction must be in (0,1)");
    }
    std::map<UserId, std::vector<Interaction>> by_user;
    for (const Interaction& r : log.records) by_user[r.user].push_back(r);

    SplitInteractions out;
    for (auto& [user, records] : by_user) {
        const size_t total = records.size();
        if (cfg.cold_start_max > 0 && total >= static_cast<size_t>(cfg.cold_start_max)) {
            ++out.users_dropped_cold_start;
            continue;
        }
        ++out.users_retained;
        if (total < 2) {
            ++out.users_train_only;
            out.train.insert(out.train.end(), records.begin(), records.end());
            continue;
        }
        auto shuffled = records;
        Rng rng(sub_seed(seed, Stream::Split, static_cast<uint64_t>(user)));
        rng.shuffle(shuffled);
        auto test_size = static_cast<size_t>(
            std::lround((1.0 - cfg.train_fraction) * static_cast<double>(total)));
        test_size = std::clamp<size_t>(test_size, 1, total - 1);
        out.train.insert(out.train.end(), shuffled.begin(),
                         shuffled.end() - static_cast<int64_t>(test_size));
        out.test.insert(out.test.end(), shuffled.end() - static_cast<int64_t>(test_size),
                        shuffled.end());
    }
    if (out.train.empty()) {
        throw ConfigError("split_interactions: no users left after cold-start filtering");
    }
    auto by_record = [](const Interaction& a, const Interaction& b) {
        return a.record_index < b.record_index;
    };
    std::sort(out.train.begin(), out.train.end(), by_record);
    std::sort(out.test.begin(), out.test.end(), by_record);
    return out;
}

// Per-user views over a split, used by candidate construction, negative
// sampling and history building.
struct UserIndex {
    std::unordered_map<UserId, std::vector<ItemId>> train_items; // record order
    std::unordered_map<UserId, std::vector<ItemId>> test_items;  // record order
    std::unordered_map<UserId, std::unordered_set<ItemId>> interacted; // train + test

    static UserIndex build(const SplitInteractions& split) {
        UserIndex idx;
        for (const Interaction& r : split.train) {
            idx.train_items[r.user].push_back(r.item);
            idx.interacted[r.user].insert(r.item);
        }
        for (const Interaction& r : split.test) {
            idx.test_items[r.user].push_back(r.item);
            idx.interacted[r.user].insert(r.item);
        }
        return idx;
    }
};

struct RankedList {
    UserId user = 0;
    std::vector<ItemId> candidates; // after ranking: descending score, ties by ascending id
    std::vector<double> scores;
    ItemId positive = 0;
    int rank_of_positive = 0; // 1-based, set by rank_and_score
};

// Scaffold with a caller-chosen positive plus num_negatives items the
// user never interacted with. Candidate slot 0 holds the positive until
// ranking.
inline RankedList build_candidates_for_positive(UserId user, ItemId positive, const UserIndex& idx,
                                                const std::vector<ItemId>& catalog,
                                                int num_negatives, Rng& rng) {
    const auto& interacted = idx.interacted.at(user);
    std::vector<ItemId> eligible;
    eligible.reserve(catalog.size());
    for (ItemId v : catalog) {
        if (!interacted.count(v)) eligible.push_back(v);
    }
    if (eligible.size() < static_cast<size_t>(num_negatives)) {
        throw DataError("build_candidates: user " + std::to_string(user) + " has only " +
                        std::to_string(eligible.size()) + " eligible negatives, protocol needs " +
                        std::to_string(num_negatives));
    }
    RankedList list;
    list.user = user;
    list.positive = positive;
    list.candidates.push_back(positive);
    for (size_t i : rng.sample_without_replacement(eligible.size(), static_cast<size_t>(num_negatives))) {
        list.candidates.push_back(eligible[i]);
    }
    return list;
}

// One test positive sampled per user (the default protocol).
inline RankedList build_candidates(UserId user, const UserIndex& idx,
                                   const std::vector<ItemId>& catalog, int num_negatives,
                                   uint64_t seed,
                                   Stream stream = Stream::EvalCandidates) {
    auto tit = idx.test_items.find(user);
    if (tit == idx.test_items.end() || tit->second.empty()) {
        throw DataError("build_candidates: user " + std::to_string(user) + " has no test positives");
    }
    Rng rng(sub_seed(seed, stream, static_cast<uint64_t>(user)));
    const ItemId positive = tit->second[rng.below(tit->second.size())];
    return build_candidates_for_positive(user, positive, idx, catalog, num_negatives, rng);
}

// Scores all candidates, sorts by (score desc, item asc) and records the
// positive's 1-based rank.
inline void rank_and_score(const std::function<double(UserId, ItemId)>& scorer, RankedList& list) {
    list.scores.resize(list.candidates.size());
    for (size_t i = 0; i < list.candidates.size(); ++i) {
        list.scores[i] = scorer(list.user, list.candidates[i]);
    }
    std::vector<size_t> order(list.candidates.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (list.scores[a] != list.scores[b]) return list.scores[a] > list.scores[b];
        return list.candidates[a] < list.candidates[b];
    });
    std::vector<ItemId> cand;
    std::vector<double> scores;
    cand.reserve(order.size());
    scores.reserve(order.size());
    for (size_t i = 0; i < order.size(); ++i) {
        cand.push_back(list.candidates[order[i]]);
        scores.push_back(list.scores[order[i]]);
        if (cand.back() == list.positive) list.rank_of_positive = static_cast<int>(i) + 1;
    }
    list.candidates = std::move(cand);
    list.scores = std::move(scores);
}

// Per-list AUC: negatives scored strictly below the positive count 1,
// ties count 1/2, divided by the number of negatives.
inline double user_auc(const RankedList& list) {
    if (list.rank_of_positive < 1) throw StateError("user_auc: list has not been ranked");
    double pos_score = 0.0;
    for (size_t i = 0; i < list.candidates.size(); ++i) {
        if (list.candidates[i] == list.positive) pos_score = list.scores[i];
    }
    double below = 0.0, ties = 0.0;
    for (size_t i = 0; i < list.candidates.size(); ++i) {
        if (list.candidates[i] == list.positive) continue;
        if (list.scores[i] < pos_score) below += 1.0;
        else if (list.scores[i] == pos_score) ties += 1.0;
    }
    const double negatives = static_cast<double>(list.candidates.size() - 1);
    return (below + 0.5 * ties) / negatives;
}

// Pooled AUC over all (positive, negative) score pairs across lists.
inline double global_auc(const std::vector<RankedList>& lists) {
    std::vector<double> pos, neg;
    for (const RankedList& list : lists) {
        for (size_t i = 0; i < list.candidates.size(); ++i) {
            (list.candidates[i] == list.positive ? pos : neg).push_back(list.scores[i]);
        }
    }
    if (pos.empty() || neg.empty()) throw StateError("global_auc: need both positives and negatives");
    std::sort(neg.begin(), neg.end());
    double acc = 0.0;
    for (double p : pos) {
        const auto lo = std::lower_bound(neg.begin(), neg.end(), p);
        const auto hi = std::upper_bound(neg.begin(), neg.end(), p);
        acc += static_cast<double>(lo - neg.begin()) + 0.5 * static_cast<double>(hi - lo);
    }
    return acc / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

struct MetricsReport {
    double auc = 0.0;
    std::map<int, double> precision;
    std::map<int, double> recall;
    std::map<int, double> mrr;
    int32_t user_count = 0;
};

// Single-positive metrics per list, averaged within each user and then
// across users. Precision@K = hit/K, Recall@K = hit, MRR@K = 1/rank if
// rank <= K else 0.
inline MetricsReport metrics_at_k(const std::vector<RankedList>& lists, const std::vector<int>& ks) {
    if (lists.empty()) throw DataError("metrics_at_k: no ranked lists");
    struct Acc {
        double auc = 0.0;
        std::map<int, double> p, r, m;
        int n = 0;
    };
    std::map<UserId, Acc> per_user;
    for (const RankedList& list : lists) {
        Acc& a = per_user[list.user];
        a.auc += user_auc(list);
        for (int k : ks) {
            const bool hit = list.rank_of_positive <= k;
            a.p[k] += hit ? 1.0 / k : 0.0;
            a.r[k] += hit ? 1.0 : 0.0;
            a.m[k] += hit ? 1.0 / list.rank_of_positive : 0.0;
        }
        a.n += 1;
    }
    MetricsReport rep;
    rep.user_count = static_cast<int32_t>(per_user.size());
    for (auto& [user, a] : per_user) {
        rep.auc += a.auc / a.n;
        for (int k : ks) {
            rep.precision[k] += a.p[k] / a.n;
            rep.recall[k] += a.r[k] / a.n;
            rep.mrr[k] += a.m[k] / a.n;
        }
    }
    const double users = static_cast<double>(per_user.size());
    rep.auc /= users;
    for (int k : ks) {
        rep.precision[k] /= users;
        rep.recall[k] /= users;
        rep.mrr[k] /= users;
    }
    return rep;
}

} // namespace urir
