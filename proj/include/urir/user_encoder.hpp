#pragma once
// User history construction and the user encoders.
//
// The default encoder unrolls h_i = ReLU(W v_i + H h_{i-1} + U u) over
// the history with h_0 = 0 and takes the final hidden state. The
// ablation encoder drops the recurrence: u_hat = u + sum of history item
// representations. Both fall back to the raw user embedding when the
// history is empty.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "urir/autodiff.hpp"
#include "urir/errors.hpp"
#include "urir/rng.hpp"
#include "urir/types.hpp"

namespace urir {

enum class HistoryMode { LastN, FirstN, RandomN };

enum class UserEncoderKind { Rnn, Sum };

struct UserHistory {
    UserId user = 0;
    std::vector<ItemId> items; // record order, length <= n
};

// Keeps up to n of the user's training interactions. LastN (default)
// keeps the most recent under file ordering; RandomN picks a seeded
// subset but preserves record order within it.
inline UserHistory build_history(UserId user, const std::vector<ItemId>& train_items_in_order,
                                 int n, HistoryMode mode = HistoryMode::LastN,
                                 uint64_t seed = 0) {
    if (n < 1) throw ConfigError("build_history: n must be >= 1");
    UserHistory h;
    h.user = user;
    const size_t total = train_items_in_order.size();
    const size_t keep = std::min(static_cast<size_t>(n), total);
    switch (mode) {
        case HistoryMode::LastN:
            h.items.assign(train_items_in_order.end() - static_cast<int64_t>(keep),
                           train_items_in_order.end());
            break;
        case HistoryMode::FirstN:
            h.items.assign(train_items_in_order.begin(),
                           train_items_in_order.begin() + static_cast<int64_t>(keep));
            break;
        case HistoryMode::RandomN: {
            Rng rng(sub_seed(seed, Stream::History, static_cast<uint64_t>(user)));
            auto picks = rng.sample_without_replacement(total, keep);
            std::sort(picks.begin(), picks.end());
            for (size_t i : picks) h.items.push_back(train_items_in_order[i]);
            break;
        }
    }
    return h;
}

struct RnnVars {
    Var W = Tape::kNone;
    Var H = Tape::kNone;
    Var U = Tape::kNone;
};

// h_i = ReLU(W v_i + H h_prev + U u)
inline Var rnn_step(Tape& tape, Var v_i, Var h_prev, Var u_emb, const RnnVars& rnn) {
    return tape.relu(
        tape.addn({tape.matvec(rnn.W, v_i), tape.matvec(rnn.H, h_prev), tape.matvec(rnn.U, u_emb)}));
}

inline Var encode_user(Tape& tape, Var u_emb, const std::vector<Var>& history_reps, int d,
                       const RnnVars& rnn) {
    if (history_reps.empty()) return u_emb;
    Var h = tape.zeros(d);
    for (Var v : history_reps) h = rnn_step(tape, v, h, u_emb, rnn);
    return h;
}

inline Var encode_user_ablation(Tape& tape, Var u_emb, const std::vector<Var>& history_reps) {
    if (history_reps.empty()) return u_emb;
    std::vector<Var> terms;
    terms.reserve(history_reps.size() + 1);
    terms.push_back(u_emb);
    terms.insert(terms.end(), history_reps.begin(), history_reps.end());
    return tape.addn(terms);
}

struct UserRepresentation {
    UserId user = 0;
    std::vector<double> vector;
};

} // namespace urir
