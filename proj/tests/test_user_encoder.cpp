#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "oracles.hpp"
#include "urir/params.hpp"
#include "urir/user_encoder.hpp"

using Catch::Approx;
using urir::build_history;
using urir::HistoryMode;
using urir::ModelParams;
using urir::RnnVars;
using urir::Tape;
using urir::UserHistory;
using urir::Var;

namespace {

RnnVars rnn_from(Tape& tape, ModelParams& p) {
    return {tape.leaf(p.rnn_W), tape.leaf(p.rnn_H), tape.leaf(p.rnn_U)};
}

} // namespace

TEST_CASE("build_history keeps everything under capacity", "[user_encoder]") {
    const UserHistory h = build_history(3, {10, 11, 12}, 5);
    REQUIRE(h.items == std::vector<urir::ItemId>{10, 11, 12});
}

TEST_CASE("build_history keeps the last n in record order", "[user_encoder]") {
    const UserHistory h = build_history(3, {1, 2, 3, 4, 5, 6, 7}, 5);
    REQUIRE(h.items == std::vector<urir::ItemId>{3, 4, 5, 6, 7});
}

TEST_CASE("build_history alternative modes", "[user_encoder]") {
    const std::vector<urir::ItemId> items = {1, 2, 3, 4, 5, 6, 7};
    REQUIRE(build_history(3, items, 4, HistoryMode::FirstN).items ==
            std::vector<urir::ItemId>{1, 2, 3, 4});

    const UserHistory r = build_history(3, items, 4, HistoryMode::RandomN, 9);
    REQUIRE(r.items.size() == 4);
    std::set<urir::ItemId> unique(r.items.begin(), r.items.end());
    REQUIRE(unique.size() == 4);
    // record order preserved within the chosen subset
    REQUIRE(std::is_sorted(r.items.begin(), r.items.end()));
    REQUIRE(build_history(3, items, 4, HistoryMode::RandomN, 9).items == r.items);
}

TEST_CASE("build_history validates n and allows empty pools", "[user_encoder]") {
    REQUIRE_THROWS_AS(build_history(0, {1}, 0), urir::ConfigError);
    REQUIRE(build_history(0, {}, 5).items.empty());
}

TEST_CASE("rnn_step zero inputs and weights give zero", "[user_encoder]") {
    ModelParams p = urir::init_params({2, 2, 1, 1, 1}, 1);
    std::fill(p.rnn_W.values.begin(), p.rnn_W.values.end(), 0.0);
    std::fill(p.rnn_H.values.begin(), p.rnn_H.values.end(), 0.0);
    std::fill(p.rnn_U.values.begin(), p.rnn_U.values.end(), 0.0);
    Tape tape;
    const Var h = urir::rnn_step(tape, tape.zeros(2), tape.zeros(2), tape.zeros(2),
                                 rnn_from(tape, p));
    REQUIRE(tape.values(h) == std::vector<double>{0.0, 0.0});
}

TEST_CASE("rnn_step with identity W clamps negatives", "[user_encoder]") {
    ModelParams p = urir::init_params({2, 2, 1, 1, 1}, 2);
    p.rnn_W.values = {1.0, 0.0, 0.0, 1.0};
    std::fill(p.rnn_H.values.begin(), p.rnn_H.values.end(), 0.0);
    std::fill(p.rnn_U.values.begin(), p.rnn_U.values.end(), 0.0);
    Tape tape;
    const Var h = urir::rnn_step(tape, tape.value({1.0, -1.0}), tape.zeros(2), tape.zeros(2),
                                 rnn_from(tape, p));
    REQUIRE(tape.values(h) == std::vector<double>{1.0, 0.0});
}

TEST_CASE("rnn_step matches an independent matrix-vector evaluation", "[user_encoder]") {
    ModelParams p = urir::init_params({3, 3, 2, 4, 2}, 3);
    urir::Rng rng(4);
    std::vector<double> v(3), h_prev(3), u(3);
    for (double& x : v) x = rng.uniform(-1, 1);
    for (double& x : h_prev) x = rng.uniform(-1, 1);
    for (double& x : u) x = rng.uniform(-1, 1);

    Tape tape;
    const auto got = tape.values(
        urir::rnn_step(tape, tape.value(v), tape.value(h_prev), tape.value(u), rnn_from(tape, p)));

    const auto a = oracles::mat_vec(p.rnn_W, v);
    const auto b = oracles::mat_vec(p.rnn_H, h_prev);
    const auto c = oracles::mat_vec(p.rnn_U, u);
    for (int j = 0; j < 3; ++j) {
        REQUIRE(got[j] == Approx(std::max(0.0, a[j] + b[j] + c[j])).margin(1e-12));
    }
}

TEST_CASE("encode_user single step drops the recurrent term", "[user_encoder]") {
    ModelParams p = urir::init_params({3, 3, 2, 4, 2}, 5);
    urir::Rng rng(6);
    std::vector<double> v(3), u(3);
    for (double& x : v) x = rng.uniform(-1, 1);
    for (double& x : u) x = rng.uniform(-1, 1);

    Tape tape;
    const auto got =
        tape.values(urir::encode_user(tape, tape.value(u), {tape.value(v)}, 3, rnn_from(tape, p)));
    const auto a = oracles::mat_vec(p.rnn_W, v);
    const auto c = oracles::mat_vec(p.rnn_U, u);
    for (int j = 0; j < 3; ++j) {
        REQUIRE(got[j] == Approx(std::max(0.0, a[j] + c[j])).margin(1e-12));
    }
}

TEST_CASE("encode_user matches the unrolled reference and is order sensitive",
          "[user_encoder]") {
    ModelParams p = urir::init_params({4, 4, 3, 6, 2}, 7);
    urir::Rng rng(8);
    std::vector<std::vector<double>> reps(3, std::vector<double>(4));
    for (auto& r : reps) {
        for (double& x : r) x = rng.uniform(-1.5, 1.5);
    }

    auto encode = [&](const std::vector<std::vector<double>>& ordered) {
        Tape tape;
        std::vector<Var> vars;
        for (const auto& r : ordered) vars.push_back(tape.value(r));
        return tape.values(urir::encode_user(tape, tape.leaf_row(p.user_emb, 1), vars, 4,
                                             rnn_from(tape, p)));
    };

    const auto got = encode(reps);
    const auto want = oracles::user_rep(p, reps, 1);
    for (int j = 0; j < 4; ++j) REQUIRE(got[j] == Approx(want[j]).margin(1e-12));
    for (double x : got) REQUIRE(x >= 0.0); // final ReLU

    const auto reversed = encode({reps[2], reps[1], reps[0]});
    bool differs = false;
    for (int j = 0; j < 4; ++j) differs = differs || std::abs(reversed[j] - got[j]) > 1e-9;
    REQUIRE(differs);
}

TEST_CASE("encode_user falls back to the raw embedding on empty history", "[user_encoder]") {
    ModelParams p = urir::init_params({3, 3, 2, 3, 1}, 9);
    Tape tape;
    const Var u = tape.leaf_row(p.user_emb, 0);
    REQUIRE(urir::encode_user(tape, u, {}, 3, rnn_from(tape, p)) == u);
    REQUIRE(urir::encode_user_ablation(tape, u, {}) == u);
}

TEST_CASE("ablation encoder sums history representations", "[user_encoder]") {
    Tape tape;
    const auto got = tape.values(urir::encode_user_ablation(
        tape, tape.value({1.0, 0.0}), {tape.value({0.0, 1.0}), tape.value({1.0, 1.0})}));
    REQUIRE(got == std::vector<double>{2.0, 2.0});
}

TEST_CASE("ablation encoder is permutation invariant", "[user_encoder]") {
    urir::Rng rng(10);
    std::vector<std::vector<double>> reps(4, std::vector<double>(3));
    for (auto& r : reps) {
        for (double& x : r) x = rng.uniform(-2, 2);
    }
    auto encode = [&](const std::vector<std::vector<double>>& ordered) {
        Tape tape;
        std::vector<Var> vars;
        for (const auto& r : ordered) vars.push_back(tape.value(r));
        return tape.values(urir::encode_user_ablation(tape, tape.value({0.5, -0.5, 0.25}), vars));
    };
    const auto base = encode(reps);
    const auto swapped = encode({reps[3], reps[1], reps[0], reps[2]});
    for (int j = 0; j < 3; ++j) REQUIRE(swapped[j] == Approx(base[j]).margin(1e-12));
}
