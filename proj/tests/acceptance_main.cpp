// Acceptance suite: one pass/fail line per criterion, nonzero exit if any
// criterion fails. Thresholds and time budgets are pinned in code.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "synth.hpp"
#include "urir/checkpoint.hpp"
#include "urir/cli.hpp"
#include "urir/scoring.hpp"
#include "urir/trainer.hpp"

namespace {

struct Failure {
    std::string message;
};

void expect(bool ok, const std::string& message) {
    if (!ok) throw Failure{message};
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    expect(in.good(), "cannot read " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

struct Scratch {
    std::filesystem::path path;
    Scratch() {
        path = std::filesystem::temp_directory_path() /
               ("urir_acceptance_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~Scratch() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string sub(const std::string& name) const { return (path / name).string(); }
};

// ---- criteria ---------------------------------------------------------------

// Full-model finite-difference gradient check on a small instance.
std::string criterion_gradient_correctness() {
    const urir::KnowledgeGraph kg = urir::kg_from_triples(
        5, 2, {{0, 0, 3}, {0, 1, 4}, {1, 0, 4}, {1, 1, 2}, {2, 0, 0}, {3, 1, 1}, {4, 0, 2}});
    std::map<urir::ItemId, urir::RippleSets> ripples;
    for (urir::ItemId v : {0, 1, 2}) {
        ripples.emplace(v, urir::build_ripple_sets(kg, v, 1, 2, 7000 + v));
    }
    std::unordered_map<urir::UserId, std::vector<urir::ItemId>> histories;
    histories[0] = {1, 2};
    histories[1] = {0, 2};
    const std::vector<urir::TrainExample> batch = {
        {0, 0, 1.0}, {0, 2, 0.0}, {1, 1, 1.0}, {1, 0, 0.0}};
    urir::ModelParams params = urir::init_params({3, 3, 2, 5, 2}, 91);
    synth::randomize_params(params, 92); // keep pre-activations off the ReLU kinks
    const urir::ForwardData fwd{ripples, histories, 3, 1, true, urir::UserEncoderKind::Rnn};
    const double err = urir::finite_diff_check(params, [&](bool with_grad) {
        return urir::batch_loss_impl(batch, params, fwd, 0.001, with_grad);
    });
    expect(err <= 1e-4, "max relative gradient error " + fmt(err) + " exceeds 1e-4");
    return "max_rel_err=" + fmt(err) + " (limit 1e-4)";
}

// Exhaustive-BFS equivalence on graphs whose out-degree never exceeds k.
std::string criterion_ripple_oracle() {
    const int k = 3;
    int graphs = 0;
    for (uint64_t seed = 0; seed < 200; ++seed) {
        const int entities = 20 + static_cast<int>(seed % 81); // up to 100
        const urir::KnowledgeGraph kg = synth::random_kg(entities, 3, k, 5000 + seed);
        for (urir::ItemId item = 0; item < 5; ++item) {
            const urir::RippleSets got = urir::build_ripple_sets(kg, item, 2, k, seed);
            const urir::RippleSets want = oracles::ripple_unsampled(kg, item, 2);
            expect(oracles::ripple_equal(got, want),
                   "mismatch on graph seed " + std::to_string(seed) + " item " +
                       std::to_string(item));
        }
        ++graphs;
    }
    return std::to_string(graphs) + "/200 graphs exact";
}

// Softmax normalization and the convex-hull bound on random levels.
std::string criterion_attention_normalization() {
    urir::Rng rng(4242);
    for (int trial = 0; trial < 1000; ++trial) {
        const int d = 2 + static_cast<int>(rng.below(5));
        const int m = 1 + static_cast<int>(rng.below(8));
        urir::ModelParams p = urir::init_params({d, d, 1, m + 2, 2}, 9000 + trial);
        urir::RippleSets ripple;
        ripple.item = 0;
        ripple.visited = {{0}, {}};
        std::vector<urir::Triple> level;
        for (int i = 0; i < m; ++i) {
            level.push_back({0, static_cast<urir::RelationId>(rng.below(2)),
                             static_cast<urir::EntityId>(1 + i)});
        }
        ripple.levels = {level};

        urir::Tape tape(false);
        urir::AttentionVars att;
        att.W1 = tape.value_matrix(p.W1.values, p.W1.rows(), p.W1.cols());
        att.b1 = tape.value(p.b1.values);
        att.W2 = tape.value_matrix(p.W2.values, p.W2.rows(), p.W2.cols());
        att.b2 = tape.value(p.b2.values);
        att.W3 = tape.value_matrix(p.W3.values, p.W3.rows(), p.W3.cols());
        att.b3 = tape.value(p.b3.values);
        urir::EmbeddingVars emb{
            [&](urir::EntityId e) {
                return tape.value(oracles::row_of(p.entity_emb, e));
            },
            [&](urir::RelationId r) {
                return tape.value(oracles::row_of(p.relation_emb, r));
            }};
        const auto enc = urir::encode_item(tape, ripple, 0, d, 1, emb, att);
        const auto w = tape.values(enc.weights[0]);
        double sum = 0.0;
        for (double wi : w) sum += wi;
        expect(std::abs(sum - 1.0) <= 1e-6, "weights sum " + fmt(sum) + " on trial " +
                                                std::to_string(trial));
        const auto vl = tape.values(enc.per_level[0]);
        for (int j = 0; j < d; ++j) {
            double lo = 1e300, hi = -1e300;
            for (const urir::Triple& t : level) {
                lo = std::min(lo, p.entity_emb.at(t.tail, j));
                hi = std::max(hi, p.entity_emb.at(t.tail, j));
            }
            expect(vl[j] >= lo - 1e-12 && vl[j] <= hi + 1e-12,
                   "hull violation on trial " + std::to_string(trial));
        }
    }
    return "1000/1000 levels normalized and inside the tail hull";
}

// user_auc against the Wilcoxon midrank oracle; metric identities.
std::string criterion_metric_oracles() {
    urir::Rng rng(31337);
    const std::vector<int> ks = {1, 2, 4, 5, 6, 8, 10};
    std::vector<urir::RankedList> lists;
    for (int trial = 0; trial < 1000; ++trial) {
        urir::RankedList list;
        list.user = trial % 100;
        list.positive = 0;
        for (urir::ItemId v = 0; v < 51; ++v) list.candidates.push_back(v);
        const int buckets = 2 + static_cast<int>(rng.below(50));
        urir::rank_and_score(
            [&](urir::UserId, urir::ItemId) {
                return static_cast<double>(rng.below(buckets)) / buckets;
            },
            list);
        expect(urir::user_auc(list) == oracles::auc_wilcoxon(list),
               "AUC mismatch on trial " + std::to_string(trial));
        lists.push_back(list);

        const urir::MetricsReport one = urir::metrics_at_k({list}, ks);
        for (size_t i = 0; i < ks.size(); ++i) {
            expect(one.precision.at(ks[i]) == one.recall.at(ks[i]) / ks[i],
                   "P@K != R@K/K on trial " + std::to_string(trial));
            if (i > 0) {
                expect(one.recall.at(ks[i]) >= one.recall.at(ks[i - 1]),
                       "recall not monotone on trial " + std::to_string(trial));
                expect(one.mrr.at(ks[i]) >= one.mrr.at(ks[i - 1]),
                       "mrr not monotone on trial " + std::to_string(trial));
            }
        }
    }
    return "1000/1000 lists match the pairwise oracle exactly";
}

// An untrained model must rank at chance level.
std::string criterion_random_model_calibration() {
    const urir::Dataset data = synth::make_calibration_dataset(500, 300, 6, 8675309);
    const auto ripples = urir::build_all_ripples(data.kg, data.catalog, 1, 4, 1);
    const urir::ModelParams params =
        urir::init_params({8, 8, data.num_users, data.num_entities, 1}, 424242);
    std::unordered_map<urir::UserId, std::vector<urir::ItemId>> histories;
    for (const auto& [u, items] : data.history_pool()) {
        histories.emplace(u, urir::build_history(u, items, 5).items);
    }
    urir::ScoringContext ctx(params, ripples, histories, {1, true, urir::UserEncoderKind::Rnn});
    const urir::UserIndex idx = urir::index_from_dataset(data);
    double acc = 0.0;
    int count = 0;
    for (urir::UserId u = 0; u < data.num_users; ++u) {
        urir::RankedList list = urir::build_candidates(u, idx, data.catalog, 50, 5150);
        urir::rank_and_score([&](urir::UserId uu, urir::ItemId vv) { return ctx.score(uu, vv); },
                             list);
        acc += urir::user_auc(list);
        ++count;
    }
    const double mean = acc / count;
    expect(count == 500, "expected 500 users, saw " + std::to_string(count));
    expect(mean >= 0.45 && mean <= 0.55,
           "untrained mean AUC " + fmt(mean) + " outside [0.45, 0.55]");
    return "mean AUC " + fmt(mean) + " over 500 users (target [0.45, 0.55])";
}

// Planted two-cluster structure must be learnable end to end through the
// prepare/train/evaluate pipeline.
std::string criterion_planted_structure(const Scratch& scratch) {
    const auto files = synth::write_cluster_dataset(scratch.sub("planted"), 200, 50, 10, 606);

    urir::TrainConfig cfg;
    cfg.d = 8;
    cfg.k = 4;
    cfg.L = 1;
    cfg.n = 5;
    cfg.learning_rate = 0.02;
    cfg.epochs = 10;
    cfg.batch_size = 256;
    cfg.lambda = 0.001;
    cfg.eval_negatives = 20;
    cfg.seed = 1234;

    urir::cli::PrepareArgs pargs{files.interactions_path, files.kg_path,
                                 scratch.sub("planted_bundle"), cfg};
    urir::cli::cmd_prepare(pargs);
    urir::cli::TrainArgs targs{scratch.sub("planted_bundle"), scratch.sub("planted_run"), cfg,
                               true};
    const auto tres = urir::cli::cmd_train(targs);
    urir::cli::EvaluateArgs eargs;
    eargs.bundle_dir = scratch.sub("planted_bundle");
    eargs.checkpoint_path = tres.checkpoint_path;
    eargs.out_dir = scratch.sub("planted_eval");
    const urir::MetricsReport rep = urir::cli::cmd_evaluate(eargs);
    expect(rep.auc >= 0.75, "test AUC " + fmt(rep.auc) + " below 0.75");
    return "test AUC " + fmt(rep.auc) + " (floor 0.75, 10 epochs)";
}

// With matched seeds, the recurrent encoder must beat the order-blind
// sum encoder on data whose labels depend on interaction order.
std::string criterion_ablation_direction() {
    const auto ordered = synth::make_order_dataset(150, 50, 777);

    urir::TrainConfig cfg;
    cfg.d = 8;
    cfg.k = 2;
    cfg.L = 1;
    cfg.n = 5;
    cfg.learning_rate = 0.05;
    cfg.epochs = 12;
    cfg.batch_size = 128;
    cfg.lambda = 0.0001;
    cfg.seed = 2024;

    const auto ripples =
        urir::build_all_ripples(ordered.data.kg, ordered.data.catalog, cfg.L, cfg.k, cfg.seed);
    std::unordered_map<urir::UserId, std::vector<urir::ItemId>> histories;
    for (const auto& [u, items] : ordered.data.history_pool()) {
        histories.emplace(u, urir::build_history(u, items, cfg.n).items);
    }
    const urir::UserIndex idx = urir::index_from_dataset(ordered.data);
    std::vector<urir::RankedList> scaffolds;
    for (urir::UserId u : ordered.probe_users) {
        urir::Rng rng(urir::sub_seed(cfg.seed, urir::Stream::EvalCandidates,
                                     static_cast<uint64_t>(u)));
        scaffolds.push_back(urir::build_candidates_for_positive(
            u, idx.test_items.at(u).front(), idx, ordered.data.catalog, 30, rng));
    }

    auto evaluate = [&](urir::UserEncoderKind encoder) {
        urir::TrainConfig variant = cfg;
        variant.user_encoder = encoder;
        const urir::TrainResult tr = urir::train(variant, ordered.data, &ripples);
        urir::ScoringContext ctx(tr.params, ripples, histories, {cfg.L, true, encoder});
        double acc = 0.0;
        for (const urir::RankedList& scaffold : scaffolds) {
            urir::RankedList list = scaffold;
            urir::rank_and_score(
                [&](urir::UserId uu, urir::ItemId vv) { return ctx.score(uu, vv); }, list);
            acc += urir::user_auc(list);
        }
        return acc / static_cast<double>(scaffolds.size());
    };

    const double auc_rnn = evaluate(urir::UserEncoderKind::Rnn);
    const double auc_sum = evaluate(urir::UserEncoderKind::Sum);
    expect(auc_rnn - auc_sum >= 0.03, "gap " + fmt(auc_rnn - auc_sum) + " below 0.03 (rnn " +
                                          fmt(auc_rnn) + ", sum " + fmt(auc_sum) + ")");
    return "AUC rnn " + fmt(auc_rnn) + " vs sum " + fmt(auc_sum) + " (gap " +
           fmt(auc_rnn - auc_sum) + ", floor 0.03)";
}

// 50 examples, 200 steps, no regularization: the model must memorize.
std::string criterion_overfit_sanity() {
    urir::Rng rng(1001);
    const urir::KnowledgeGraph kg = synth::random_kg(15, 2, 3, 1002);
    std::map<urir::ItemId, urir::RippleSets> ripples;
    for (urir::ItemId v = 0; v < 15; ++v) {
        ripples.emplace(v, urir::build_ripple_sets(kg, v, 1, 4, 1003 + v));
    }
    std::unordered_map<urir::UserId, std::vector<urir::ItemId>> histories;
    std::vector<urir::TrainExample> batch;
    std::set<std::pair<urir::UserId, urir::ItemId>> seen;
    while (batch.size() < 50) {
        const urir::UserId u = static_cast<urir::UserId>(rng.below(10));
        const urir::ItemId v = static_cast<urir::ItemId>(rng.below(15));
        if (!seen.insert({u, v}).second) continue;
        batch.push_back({u, v, static_cast<double>(rng.below(2))});
    }
    urir::ModelParams params = urir::init_params({8, 8, 10, 15, 2}, 1004);
    urir::AdamState adam = urir::AdamState::create(params, 0.05);
    const urir::ForwardData fwd{ripples, histories, 8, 1, true, urir::UserEncoderKind::Rnn};
    for (int step = 0; step < 200; ++step) {
        urir::batch_loss_impl(batch, params, fwd, 0.0, true);
        urir::adam_step(params, adam);
    }
    const double loss = urir::batch_loss(batch, params, fwd, 0.0);
    expect(loss < 0.05, "training loss " + fmt(loss) + " not below 0.05 after 200 steps");
    return "train loss " + fmt(loss) + " after 200 steps (limit 0.05)";
}

// Two full pipeline runs with one seed must emit byte-identical metrics.
std::string criterion_determinism(const Scratch& scratch) {
    const auto files = synth::write_cluster_dataset(scratch.sub("det"), 120, 40, 8, 99);
    urir::TrainConfig cfg;
    cfg.d = 8;
    cfg.k = 4;
    cfg.L = 1;
    cfg.n = 5;
    cfg.learning_rate = 0.02;
    cfg.epochs = 5;
    cfg.batch_size = 128;
    cfg.lambda = 0.001;
    cfg.eval_negatives = 15;
    cfg.seed = 4321;

    auto run = [&](const std::string& tag) {
        urir::cli::PrepareArgs pargs{files.interactions_path, files.kg_path,
                                     scratch.sub(tag + "_bundle"), cfg};
        const auto pres = urir::cli::cmd_prepare(pargs);
        urir::cli::TrainArgs targs{scratch.sub(tag + "_bundle"), scratch.sub(tag + "_run"), cfg,
                                   true};
        const auto tres = urir::cli::cmd_train(targs);
        urir::cli::EvaluateArgs eargs;
        eargs.bundle_dir = scratch.sub(tag + "_bundle");
        eargs.checkpoint_path = tres.checkpoint_path;
        eargs.out_dir = scratch.sub(tag + "_eval");
        urir::cli::cmd_evaluate(eargs);
        return pres.bundle_hash;
    };
    const uint64_t h1 = run("a");
    const uint64_t h2 = run("b");
    expect(h1 == h2, "bundle hashes differ across identical runs");
    const std::string m1 = read_file(scratch.sub("a_eval") + "/metrics.csv");
    const std::string m2 = read_file(scratch.sub("b_eval") + "/metrics.csv");
    expect(m1 == m2, "metrics.csv differs across identical runs");
    const std::string l1 = read_file(scratch.sub("a_run") + "/epoch_log.csv");
    const std::string l2 = read_file(scratch.sub("b_run") + "/epoch_log.csv");
    expect(l1 == l2, "epoch_log.csv differs across identical runs");
    return "bundle hashes and metric/epoch CSVs byte-identical";
}

// Optional: real public data (expects URIR_ML_DATA with interactions.tsv
// and kg.tsv in the declared formats).
std::string criterion_public_data(const Scratch& scratch, bool* skipped) {
    const char* dir = std::getenv("URIR_ML_DATA");
    if (dir == nullptr) {
        *skipped = true;
        return "set URIR_ML_DATA to a directory with interactions.tsv and kg.tsv to enable";
    }
    const std::string interactions = std::string(dir) + "/interactions.tsv";
    const std::string kg = std::string(dir) + "/kg.tsv";
    urir::TrainConfig cfg = urir::TrainConfig::preset("ml");
    cfg.seed = 2026;
    urir::cli::PrepareArgs pargs{interactions, kg, scratch.sub("ml_bundle"), cfg};
    const auto pres = urir::cli::cmd_prepare(pargs);
    urir::cli::TrainArgs targs{scratch.sub("ml_bundle"), scratch.sub("ml_run"), cfg, true};
    const auto tres = urir::cli::cmd_train(targs);
    urir::cli::EvaluateArgs eargs;
    eargs.bundle_dir = scratch.sub("ml_bundle");
    eargs.checkpoint_path = tres.checkpoint_path;
    eargs.out_dir = scratch.sub("ml_eval");
    const urir::MetricsReport rep = urir::cli::cmd_evaluate(eargs);
    expect(rep.auc >= 0.70, "public-data AUC " + fmt(rep.auc) + " below the 0.70 soft floor");
    std::ostringstream detail;
    detail << "AUC " << fmt(rep.auc) << " over " << rep.user_count
           << " users (soft floor 0.70); summary "
           << pres.summary.at("summary").dump();
    return detail.str();
}

} // namespace

int main() {
    Scratch scratch;
    struct Criterion {
        std::string name;
        double budget_seconds;
        std::function<std::string(bool*)> run;
    };
    const std::vector<Criterion> criteria = {
        {"gradient-correctness", 10.0,
         [&](bool*) { return criterion_gradient_correctness(); }},
        {"ripple-oracle", 5.0, [&](bool*) { return criterion_ripple_oracle(); }},
        {"attention-normalization", 2.0,
         [&](bool*) { return criterion_attention_normalization(); }},
        {"metric-oracles", 5.0, [&](bool*) { return criterion_metric_oracles(); }},
        {"random-model-calibration", 30.0,
         [&](bool*) { return criterion_random_model_calibration(); }},
        {"planted-structure-learning", 120.0,
         [&](bool*) { return criterion_planted_structure(scratch); }},
        {"ablation-direction", 180.0, [&](bool*) { return criterion_ablation_direction(); }},
        {"overfit-sanity", 30.0, [&](bool*) { return criterion_overfit_sanity(); }},
        {"determinism", 240.0, [&](bool*) { return criterion_determinism(scratch); }},
        {"public-data-smoke", 3600.0,
         [&](bool* skipped) { return criterion_public_data(scratch, skipped); }},
    };

    int failures = 0;
    int skipped_count = 0;
    for (const Criterion& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        std::string detail;
        bool skipped = false;
        bool passed = true;
        try {
            detail = c.run(&skipped);
        } catch (const Failure& f) {
            passed = false;
            detail = f.message;
        } catch (const std::exception& e) {
            passed = false;
            detail = std::string("unexpected error: ") + e.what();
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (passed && !skipped && seconds > c.budget_seconds) {
            passed = false;
            detail += " (exceeded " + fmt(c.budget_seconds) + "s budget)";
        }
        const char* tag = skipped ? "SKIP" : passed ? "PASS" : "FAIL";
        std::printf("[%s] %s: %s [%.1fs]\n", tag, c.name.c_str(), detail.c_str(), seconds);
        std::fflush(stdout);
        if (skipped) ++skipped_count;
        else if (!passed) ++failures;
    }
    const int total = static_cast<int>(criteria.size());
    std::printf("%d/%d criteria passed", total - failures - skipped_count,
                total - skipped_count);
    if (skipped_count > 0) std::printf(" (%d skipped)", skipped_count);
    std::printf("\n");
    return failures == 0 ? 0 : 1;
}
