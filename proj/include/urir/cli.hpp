#pragma once
// Pipeline commands behind the CLI: prepare, train, evaluate, ablate and
// sweep. Each command writes a manifest.json into its output directory
// that pins the resolved configuration, input hashes and seed, so a run
// can be reproduced bit for bit.
//
// Configuration precedence: built-in defaults < --preset < --config file
// < explicit flags. Config files are flat `key = value` lines mirroring
// the TrainConfig field names; '#' starts a comment.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "urir/bundle.hpp"
#include "urir/checkpoint.hpp"
#include "urir/eval.hpp"
#include "urir/interactions.hpp"
#include "urir/reports.hpp"
#include "urir/scoring.hpp"
#include "urir/trainer.hpp"

namespace urir::cli {

// ---- configuration ----------------------------------------------------------

inline bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config: invalid boolean for " + key + ": " + v);
}

inline NegRatio parse_neg_ratio(const std::string& v) {
    NegRatio r;
    if (std::sscanf(v.c_str(), "%d:%d", &r.positives, &r.negatives) != 2 || r.positives <= 0 ||
        r.negatives <= 0) {
        throw ConfigError("config: neg_ratio must be P:N with positive integers, got " + v);
    }
    return r;
}

inline std::vector<int> parse_int_list(const std::string& v, const std::string& key) {
    std::vector<int> out;
    std::istringstream ss(v);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        try {
            out.push_back(std::stoi(tok));
        } catch (const std::exception&) {
            throw ConfigError("config: invalid integer list for " + key + ": " + v);
        }
    }
    if (out.empty()) throw ConfigError("config: empty list for " + key);
    return out;
}

inline void apply_config_kv(TrainConfig& cfg, const std::string& key, const std::string& value) {
    try {
        if (key == "d") cfg.d = std::stoi(value);
        else if (key == "d_h") cfg.d_h = std::stoi(value);
        else if (key == "k") cfg.k = std::stoi(value);
        else if (key == "L") cfg.L = std::stoi(value);
        else if (key == "n") cfg.n = std::stoi(value);
        else if (key == "learning_rate") cfg.learning_rate = std::stod(value);
        else if (key == "epochs") cfg.epochs = std::stoi(value);
        else if (key == "batch_size") cfg.batch_size = std::stoi(value);
        else if (key == "lambda") cfg.lambda = std::stod(value);
        else if (key == "neg_ratio") cfg.neg_ratio = parse_neg_ratio(value);
        else if (key == "seed") cfg.seed = std::stoull(value);
        else if (key == "user_encoder") {
            if (value == "rnn") cfg.user_encoder = UserEncoderKind::Rnn;
            else if (value == "sum") cfg.user_encoder = UserEncoderKind::Sum;
            else throw ConfigError("config: user_encoder must be rnn or sum, got " + value);
        } else if (key == "history_mode") {
            if (value == "last") cfg.history_mode = HistoryMode::LastN;
            else if (value == "first") cfg.history_mode = HistoryMode::FirstN;
            else if (value == "random") cfg.history_mode = HistoryMode::RandomN;
            else throw ConfigError("config: history_mode must be last, first or random, got " + value);
        } else if (key == "attention_logit_relu") cfg.attention_logit_relu = parse_bool(value, key);
        else if (key == "ripple_with_replacement") cfg.ripple.with_replacement = parse_bool(value, key);
        else if (key == "ripple_exclude_before_sampling")
            cfg.ripple.exclude_before_sampling = parse_bool(value, key);
        else if (key == "split_ratio") cfg.split_ratio = std::stod(value);
        else if (key == "cold_start_max") cfg.cold_start_max = std::stoi(value);
        else if (key == "eval_negatives") cfg.eval_negatives = std::stoi(value);
        else if (key == "val_fraction") cfg.val_fraction = std::stod(value);
        else if (key == "auc_mode") {
            if (value == "perlist") cfg.auc_mode = AucMode::PerList;
            else if (value == "global") cfg.auc_mode = AucMode::Global;
            else throw ConfigError("config: auc_mode must be perlist or global, got " + value);
        } else if (key == "all_test_positives") cfg.all_test_positives = parse_bool(value, key);
        else if (key == "ks") cfg.ks = parse_int_list(value, key);
        else throw ConfigError("config: unknown key: " + key);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError("config: invalid value for " + key + ": " + value);
    }
}

inline std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    size_t b = s.find_last_not_of(" \t\r");
    if (a == std::string::npos) return "";
    return s.substr(a, b - a + 1);
}

// Returns the set of keys the file set (callers track explicit seeds).
inline std::set<std::string> apply_config_file(TrainConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::set<std::string> keys;
    std::string line;
    int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config file line " + std::to_string(line_no) +
                              ": expected key = value in " + path);
        }
        const std::string key = trim(line.substr(0, eq));
        apply_config_kv(cfg, key, trim(line.substr(eq + 1)));
        keys.insert(key);
    }
    return keys;
}

inline nlohmann::json config_to_json(const TrainConfig& cfg0) {
    const TrainConfig cfg = cfg0.resolved();
    nlohmann::json j;
    j["d"] = cfg.d;
    j["d_h"] = cfg.d_h;
    j["k"] = cfg.k;
    j["L"] = cfg.L;
    j["n"] = cfg.n;
    j["learning_rate"] = cfg.learning_rate;
    j["epochs"] = cfg.epochs;
    j["batch_size"] = cfg.batch_size;
    j["lambda"] = cfg.lambda;
    j["neg_ratio"] = std::to_string(cfg.neg_ratio.positives) + ":" +
                     std::to_string(cfg.neg_ratio.negatives);
    j["seed"] = cfg.seed;
    j["user_encoder"] = cfg.user_encoder == UserEncoderKind::Rnn ? "rnn" : "sum";
    j["history_mode"] = cfg.history_mode == HistoryMode::LastN    ? "last"
                        : cfg.history_mode == HistoryMode::FirstN ? "first"
                                                                  : "random";
    j["attention_logit_relu"] = cfg.attention_logit_relu;
    j["ripple_with_replacement"] = cfg.ripple.with_replacement;
    j["ripple_exclude_before_sampling"] = cfg.ripple.exclude_before_sampling;
    j["split_ratio"] = cfg.split_ratio;
    j["cold_start_max"] = cfg.cold_start_max;
    j["eval_negatives"] = cfg.eval_negatives;
    j["val_fraction"] = cfg.val_fraction;
    j["auc_mode"] = cfg.auc_mode == AucMode::PerList ? "perlist" : "global";
    j["all_test_positives"] = cfg.all_test_positives;
    j["ks"] = cfg.ks;
    return j;
}

// ---- manifests ---------------------------------------------------------------

struct WallTimer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

inline void write_manifest(const std::string& out_dir, const std::string& command,
                           const TrainConfig& cfg,
                           const std::map<std::string, std::string>& input_paths,
                           const std::vector<std::string>& artifacts, double wall_seconds,
                           const nlohmann::json& extra = nlohmann::json::object()) {
    nlohmann::json j;
    j["command"] = command;
    j["config"] = config_to_json(cfg);
    j["seed"] = cfg.seed;
    nlohmann::json inputs;
    for (const auto& [label, path] : input_paths) {
        inputs[label] = {{"path", path}, {"fnv1a64", hex64(fnv1a_file(path))}};
    }
    j["inputs"] = inputs;
    j["artifacts"] = artifacts;
    j["wall_seconds"] = wall_seconds;
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
    write_text(out_dir + "/manifest.json", j.dump(2) + "\n");
}

// ---- prepare -----------------------------------------------------------------

struct PrepareArgs {
    std::string interactions_path;
    std::string kg_path;
    std::string out_dir;
    TrainConfig cfg;
};

struct PrepareResult {
    nlohmann::json summary;
    uint64_t bundle_hash = 0;
};

inline PrepareResult cmd_prepare(const PrepareArgs& args) {
    WallTimer timer;
    const TrainConfig cfg = args.cfg.resolved();
    cfg.validate();

    KgLoadResult kgres;
    bool empty_kg = false;
    try {
        kgres = load_kg(args.kg_path);
    } catch (const EmptyGraphError&) {
        empty_kg = true;
        std::cerr << "warning: knowledge graph is empty; all items fall back to raw embeddings\n";
    }
    if (kgres.duplicates_dropped > 0) {
        std::cerr << "warning: dropped " << kgres.duplicates_dropped << " duplicate kg triples\n";
    }

    Vocab user_vocab;
    InteractionLog log =
        load_interactions(args.interactions_path, user_vocab, kgres.entities, kgres.graph.entity_count);
    kgres.graph.extend_entities(kgres.entities.size());
    if (log.duplicates_dropped > 0) {
        std::cerr << "warning: dropped " << log.duplicates_dropped << " duplicate interactions\n";
    }
    if (log.items_missing_from_kg > 0) {
        std::cerr << "warning: " << log.items_missing_from_kg
                  << " items have no kg entry and get empty ripple sets\n";
    }

    const SplitInteractions split =
        split_interactions(log, {cfg.split_ratio, cfg.cold_start_max}, cfg.seed);
    const ValHoldout hold = hold_out_validation(split.train, cfg.val_fraction, cfg.seed);

    std::set<ItemId> item_set;
    for (const Interaction& r : split.train) item_set.insert(r.item);
    for (const Interaction& r : split.test) item_set.insert(r.item);
    const std::vector<ItemId> catalog(item_set.begin(), item_set.end());

    std::unordered_map<UserId, std::vector<ItemId>> fit_positives;
    for (const Interaction& r : hold.train_fit) fit_positives[r.user].push_back(r.item);
    std::unordered_map<UserId, std::unordered_set<ItemId>> interacted;
    for (const Interaction& r : split.train) interacted[r.user].insert(r.item);
    for (const Interaction& r : split.test) interacted[r.user].insert(r.item);

    const NegativeSamplingResult negs =
        sample_negatives(fit_positives, interacted, catalog, cfg.neg_ratio, cfg.seed);
    if (negs.users_without_eligible > 0) {
        std::cerr << "warning: " << negs.users_without_eligible
                  << " users interacted with every item; zero negatives for them\n";
    }

    std::vector<RankedList> val_scaffolds;
    for (size_t i = 0; i < hold.val.size(); ++i) {
        const Interaction& r = hold.val[i];
        Rng rng(sub_seed(cfg.seed, Stream::ValCandidates, static_cast<uint64_t>(r.user), i));
        UserIndex tmp;
        tmp.interacted[r.user] = interacted.at(r.user);
        try {
            val_scaffolds.push_back(build_candidates_for_positive(r.user, r.item, tmp, catalog,
                                                                  cfg.eval_negatives, rng));
        } catch (const DataError& e) {
            throw DataError(std::string(e.what()) + " (lower --eval-negatives to fit this dataset)");
        }
    }

    BundleContent content;
    content.entity_vocab = kgres.entities;
    content.relation_vocab = kgres.relations;
    content.user_vocab = user_vocab;
    content.kg = kgres.graph;
    content.catalog = catalog;
    content.train_fit = hold.train_fit;
    content.val = hold.val;
    content.test = split.test;
    content.negatives = negs.examples;
    content.val_scaffolds = val_scaffolds;
    content.ripple_fp = {cfg.L, cfg.k, cfg.seed, cfg.ripple.with_replacement,
                         cfg.ripple.exclude_before_sampling};
    content.ripples =
        build_all_ripples(kgres.graph, catalog, cfg.L, cfg.k, cfg.seed, cfg.ripple);

    nlohmann::json summary;
    summary["users"] = split.users_retained;
    summary["items"] = catalog.size();
    summary["relations"] = kgres.graph.relation_count;
    summary["edges"] = kgres.graph.triple_count;
    summary["interactions"] = split.train.size() + split.test.size();
    summary["entities"] = kgres.graph.entity_count;

    nlohmann::json meta;
    meta["summary"] = summary;
    meta["seed"] = cfg.seed;
    meta["config"] = config_to_json(cfg);
    meta["ripple"] = {{"L", cfg.L},
                      {"k", cfg.k},
                      {"seed", cfg.seed},
                      {"with_replacement", cfg.ripple.with_replacement},
                      {"exclude_before_sampling", cfg.ripple.exclude_before_sampling}};
    meta["warnings"] = {{"empty_kg", empty_kg},
                        {"kg_duplicates_dropped", kgres.duplicates_dropped},
                        {"interaction_duplicates_dropped", log.duplicates_dropped},
                        {"items_missing_from_kg", log.items_missing_from_kg},
                        {"users_dropped_cold_start", split.users_dropped_cold_start},
                        {"users_train_only", split.users_train_only},
                        {"users_without_eligible_negatives", negs.users_without_eligible}};
    meta["inputs"] = {{"interactions", {{"path", args.interactions_path},
                                        {"fnv1a64", hex64(fnv1a_file(args.interactions_path))}}},
                      {"kg", {{"path", args.kg_path}, {"fnv1a64", hex64(fnv1a_file(args.kg_path))}}}};
    content.meta = meta;

    write_bundle(args.out_dir, content);
    const uint64_t bh = bundle_hash(args.out_dir);

    std::cout << "dataset summary: users=" << summary["users"] << " items=" << summary["items"]
              << " relations=" << summary["relations"] << " edges=" << summary["edges"]
              << " interactions=" << summary["interactions"] << " entities=" << summary["entities"]
              << "\n";
    std::cout << "bundle " << args.out_dir << " hash=" << hex64(bh) << "\n";

    std::vector<std::string> artifacts;
    for (const std::string& f : bundle_files()) artifacts.push_back(args.out_dir + "/" + f);
    write_manifest(args.out_dir, "prepare", cfg,
                   {{"interactions", args.interactions_path}, {"kg", args.kg_path}}, artifacts,
                   timer.seconds(), {{"bundle_hash", hex64(bh)}});

    PrepareResult res;
    res.summary = meta;
    res.bundle_hash = bh;
    return res;
}

// ---- shared evaluation helpers -------------------------------------------------

namespace detail {

inline std::unordered_map<UserId, std::vector<ItemId>> histories_for(const Dataset& data, int n,
                                                                     HistoryMode mode,
                                                                     uint64_t seed) {
    std::unordered_map<UserId, std::vector<ItemId>> histories;
    for (const auto& [u, items] : data.history_pool()) {
        histories.emplace(u, build_history(u, items, n, mode, seed).items);
    }
    return histories;
}

inline std::vector<RankedList> build_test_scaffolds(const Dataset& data, int num_negatives,
                                                    uint64_t seed, bool all_test_positives) {
    const UserIndex idx = index_from_dataset(data);
    std::vector<UserId> users;
    for (const auto& [u, items] : idx.test_items) {
        if (!items.empty()) users.push_back(u);
    }
    std::sort(users.begin(), users.end());
    std::vector<RankedList> lists;
    for (UserId u : users) {
        if (all_test_positives) {
            const auto& positives = idx.test_items.at(u);
            for (size_t i = 0; i < positives.size(); ++i) {
                Rng rng(sub_seed(seed, Stream::EvalCandidates, static_cast<uint64_t>(u), i));
                lists.push_back(build_candidates_for_positive(u, positives[i], idx, data.catalog,
                                                              num_negatives, rng));
            }
        } else {
            lists.push_back(build_candidates(u, idx, data.catalog, num_negatives, seed));
        }
    }
    if (lists.empty()) throw DataError("evaluation: no users with test positives");
    return lists;
}

struct ScoredEval {
    MetricsReport report;
    std::vector<RankedList> lists;
};

inline ScoredEval score_scaffolds(const ModelParams& params, const EncoderConfig& enc,
                                  const std::map<ItemId, RippleSets>& ripples,
                                  const std::unordered_map<UserId, std::vector<ItemId>>& histories,
                                  const std::vector<RankedList>& scaffolds,
                                  const std::vector<int>& ks, AucMode auc_mode) {
    ScoringContext ctx(params, ripples, histories, enc);
    auto scorer = [&](UserId u, ItemId v) { return ctx.score(u, v); };
    ScoredEval out;
    out.lists = scaffolds;
    for (RankedList& list : out.lists) rank_and_score(scorer, list);
    out.report = metrics_at_k(out.lists, ks);
    if (auc_mode == AucMode::Global) out.report.auc = global_auc(out.lists);
    return out;
}

} // namespace detail

// ---- train -------------------------------------------------------------------

struct TrainArgs {
    std::string bundle_dir;
    std::string out_dir;
    TrainConfig cfg;
    bool seed_explicit = false;
};

struct TrainCmdResult {
    std::string checkpoint_path;
    TrainResult result;
};

inline TrainCmdResult cmd_train(const TrainArgs& args) {
    WallTimer timer;
    LoadedBundle bundle = load_bundle(args.bundle_dir);
    TrainConfig cfg = args.cfg;
    if (!args.seed_explicit) cfg.seed = bundle.meta.at("seed").get<uint64_t>();
    cfg = cfg.resolved();
    cfg.validate();

    const RippleFingerprint want{cfg.L, cfg.k, cfg.seed, cfg.ripple.with_replacement,
                                 cfg.ripple.exclude_before_sampling};
    const auto ripples = ripples_for(bundle, want, cfg.ripple);
    const TrainResult result = train(cfg, bundle.data, &ripples);

    std::filesystem::create_directories(args.out_dir);
    const std::string ckpt = args.out_dir + "/checkpoint.urck";
    save_checkpoint(ckpt, result.params,
                    CheckpointMeta::from_config(cfg, std::max<int32_t>(1, bundle.data.num_users),
                                                std::max<int32_t>(1, bundle.data.num_entities),
                                                std::max<int32_t>(1, bundle.data.num_relations)));
    write_text(args.out_dir + "/epoch_log.csv", epoch_log_to_csv(result.log));

    for (const EpochRow& row : result.log) {
        std::cout << "epoch " << row.epoch << " train_loss " << fmt_double(row.train_loss)
                  << " val_auc " << fmt_double(row.val_auc) << "\n";
    }
    std::cout << "best epoch " << result.best_epoch << " checkpoint " << ckpt << "\n";

    write_manifest(args.out_dir, "train", cfg, {{"bundle_meta", args.bundle_dir + "/meta.json"}},
                   {ckpt, args.out_dir + "/epoch_log.csv"}, timer.seconds(),
                   {{"bundle_hash", hex64(bundle_hash(args.bundle_dir))},
                    {"best_epoch", result.best_epoch},
                    {"diverged", result.diverged}});
    if (result.diverged) {
        throw NumericError("training diverged; last good checkpoint retained at " + ckpt);
    }
    return {ckpt, result};
}

// ---- evaluate ----------------------------------------------------------------

struct EvaluateArgs {
    std::string bundle_dir;
    std::string checkpoint_path;
    std::string out_dir;
    std::optional<uint64_t> seed;
    std::optional<int> eval_negatives;
    std::vector<int> ks = {1, 2, 4, 5, 6, 8, 10};
    AucMode auc_mode = AucMode::PerList;
    bool all_test_positives = false;
    std::string export_item_vectors; // optional paths
    std::string export_user_vectors;
    std::string dump_rankings;
};

inline MetricsReport cmd_evaluate(const EvaluateArgs& args) {
    WallTimer timer;
    LoadedBundle bundle = load_bundle(args.bundle_dir);
    Checkpoint ck = load_checkpoint(args.checkpoint_path);
    if (ck.meta.num_users != std::max<int32_t>(1, bundle.data.num_users) ||
        ck.meta.num_entities != std::max<int32_t>(1, bundle.data.num_entities) ||
        ck.meta.num_relations != std::max<int32_t>(1, bundle.data.num_relations)) {
        throw DataError("checkpoint entity/user/relation counts do not match the bundle");
    }
    const uint64_t eval_seed = args.seed ? *args.seed : bundle.meta.at("seed").get<uint64_t>();
    const int num_negatives =
        args.eval_negatives ? *args.eval_negatives
                            : bundle.meta.at("config").at("eval_negatives").get<int>();

    const auto ripples = ripples_for(bundle, ck.meta.ripple_fingerprint(), ck.meta.ripple_options());
    const auto histories =
        detail::histories_for(bundle.data, ck.meta.n, ck.meta.history_kind(), ck.meta.seed);
    const auto scaffolds =
        detail::build_test_scaffolds(bundle.data, num_negatives, eval_seed, args.all_test_positives);
    const EncoderConfig enc{ck.meta.L, ck.meta.attention_logit_relu == 1, ck.meta.encoder_kind()};
    detail::ScoredEval scored =
        detail::score_scaffolds(ck.params, enc, ripples, histories, scaffolds, args.ks, args.auc_mode);

    std::filesystem::create_directories(args.out_dir);
    write_text(args.out_dir + "/metrics.csv", metrics_to_csv(scored.report));
    nlohmann::json fingerprint;
    fingerprint["d"] = ck.meta.d;
    fingerprint["d_h"] = ck.meta.d_h;
    fingerprint["L"] = ck.meta.L;
    fingerprint["k"] = ck.meta.k;
    fingerprint["n"] = ck.meta.n;
    fingerprint["seed"] = ck.meta.seed;
    fingerprint["eval_seed"] = eval_seed;
    fingerprint["eval_negatives"] = num_negatives;
    fingerprint["user_encoder"] = ck.meta.user_encoder == 1 ? "sum" : "rnn";
    write_text(args.out_dir + "/metrics.json",
               metrics_to_json(scored.report, fingerprint).dump(2) + "\n");

    std::vector<std::string> artifacts = {args.out_dir + "/metrics.csv",
                                          args.out_dir + "/metrics.json"};
    if (!args.export_item_vectors.empty() || !args.export_user_vectors.empty()) {
        ScoringContext ctx(ck.params, ripples, histories, enc);
        if (!args.export_item_vectors.empty()) {
            std::string out;
            for (ItemId v : bundle.data.catalog) out += vector_export_line(v, ctx.item_vec(v));
            write_text(args.export_item_vectors, out);
            artifacts.push_back(args.export_item_vectors);
        }
        if (!args.export_user_vectors.empty()) {
            std::string out;
            for (UserId u = 0; u < bundle.data.num_users; ++u) {
                out += vector_export_line(u, ctx.user_vec(u));
            }
            write_text(args.export_user_vectors, out);
            artifacts.push_back(args.export_user_vectors);
        }
    }
    if (!args.dump_rankings.empty()) {
        write_text(args.dump_rankings, ranked_lists_dump(scored.lists));
        artifacts.push_back(args.dump_rankings);
    }

    std::cout << "evaluated " << scored.report.user_count << " users auc "
              << fmt_double(scored.report.auc) << "\n";
    std::cout << "metric";
    for (int k : args.ks) std::cout << "\tK=" << k;
    std::cout << "\n";
    auto print_row = [&](const char* name, const std::map<int, double>& m) {
        std::cout << name;
        for (int k : args.ks) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.4f", m.at(k));
            std::cout << '\t' << buf;
        }
        std::cout << "\n";
    };
    print_row("precision", scored.report.precision);
    print_row("recall", scored.report.recall);
    print_row("mrr", scored.report.mrr);

    TrainConfig manifest_cfg; // evaluation runs off the checkpoint fingerprint
    manifest_cfg.d = ck.meta.d;
    manifest_cfg.d_h = ck.meta.d_h;
    manifest_cfg.L = ck.meta.L;
    manifest_cfg.k = ck.meta.k;
    manifest_cfg.n = ck.meta.n;
    manifest_cfg.seed = eval_seed;
    manifest_cfg.eval_negatives = num_negatives;
    manifest_cfg.user_encoder = ck.meta.encoder_kind();
    manifest_cfg.ks = args.ks;
    manifest_cfg.auc_mode = args.auc_mode;
    manifest_cfg.all_test_positives = args.all_test_positives;
    write_manifest(args.out_dir, "evaluate", manifest_cfg,
                   {{"bundle_meta", args.bundle_dir + "/meta.json"},
                    {"checkpoint", args.checkpoint_path}},
                   artifacts, timer.seconds(),
                   {{"bundle_hash", hex64(bundle_hash(args.bundle_dir))}});
    return scored.report;
}

// ---- ablate ------------------------------------------------------------------

struct AblateArgs {
    std::string bundle_dir;
    std::string out_dir;
    TrainConfig cfg;
    bool seed_explicit = false;
};

struct AblateResult {
    double auc_full = 0.0;     // with the recurrent user encoder
    double auc_ablation = 0.0; // sum encoder
};

inline AblateResult cmd_ablate(const AblateArgs& args) {
    WallTimer timer;
    LoadedBundle bundle = load_bundle(args.bundle_dir);
    TrainConfig cfg = args.cfg;
    if (!args.seed_explicit) cfg.seed = bundle.meta.at("seed").get<uint64_t>();
    cfg = cfg.resolved();
    cfg.validate();
    const uint64_t shared_bundle_hash = bundle_hash(args.bundle_dir);

    const RippleFingerprint want{cfg.L, cfg.k, cfg.seed, cfg.ripple.with_replacement,
                                 cfg.ripple.exclude_before_sampling};
    const auto ripples = ripples_for(bundle, want, cfg.ripple);
    const auto histories =
        detail::histories_for(bundle.data, cfg.n, cfg.history_mode, cfg.seed);
    const int num_negatives = cfg.eval_negatives;
    const auto scaffolds =
        detail::build_test_scaffolds(bundle.data, num_negatives, cfg.seed, cfg.all_test_positives);

    std::filesystem::create_directories(args.out_dir);
    AblateResult res;
    std::vector<std::string> artifacts;
    for (const bool ablation : {false, true}) {
        TrainConfig variant = cfg;
        variant.user_encoder = ablation ? UserEncoderKind::Sum : UserEncoderKind::Rnn;
        const TrainResult tr = train(variant, bundle.data, &ripples);
        const EncoderConfig enc{variant.L, variant.attention_logit_relu, variant.user_encoder};
        const auto scored = detail::score_scaffolds(tr.params, enc, ripples, histories, scaffolds,
                                                    cfg.ks, cfg.auc_mode);
        const std::string tag = ablation ? "urir_rnn_ablation" : "urir";
        write_text(args.out_dir + "/epoch_log_" + tag + ".csv", epoch_log_to_csv(tr.log));
        save_checkpoint(args.out_dir + "/checkpoint_" + tag + ".urck", tr.params,
                        CheckpointMeta::from_config(variant,
                                                    std::max<int32_t>(1, bundle.data.num_users),
                                                    std::max<int32_t>(1, bundle.data.num_entities),
                                                    std::max<int32_t>(1, bundle.data.num_relations)));
        artifacts.push_back(args.out_dir + "/epoch_log_" + tag + ".csv");
        artifacts.push_back(args.out_dir + "/checkpoint_" + tag + ".urck");
        (ablation ? res.auc_ablation : res.auc_full) = scored.report.auc;
    }

    char delta[32];
    std::snprintf(delta, sizeof(delta), "%.2f",
                  (res.auc_ablation - res.auc_full) / res.auc_full * 100.0);
    std::string csv = "model,auc,delta_pct\n";
    csv += "URIR," + fmt_double(res.auc_full) + ",\n";
    csv += "URIR-RNN," + fmt_double(res.auc_ablation) + "," + delta + "\n";
    write_text(args.out_dir + "/ablation.csv", csv);
    artifacts.push_back(args.out_dir + "/ablation.csv");
    std::cout << csv;

    write_manifest(args.out_dir, "ablate", cfg, {{"bundle_meta", args.bundle_dir + "/meta.json"}},
                   artifacts, timer.seconds(),
                   {{"bundle_hash", hex64(shared_bundle_hash)},
                    {"bundle_hash_ablation", hex64(bundle_hash(args.bundle_dir))}});
    return res;
}

// ---- sweep -------------------------------------------------------------------

struct SweepArgs {
    std::string bundle_dir;
    std::string out_dir;
    TrainConfig cfg;
    bool seed_explicit = false;
    std::string axis;        // d, L, k or n (single-axis mode)
    std::vector<int> values; // single-axis mode
    bool chain = false;      // sweep d, then L, then k, then n
    std::map<std::string, std::vector<int>> chain_values;
    int jobs = 1;
};

struct SweepPoint {
    std::string axis;
    int value = 0;
    double auc = 0.0;
    double seconds = 0.0;
};

struct SweepResult {
    std::vector<SweepPoint> points;
    TrainConfig chosen; // chained mode: best value fixed per axis
};

namespace detail {

inline void set_axis(TrainConfig& cfg, const std::string& axis, int value) {
    if (axis == "d") cfg.d = value;
    else if (axis == "L") cfg.L = value;
    else if (axis == "k") cfg.k = value;
    else if (axis == "n") cfg.n = value;
    else throw ConfigError("sweep: axis must be one of d, L, k, n; got " + axis);
}

} // namespace detail

inline SweepResult cmd_sweep(const SweepArgs& args) {
    WallTimer timer;
    LoadedBundle bundle = load_bundle(args.bundle_dir);
    TrainConfig base = args.cfg;
    if (!args.seed_explicit) base.seed = bundle.meta.at("seed").get<uint64_t>();
    base.validate();
    if (args.jobs < 1) throw ConfigError("sweep: jobs must be >= 1");

    const auto scaffolds = detail::build_test_scaffolds(bundle.data, base.eval_negatives, base.seed,
                                                        base.all_test_positives);

    std::filesystem::create_directories(args.out_dir);

    // One full train + evaluate; pure in its inputs so points may run
    // in parallel worker threads.
    auto run_point = [&](const TrainConfig& pt) {
        WallTimer point_timer;
        const TrainConfig cfg = pt.resolved();
        const RippleFingerprint want{cfg.L, cfg.k, cfg.seed, cfg.ripple.with_replacement,
                                     cfg.ripple.exclude_before_sampling};
        const auto ripples = ripples_for(bundle, want, cfg.ripple);
        const TrainResult tr = train(cfg, bundle.data, &ripples);
        const auto histories = detail::histories_for(bundle.data, cfg.n, cfg.history_mode, cfg.seed);
        const EncoderConfig enc{cfg.L, cfg.attention_logit_relu, cfg.user_encoder};
        const auto scored = detail::score_scaffolds(tr.params, enc, ripples, histories, scaffolds,
                                                    cfg.ks, cfg.auc_mode);
        return std::pair<double, double>{scored.report.auc, point_timer.seconds()};
    };

    auto sweep_axis = [&](const TrainConfig& cfg, const std::string& axis,
                          const std::vector<int>& values) {
        std::vector<SweepPoint> points(values.size());
        size_t next = 0;
        while (next < values.size()) {
            const size_t stop = std::min(values.size(), next + static_cast<size_t>(args.jobs));
            std::vector<std::future<std::pair<double, double>>> futs;
            for (size_t i = next; i < stop; ++i) {
                TrainConfig pt = cfg;
                detail::set_axis(pt, axis, values[i]);
                pt.d_h = 0; // hidden width follows d at every point
                futs.push_back(std::async(std::launch::async, run_point, pt));
            }
            for (size_t i = next; i < stop; ++i) {
                const auto [auc, seconds] = futs[i - next].get();
                points[i] = {axis, values[i], auc, seconds};
            }
            next = stop;
        }
        return points;
    };

    auto write_axis_csv = [&](const std::string& name, const std::vector<SweepPoint>& points) {
        std::string csv = "axis,value,auc,seconds\n";
        for (const SweepPoint& p : points) {
            csv += p.axis + "," + std::to_string(p.value) + "," + fmt_double(p.auc) + "," +
                   fmt_double(p.seconds) + "\n";
        }
        write_text(args.out_dir + "/" + name, csv);
        std::cout << csv;
    };

    SweepResult result;
    result.chosen = base;
    std::vector<std::string> artifacts;
    if (args.chain) {
        // adjustment order: d, then L, then k, then n
        const std::vector<std::string> order = {"d", "L", "k", "n"};
        std::map<std::string, std::vector<int>> grids = {{"d", {4, 8, 16, 32, 64}},
                                                         {"L", {1, 2, 3, 4}},
                                                         {"k", {2, 4, 8, 16}},
                                                         {"n", {5, 10, 15, 20}}};
        for (const auto& [axis, values] : args.chain_values) grids[axis] = values;
        std::string chosen_csv = "axis,value\n";
        for (const std::string& axis : order) {
            const auto points = sweep_axis(result.chosen, axis, grids[axis]);
            write_axis_csv("sweep_" + axis + ".csv", points);
            artifacts.push_back(args.out_dir + "/sweep_" + axis + ".csv");
            const auto best = std::max_element(points.begin(), points.end(),
                                               [](const SweepPoint& a, const SweepPoint& b) {
                                                   return a.auc < b.auc;
                                               });
            detail::set_axis(result.chosen, axis, best->value);
            result.chosen.d_h = 0;
            chosen_csv += axis + "," + std::to_string(best->value) + "\n";
            result.points.insert(result.points.end(), points.begin(), points.end());
        }
        write_text(args.out_dir + "/chosen.csv", chosen_csv);
        artifacts.push_back(args.out_dir + "/chosen.csv");
        std::cout << chosen_csv;
    } else {
        if (args.values.empty()) throw ConfigError("sweep: provide --values for the axis");
        result.points = sweep_axis(base, args.axis, args.values);
        write_axis_csv("sweep_" + args.axis + ".csv", result.points);
        artifacts.push_back(args.out_dir + "/sweep_" + args.axis + ".csv");
    }

    write_manifest(args.out_dir, "sweep", base, {{"bundle_meta", args.bundle_dir + "/meta.json"}},
                   artifacts, timer.seconds(),
                   {{"bundle_hash", hex64(bundle_hash(args.bundle_dir))},
                    {"jobs", args.jobs},
                    {"chain", args.chain}});
    return result;
}

} // namespace urir::cli
