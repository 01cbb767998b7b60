// urir: knowledge-graph recommender pipeline.
//
//   urir prepare  --interactions F --kg F --out DIR [config]
//   urir train    --bundle DIR --out DIR [config]
//   urir evaluate --bundle DIR --checkpoint F --out DIR [flags]
//   urir ablate   --bundle DIR --out DIR [config]
//   urir sweep    --bundle DIR --out DIR (--axis A --values V | --chain) [config]
//
// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numeric
// divergence.

#include <iostream>
#include <map>
#include <set>
#include <string>

#include <CLI11.hpp>

#include "urir/cli.hpp"

namespace {

struct ConfigCli {
    std::string preset;
    std::string config_file;
    std::map<std::string, std::string> kv; // explicitly passed knobs

    void add_to(CLI::App* cmd) {
        cmd->add_option("--preset", preset, "parameter preset: job, ml or yelp");
        cmd->add_option("--config", config_file, "config file of key = value lines");
        auto opt = [this, cmd](const std::string& flag, const std::string& key,
                               const std::string& help) {
            cmd->add_option_function<std::string>(
                flag, [this, key](const std::string& v) { kv[key] = v; }, help);
        };
        opt("--d", "d", "embedding dimension");
        opt("--d-h", "d_h", "attention hidden width (0 follows d)");
        opt("--k", "k", "neighbors sampled per node");
        opt("--L", "L", "neighbor expansion depth");
        opt("--n", "n", "user history length");
        opt("--learning-rate", "learning_rate", "Adam learning rate");
        opt("--epochs", "epochs", "training epochs");
        opt("--batch-size", "batch_size", "mini-batch size");
        opt("--lambda", "lambda", "L2 regularization coefficient");
        opt("--neg-ratio", "neg_ratio", "positives:negatives ratio, e.g. 4:1");
        opt("--seed", "seed", "RNG seed (defaults to the bundle's seed)");
        opt("--user-encoder", "user_encoder", "user encoder: rnn or sum");
        opt("--history-mode", "history_mode", "history truncation: last, first or random");
        opt("--split-ratio", "split_ratio", "train fraction of the per-user split");
        opt("--cold-start-max", "cold_start_max", "drop users with >= this many interactions (0 off)");
        opt("--eval-negatives", "eval_negatives", "negatives per ranked list");
        opt("--val-fraction", "val_fraction", "training positives held out for validation");
        opt("--auc-mode", "auc_mode", "AUC aggregation: perlist or global");
        opt("--ks", "ks", "comma-separated K values for ranking metrics");
        cmd->add_flag_callback(
            "--no-attention-logit-relu",
            [this]() { kv["attention_logit_relu"] = "false"; },
            "drop the final ReLU on the attention logit");
        cmd->add_flag_callback(
            "--ripple-with-replacement",
            [this]() { kv["ripple_with_replacement"] = "true"; },
            "sample neighbor triples with replacement");
        cmd->add_flag_callback(
            "--ripple-exclude-before-sampling",
            [this]() { kv["ripple_exclude_before_sampling"] = "true"; },
            "apply visited-tail exclusion before sampling");
        cmd->add_flag_callback(
            "--all-test-positives",
            [this]() { kv["all_test_positives"] = "true"; },
            "rank one list per test positive instead of one per user");
    }

    urir::TrainConfig build(bool* seed_explicit) const {
        urir::TrainConfig cfg =
            preset.empty() ? urir::TrainConfig{} : urir::TrainConfig::preset(preset);
        bool seed_seen = false;
        if (!config_file.empty()) {
            seed_seen = urir::cli::apply_config_file(cfg, config_file).count("seed") > 0;
        }
        for (const auto& [key, value] : kv) urir::cli::apply_config_kv(cfg, key, value);
        if (seed_explicit != nullptr) *seed_explicit = seed_seen || kv.count("seed") > 0;
        return cfg;
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"knowledge-graph recommender (attentive item encoder + recurrent user encoder)"};
    app.require_subcommand(1);

    // prepare
    auto* prepare = app.add_subcommand("prepare", "build a dataset bundle from raw files");
    std::string p_interactions, p_kg, p_out;
    prepare->add_option("--interactions", p_interactions, "interaction log (user<TAB>item...)")
        ->required();
    prepare->add_option("--kg", p_kg, "knowledge graph triples (head<TAB>relation<TAB>tail)")
        ->required();
    prepare->add_option("--out", p_out, "bundle output directory")->required();
    ConfigCli p_cfg;
    p_cfg.add_to(prepare);

    // train
    auto* train = app.add_subcommand("train", "train on a prepared bundle");
    std::string t_bundle, t_out;
    train->add_option("--bundle", t_bundle, "bundle directory")->required();
    train->add_option("--out", t_out, "output directory")->required();
    ConfigCli t_cfg;
    t_cfg.add_to(train);

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "rank test candidates with a checkpoint");
    std::string e_bundle, e_ckpt, e_out, e_ks, e_auc_mode, e_items, e_users, e_dump;
    std::string e_seed, e_negatives;
    bool e_all_positives = false;
    evaluate->add_option("--bundle", e_bundle, "bundle directory")->required();
    evaluate->add_option("--checkpoint", e_ckpt, "trained checkpoint")->required();
    evaluate->add_option("--out", e_out, "output directory")->required();
    evaluate->add_option("--seed", e_seed, "candidate sampling seed (defaults to bundle seed)");
    evaluate->add_option("--eval-negatives", e_negatives,
                         "negatives per ranked list (defaults to bundle config)");
    evaluate->add_option("--ks", e_ks, "comma-separated K values");
    evaluate->add_option("--auc-mode", e_auc_mode, "perlist or global");
    evaluate->add_flag("--all-test-positives", e_all_positives,
                       "rank one list per test positive");
    evaluate->add_option("--export-item-vectors", e_items, "write item representation vectors");
    evaluate->add_option("--export-user-vectors", e_users, "write user representation vectors");
    evaluate->add_option("--dump-rankings", e_dump, "write the ranked lists for audit");

    // ablate
    auto* ablate = app.add_subcommand("ablate", "train full and no-RNN variants, compare AUC");
    std::string a_bundle, a_out;
    ablate->add_option("--bundle", a_bundle, "bundle directory")->required();
    ablate->add_option("--out", a_out, "output directory")->required();
    ConfigCli a_cfg;
    a_cfg.add_to(ablate);

    // sweep
    auto* sweep = app.add_subcommand("sweep", "train and evaluate across one hyperparameter axis");
    std::string s_bundle, s_out, s_axis, s_values;
    std::string s_d_values, s_L_values, s_k_values, s_n_values;
    bool s_chain = false;
    int s_jobs = 1;
    sweep->add_option("--bundle", s_bundle, "bundle directory")->required();
    sweep->add_option("--out", s_out, "output directory")->required();
    sweep->add_option("--axis", s_axis, "axis to sweep: d, L, k or n");
    sweep->add_option("--values", s_values, "comma-separated axis values");
    sweep->add_flag("--chain", s_chain, "chained sweep in the order d, L, k, n");
    sweep->add_option("--d-values", s_d_values, "chained mode: values for d");
    sweep->add_option("--L-values", s_L_values, "chained mode: values for L");
    sweep->add_option("--k-values", s_k_values, "chained mode: values for k");
    sweep->add_option("--n-values", s_n_values, "chained mode: values for n");
    sweep->add_option("--jobs", s_jobs, "parallel sweep points");
    ConfigCli s_cfg;
    s_cfg.add_to(sweep);

    try {
        app.parse(argc, argv);

        if (prepare->parsed()) {
            urir::cli::PrepareArgs args;
            args.interactions_path = p_interactions;
            args.kg_path = p_kg;
            args.out_dir = p_out;
            args.cfg = p_cfg.build(nullptr);
            urir::cli::cmd_prepare(args);
        } else if (train->parsed()) {
            urir::cli::TrainArgs args;
            args.bundle_dir = t_bundle;
            args.out_dir = t_out;
            args.cfg = t_cfg.build(&args.seed_explicit);
            urir::cli::cmd_train(args);
        } else if (evaluate->parsed()) {
            urir::cli::EvaluateArgs args;
            args.bundle_dir = e_bundle;
            args.checkpoint_path = e_ckpt;
            args.out_dir = e_out;
            try {
                if (!e_seed.empty()) args.seed = std::stoull(e_seed);
                if (!e_negatives.empty()) args.eval_negatives = std::stoi(e_negatives);
            } catch (const std::exception&) {
                throw urir::ConfigError("evaluate: --seed and --eval-negatives take integers");
            }
            if (!e_ks.empty()) args.ks = urir::cli::parse_int_list(e_ks, "ks");
            if (!e_auc_mode.empty()) {
                if (e_auc_mode == "perlist") args.auc_mode = urir::AucMode::PerList;
                else if (e_auc_mode == "global") args.auc_mode = urir::AucMode::Global;
                else throw urir::ConfigError("auc-mode must be perlist or global");
            }
            args.all_test_positives = e_all_positives;
            args.export_item_vectors = e_items;
            args.export_user_vectors = e_users;
            args.dump_rankings = e_dump;
            urir::cli::cmd_evaluate(args);
        } else if (ablate->parsed()) {
            urir::cli::AblateArgs args;
            args.bundle_dir = a_bundle;
            args.out_dir = a_out;
            args.cfg = a_cfg.build(&args.seed_explicit);
            urir::cli::cmd_ablate(args);
        } else if (sweep->parsed()) {
            urir::cli::SweepArgs args;
            args.bundle_dir = s_bundle;
            args.out_dir = s_out;
            args.cfg = s_cfg.build(&args.seed_explicit);
            args.axis = s_axis;
            if (!s_values.empty()) args.values = urir::cli::parse_int_list(s_values, "values");
            args.chain = s_chain;
            if (!s_d_values.empty())
                args.chain_values["d"] = urir::cli::parse_int_list(s_d_values, "d-values");
            if (!s_L_values.empty())
                args.chain_values["L"] = urir::cli::parse_int_list(s_L_values, "L-values");
            if (!s_k_values.empty())
                args.chain_values["k"] = urir::cli::parse_int_list(s_k_values, "k-values");
            if (!s_n_values.empty())
                args.chain_values["n"] = urir::cli::parse_int_list(s_n_values, "n-values");
            args.jobs = s_jobs;
            if (!args.chain && s_axis.empty()) {
                throw urir::ConfigError("sweep: pass --axis with --values, or --chain");
            }
            urir::cli::cmd_sweep(args);
        }
        return 0;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const urir::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const urir::NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
