#pragma once
// Prepared-dataset bundle: a self-contained directory with vocabularies,
// the id-indexed graph, the split, sampled negatives, validation
// candidate lists and the ripple-set cache. Re-running preparation with
// the same inputs and seed reproduces every file byte for byte.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "urir/errors.hpp"
#include "urir/eval.hpp"
#include "urir/graph_store.hpp"
#include "urir/trainer.hpp"

namespace urir {

inline uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot hash missing file: " + path);
    uint64_t h = 0xCBF29CE484222325ull;
    char buf[1 << 14];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<uint8_t>(buf[i]);
            h *= 0x100000001B3ull;
        }
        if (!in) break;
    }
    return h;
}

inline std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Data files that define a bundle's identity (manifest excluded).
inline const std::vector<std::string>& bundle_files() {
    static const std::vector<std::string> files = {
        "meta.json",       "entity_vocab.tsv", "relation_vocab.tsv", "user_vocab.tsv",
        "kg.tsv",          "items.tsv",        "train.tsv",          "val.tsv",
        "test.tsv",        "negatives.tsv",    "val_candidates.tsv", "ripple_cache.tsv",
    };
    return files;
}

inline uint64_t bundle_hash(const std::string& dir) {
    uint64_t h = 0xCBF29CE484222325ull;
    for (const std::string& name : bundle_files()) {
        const uint64_t fh = fnv1a_file(dir + "/" + name);
        for (int i = 0; i < 8; ++i) {
            h ^= static_cast<uint8_t>(fh >> (8 * i));
            h *= 0x100000001B3ull;
        }
    }
    return h;
}

struct BundleContent {
    Vocab entity_vocab, relation_vocab, user_vocab;
    KnowledgeGraph kg; // entity axis already extended to cover all items
    std::vector<ItemId> catalog;
    std::vector<Interaction> train_fit, val, test;
    std::vector<TrainExample> negatives;
    std::vector<RankedList> val_scaffolds;
    std::map<ItemId, RippleSets> ripples;
    RippleFingerprint ripple_fp;
    nlohmann::json meta;
};

namespace detail {

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    return out;
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    return in;
}

inline void write_pairs(const std::string& path, const std::vector<Interaction>& records) {
    auto out = open_out(path);
    for (const Interaction& r : records) out << r.user << '\t' << r.item << '\n';
}

inline std::vector<Interaction> read_pairs(const std::string& path) {
    auto in = open_in(path);
    std::vector<Interaction> records;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        Interaction r;
        if (std::sscanf(line.c_str(), "%d\t%d", &r.user, &r.item) != 2) {
            throw ParseError("bundle pair parse error in " + path);
        }
        r.record_index = static_cast<int64_t>(records.size());
        records.push_back(r);
    }
    return records;
}

} // namespace detail

inline void write_bundle(const std::string& dir, const BundleContent& b) {
    std::filesystem::create_directories(dir);
    b.entity_vocab.save(dir + "/entity_vocab.tsv");
    b.relation_vocab.save(dir + "/relation_vocab.tsv");
    b.user_vocab.save(dir + "/user_vocab.tsv");

    {
        auto out = detail::open_out(dir + "/kg.tsv");
        for (EntityId h = 0; h < b.kg.entity_count; ++h) {
            for (const auto& [rel, tail] : b.kg.out_edges(h)) {
                out << h << '\t' << rel << '\t' << tail << '\n';
            }
        }
    }
    {
        auto out = detail::open_out(dir + "/items.tsv");
        for (ItemId v : b.catalog) out << v << '\n';
    }
    detail::write_pairs(dir + "/train.tsv", b.train_fit);
    detail::write_pairs(dir + "/val.tsv", b.val);
    detail::write_pairs(dir + "/test.tsv", b.test);
    {
        auto out = detail::open_out(dir + "/negatives.tsv");
        for (const TrainExample& e : b.negatives) out << e.user << '\t' << e.item << '\n';
    }
    {
        auto out = detail::open_out(dir + "/val_candidates.tsv");
        for (const RankedList& list : b.val_scaffolds) {
            out << list.user << '\t' << list.positive << '\t';
            for (size_t i = 1; i < list.candidates.size(); ++i) {
                if (i > 1) out << ',';
                out << list.candidates[i];
            }
            out << '\n';
        }
    }
    save_ripple_cache(dir + "/ripple_cache.tsv", b.ripple_fp, b.ripples);
    {
        auto out = detail::open_out(dir + "/meta.json");
        out << b.meta.dump(2) << '\n';
    }
}

struct LoadedBundle {
    Dataset data;
    Vocab entity_vocab, relation_vocab, user_vocab;
    RippleFingerprint cache_fp;
    nlohmann::json meta;
    std::string dir;
};

inline LoadedBundle load_bundle(const std::string& dir) {
    LoadedBundle b;
    b.dir = dir;
    {
        auto in = detail::open_in(dir + "/meta.json");
        try {
            in >> b.meta;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("bundle meta.json parse error: " + std::string(e.what()));
        }
    }
    b.entity_vocab = Vocab::load(dir + "/entity_vocab.tsv");
    b.relation_vocab = Vocab::load(dir + "/relation_vocab.tsv");
    b.user_vocab = Vocab::load(dir + "/user_vocab.tsv");

    std::vector<Triple> triples;
    {
        auto in = detail::open_in(dir + "/kg.tsv");
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            Triple t;
            if (std::sscanf(line.c_str(), "%d\t%d\t%d", &t.head, &t.relation, &t.tail) != 3) {
                throw ParseError("bundle kg.tsv parse error in " + dir);
            }
            triples.push_back(t);
        }
    }
    b.data.kg = kg_from_triples(b.entity_vocab.size(), b.relation_vocab.size(), triples);
    b.data.num_users = b.user_vocab.size();
    b.data.num_entities = b.entity_vocab.size();
    b.data.num_relations = b.relation_vocab.size();

    {
        auto in = detail::open_in(dir + "/items.tsv");
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            b.data.catalog.push_back(static_cast<ItemId>(std::stol(line)));
        }
    }
    b.data.train_fit = detail::read_pairs(dir + "/train.tsv");
    b.data.val = detail::read_pairs(dir + "/val.tsv");
    b.data.test = detail::read_pairs(dir + "/test.tsv");
    for (const Interaction& r : detail::read_pairs(dir + "/negatives.tsv")) {
        b.data.negatives.push_back({r.user, r.item, 0.0});
    }
    {
        auto in = detail::open_in(dir + "/val_candidates.tsv");
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            std::istringstream ls(line);
            std::string user_s, pos_s, negs_s;
            std::getline(ls, user_s, '\t');
            std::getline(ls, pos_s, '\t');
            std::getline(ls, negs_s);
            RankedList list;
            list.user = static_cast<UserId>(std::stol(user_s));
            list.positive = static_cast<ItemId>(std::stol(pos_s));
            list.candidates.push_back(list.positive);
            std::istringstream ns(negs_s);
            std::string tok;
            while (std::getline(ns, tok, ',')) {
                if (!tok.empty()) list.candidates.push_back(static_cast<ItemId>(std::stol(tok)));
            }
            b.data.val_lists.push_back(std::move(list));
        }
    }

    const auto& fp = b.meta.at("ripple");
    b.cache_fp.L = fp.at("L").get<int>();
    b.cache_fp.k = fp.at("k").get<int>();
    b.cache_fp.seed = fp.at("seed").get<uint64_t>();
    b.cache_fp.with_replacement = fp.at("with_replacement").get<bool>();
    b.cache_fp.exclude_before_sampling = fp.at("exclude_before_sampling").get<bool>();
    return b;
}

// Cache hit when the fingerprint matches; otherwise rebuild in memory
// (the bundle on disk is left untouched).
inline std::map<ItemId, RippleSets> ripples_for(const LoadedBundle& b, const RippleFingerprint& want,
                                                const RippleOptions& opt) {
    if (want == b.cache_fp) {
        auto cached = load_ripple_cache(b.dir + "/ripple_cache.tsv", want, want.L);
        if (cached) return std::move(*cached);
    }
    return build_all_ripples(b.data.kg, b.data.catalog, want.L, want.k, want.seed, opt);
}

} // namespace urir
