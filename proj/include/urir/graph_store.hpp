#pragma once
// Knowledge-graph storage and level-wise neighbor expansion.
//
// The graph file is UTF-8, one `head<TAB>relation<TAB>tail` triple per
// line. Tokens are mapped to dense 0-based ids by first appearance and
// persisted via Vocab so re-runs are stable. Adjacency lists are sorted
// by (relation, tail) and duplicate triples are dropped with a count.
//
// build_ripple_sets expands an item level by level: every entity reached
// at level l-1 contributes up to k of its outgoing triples (seeded
// sampling without replacement by default), and a tail already visited at
// any earlier level is excluded. Sampling uses one RNG sub-stream per
// (level, entity), so it is independent of expansion order.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "urir/errors.hpp"
#include "urir/rng.hpp"
#include "urir/types.hpp"

namespace urir {

class Vocab {
public:
    int32_t get_or_add(const std::string& token) {
        auto it = index_.find(token);
        if (it != index_.end()) return it->second;
        const int32_t id = static_cast<int32_t>(tokens_.size());
        tokens_.push_back(token);
        index_.emplace(token, id);
        return id;
    }

    int32_t lookup(const std::string& token) const {
        auto it = index_.find(token);
        return it != index_.end() ? it->second : -1;
    }

    const std::string& token(int32_t id) const { return tokens_.at(static_cast<size_t>(id)); }

    int32_t size() const { return static_cast<int32_t>(tokens_.size()); }

    // `token<TAB>id` lines in id order.
    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw DataError("cannot write vocabulary file: " + path);
        for (size_t i = 0; i < tokens_.size(); ++i) {
            out << tokens_[i] << '\t' << i << '\n';
        }
    }

    static Vocab load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot open vocabulary file: " + path);
        Vocab v;
        std::string line;
        int64_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            const size_t tab = line.rfind('\t');
            if (tab == std::string::npos) {
                throw ParseError("vocabulary parse error at line " + std::to_string(line_no) + ": " + path);
            }
            const std::string token = line.substr(0, tab);
            const int32_t id = static_cast<int32_t>(std::stol(line.substr(tab + 1)));
            if (id != v.size()) {
                throw ParseError("vocabulary ids out of order at line " + std::to_string(line_no) + ": " + path);
            }
            v.get_or_add(token);
        }
        return v;
    }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int32_t> index_;
};

struct KnowledgeGraph {
    // adjacency[h] = outgoing (relation, tail) pairs, sorted.
    std::vector<std::vector<std::pair<RelationId, EntityId>>> adjacency;
    int32_t entity_count = 0;
    int32_t relation_count = 0;
    int64_t triple_count = 0;

    const std::vector<std::pair<RelationId, EntityId>>& out_edges(EntityId e) const {
        return adjacency[static_cast<size_t>(e)];
    }

    // Grow the entity axis for items that appear in interactions but not
    // in the graph; such entities have no out-edges.
    void extend_entities(int32_t new_count) {
        if (new_count > entity_count) {
            adjacency.resize(static_cast<size_t>(new_count));
            entity_count = new_count;
        }
    }
};

inline KnowledgeGraph kg_from_triples(int32_t entity_count, int32_t relation_count,
                                      const std::vector<Triple>& triples) {
    KnowledgeGraph kg;
    kg.entity_count = entity_count;
    kg.relation_count = relation_count;
    kg.adjacency.resize(static_cast<size_t>(entity_count));
    for (const Triple& t : triples) {
        kg.adjacency[static_cast<size_t>(t.head)].emplace_back(t.relation, t.tail);
    }
    for (auto& list : kg.adjacency) std::sort(list.begin(), list.end());
    kg.triple_count = static_cast<int64_t>(triples.size());
    return kg;
}

struct KgLoadResult {
    KnowledgeGraph graph;
    Vocab entities;
    Vocab relations;
    int64_t duplicates_dropped = 0;
};

namespace detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    size_t start = 0;
    while (true) {
        const size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return fields;
}

} // namespace detail

inline KgLoadResult load_kg(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open knowledge graph file: " + path);
    KgLoadResult res;
    std::vector<Triple> triples;
    std::string line;
    int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = detail::split_tabs(line);
        if (fields.size() != 3 || fields[0].empty() || fields[1].empty() || fields[2].empty()) {
            throw ParseError("kg parse error at line " + std::to_string(line_no) +
                             ": expected head<TAB>relation<TAB>tail in " + path);
        }
        Triple t;
        t.head = res.entities.get_or_add(fields[0]);
        t.relation = res.relations.get_or_add(fields[1]);
        t.tail = res.entities.get_or_add(fields[2]);
        triples.push_back(t);
    }
    if (triples.empty()) {
        throw EmptyGraphError("empty knowledge graph: " + path);
    }

    auto& kg = res.graph;
    kg.entity_count = res.entities.size();
    kg.relation_count = res.relations.size();
    kg.adjacency.resize(static_cast<size_t>(kg.entity_count));
    for (const Triple& t : triples) {
        kg.adjacency[static_cast<size_t>(t.head)].emplace_back(t.relation, t.tail);
    }
    for (auto& list : kg.adjacency) {
        std::sort(list.begin(), list.end());
        const auto last = std::unique(list.begin(), list.end());
        res.duplicates_dropped += list.end() - last;
        list.erase(last, list.end());
        kg.triple_count += static_cast<int64_t>(list.size());
    }
    return res;
}

// ---- ripple sets ---------------------------------------------------------

struct RippleOptions {
    bool with_replacement = false;        // fixed-size draws, duplicates allowed
    bool exclude_before_sampling = false; // filter visited tails before sampling
};

struct RippleSets {
    ItemId item = 0;
    std::vector<std::vector<Triple>> levels;    // levels[l-1] holds the level-l triples
    std::vector<std::vector<EntityId>> visited; // visited[l] = entities first reached at level l; visited[0] = {item}
};

inline RippleSets build_ripple_sets(const KnowledgeGraph& kg, ItemId item, int level_count,
                                    int sample_size, uint64_t seed,
                                    const RippleOptions& opt = {}) {
    if (level_count < 1 || sample_size < 1) {
        throw ConfigError("build_ripple_sets: level count and sample size must be >= 1");
    }
    if (item < 0 || item >= kg.entity_count) {
        throw IndexError("build_ripple_sets: item " + std::to_string(item) + " out of range [0," +
                         std::to_string(kg.entity_count) + ")");
    }
    RippleSets rs;
    rs.item = item;
    rs.visited.push_back({item});
    std::vector<char> seen(static_cast<size_t>(kg.entity_count), 0);
    seen[static_cast<size_t>(item)] = 1;

    std::vector<EntityId> frontier = {item};
    for (int level = 1; level <= level_count; ++level) {
        std::vector<Triple> level_triples;
        std::vector<EntityId> new_tails;
        for (EntityId head : frontier) {
            const auto& adj = kg.out_edges(head);
            std::vector<std::pair<RelationId, EntityId>> candidates;
            if (opt.exclude_before_sampling) {
                for (const auto& e : adj) {
                    if (!seen[static_cast<size_t>(e.second)]) candidates.push_back(e);
                }
            } else {
                candidates.assign(adj.begin(), adj.end());
            }
            if (candidates.empty()) continue;

            std::vector<size_t> picks;
            const size_t k = static_cast<size_t>(sample_size);
            if (opt.with_replacement || candidates.size() > k) {
                Rng rng(sub_seed(seed, Stream::RippleNode, static_cast<uint64_t>(level),
                                 static_cast<uint64_t>(head)));
                picks = opt.with_replacement ? rng.sample_with_replacement(candidates.size(), k)
                                             : rng.sample_without_replacement(candidates.size(), k);
                std::sort(picks.begin(), picks.end());
            } else {
                picks.resize(candidates.size());
                std::iota(picks.begin(), picks.end(), size_t{0});
            }

            for (size_t idx : picks) {
                const auto& [rel, tail] = candidates[idx];
                if (!opt.exclude_before_sampling && seen[static_cast<size_t>(tail)]) continue;
                level_triples.push_back({head, rel, tail});
                new_tails.push_back(tail);
            }
        }
        // visited entities of this level; marking happens after the whole
        // level so same-level tails never exclude each other (j < l only)
        std::sort(new_tails.begin(), new_tails.end());
        new_tails.erase(std::unique(new_tails.begin(), new_tails.end()), new_tails.end());
        for (EntityId t : new_tails) seen[static_cast<size_t>(t)] = 1;
        rs.levels.push_back(std::move(level_triples));
        rs.visited.push_back(new_tails);
        frontier = rs.visited.back();
    }
    return rs;
}

inline std::string serialize_ripple(const RippleSets& rs) {
    std::ostringstream out;
    for (size_t l = 0; l < rs.levels.size(); ++l) {
        out << rs.item << '\t' << (l + 1) << '\t';
        for (size_t i = 0; i < rs.levels[l].size(); ++i) {
            const Triple& t = rs.levels[l][i];
            if (i > 0) out << ' ';
            out << t.head << ',' << t.relation << ',' << t.tail;
        }
        out << '\n';
    }
    return out.str();
}

// ---- ripple cache ----------------------------------------------------------
//
// Line-delimited text, keyed by a fingerprint header; readers must
// rebuild when (L, k, seed, flags) differ from their configuration.

struct RippleFingerprint {
    int L = 0;
    int k = 0;
    uint64_t seed = 0;
    bool with_replacement = false;
    bool exclude_before_sampling = false;

    bool operator==(const RippleFingerprint&) const = default;

    std::string header() const {
        std::ostringstream out;
        out << "# urir-ripple v1 L=" << L << " k=" << k << " seed=" << seed
            << " wr=" << (with_replacement ? 1 : 0) << " xbs=" << (exclude_before_sampling ? 1 : 0);
        return out.str();
    }
};

inline void save_ripple_cache(const std::string& path, const RippleFingerprint& fp,
                              const std::map<ItemId, RippleSets>& ripples) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write ripple cache: " + path);
    out << fp.header() << '\n';
    for (const auto& [item, rs] : ripples) out << serialize_ripple(rs);
}

inline std::optional<std::map<ItemId, RippleSets>> load_ripple_cache(const std::string& path,
                                                                     const RippleFingerprint& fp,
                                                                     int level_count) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    std::string line;
    if (!std::getline(in, line)) return std::nullopt;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != fp.header()) return std::nullopt; // stale cache

    std::map<ItemId, RippleSets> ripples;
    int64_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string item_s, level_s, payload;
        std::getline(ls, item_s, '\t');
        std::getline(ls, level_s, '\t');
        std::getline(ls, payload);
        ItemId item;
        int level;
        try {
            item = static_cast<ItemId>(std::stol(item_s));
            level = std::stoi(level_s);
        } catch (const std::exception&) {
            throw ParseError("ripple cache parse error at line " + std::to_string(line_no) + ": " + path);
        }
        auto& rs = ripples[item];
        rs.item = item;
        if (static_cast<int>(rs.levels.size()) != level - 1) {
            throw ParseError("ripple cache levels out of order at line " + std::to_string(line_no) + ": " + path);
        }
        std::vector<Triple> triples;
        std::istringstream ps(payload);
        std::string tok;
        while (ps >> tok) {
            Triple t;
            if (std::sscanf(tok.c_str(), "%d,%d,%d", &t.head, &t.relation, &t.tail) != 3) {
                throw ParseError("ripple cache parse error at line " + std::to_string(line_no) + ": " + path);
            }
            triples.push_back(t);
        }
        rs.levels.push_back(std::move(triples));
    }
    // rebuild visited sets from the stored levels
    for (auto& [item, rs] : ripples) {
        if (static_cast<int>(rs.levels.size()) != level_count) return std::nullopt;
        rs.visited.clear();
        rs.visited.push_back({rs.item});
        for (const auto& level : rs.levels) {
            std::vector<EntityId> tails;
            for (const Triple& t : level) tails.push_back(t.tail);
            std::sort(tails.begin(), tails.end());
            tails.erase(std::unique(tails.begin(), tails.end()), tails.end());
            rs.visited.push_back(std::move(tails));
        }
    }
    return ripples;
}

} // namespace urir
