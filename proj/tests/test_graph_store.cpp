#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <set>

#include "oracles.hpp"
#include "synth.hpp"
#include "temp_dir.hpp"
#include "urir/graph_store.hpp"

using urir::build_ripple_sets;
using urir::EntityId;
using urir::ItemId;
using urir::KnowledgeGraph;
using urir::load_kg;
using urir::RippleOptions;
using urir::RippleSets;
using urir::Triple;

namespace {

std::map<EntityId, int> per_head_counts(const std::vector<Triple>& level) {
    std::map<EntityId, int> counts;
    for (const Triple& t : level) ++counts[t.head];
    return counts;
}

} // namespace

TEST_CASE("load_kg drops duplicate triples and indexes by first appearance", "[graph_store]") {
    TempDir tmp;
    const auto path = tmp.file("kg.tsv", "a\tlikes\tb\nb\tlikes\tc\na\tlikes\tb\n");
    const auto res = load_kg(path);
    REQUIRE(res.graph.entity_count == 3);
    REQUIRE(res.graph.relation_count == 1);
    REQUIRE(res.graph.triple_count == 2);
    REQUIRE(res.duplicates_dropped == 1);
    REQUIRE(res.entities.token(0) == "a");
    REQUIRE(res.entities.token(1) == "b");
    REQUIRE(res.entities.token(2) == "c");
}

TEST_CASE("load_kg reports malformed lines with their number", "[graph_store]") {
    TempDir tmp;
    const auto path = tmp.file("kg.tsv", "a likes\n");
    REQUIRE_THROWS_MATCHES(load_kg(path), urir::ParseError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("line 1")));
    const auto path2 = tmp.file("kg2.tsv", "a\tlikes\tb\nx\ty\n");
    REQUIRE_THROWS_MATCHES(load_kg(path2), urir::ParseError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("line 2")));
}

TEST_CASE("load_kg rejects empty graphs", "[graph_store]") {
    TempDir tmp;
    REQUIRE_THROWS_AS(load_kg(tmp.file("kg.tsv", "")), urir::EmptyGraphError);
    REQUIRE_THROWS_AS(load_kg(tmp.file("kg2.tsv", "\n\n")), urir::EmptyGraphError);
    REQUIRE_THROWS_AS(load_kg(tmp.sub("missing.tsv")), urir::DataError);
}

TEST_CASE("adjacency is sorted and its lengths sum to the triple count", "[graph_store]") {
    const KnowledgeGraph kg = synth::random_kg(60, 4, 8, 123);
    int64_t total = 0;
    for (EntityId h = 0; h < kg.entity_count; ++h) {
        const auto& adj = kg.out_edges(h);
        REQUIRE(std::is_sorted(adj.begin(), adj.end()));
        total += static_cast<int64_t>(adj.size());
    }
    REQUIRE(total == kg.triple_count);
}

TEST_CASE("ripple sets on a chain expand one hop per level", "[graph_store]") {
    // v=0 -> a=1 -> b=2 -> c=3
    const KnowledgeGraph kg = urir::kg_from_triples(4, 1, {{0, 0, 1}, {1, 0, 2}, {2, 0, 3}});
    const RippleSets rs = build_ripple_sets(kg, 0, 2, 4, 99);
    REQUIRE(rs.levels.size() == 2);
    REQUIRE(rs.levels[0] == std::vector<Triple>{{0, 0, 1}});
    REQUIRE(rs.levels[1] == std::vector<Triple>{{1, 0, 2}});
    REQUIRE(rs.visited[0] == std::vector<EntityId>{0});
    REQUIRE(rs.visited[1] == std::vector<EntityId>{1});
    REQUIRE(rs.visited[2] == std::vector<EntityId>{2});
}

TEST_CASE("ripple sets exclude tails already visited at earlier levels", "[graph_store]") {
    // triangle back-edge: v=0 -> a=1, a -> v
    const KnowledgeGraph kg = urir::kg_from_triples(2, 1, {{0, 0, 1}, {1, 0, 0}});
    const RippleSets rs = build_ripple_sets(kg, 0, 2, 4, 99);
    REQUIRE(rs.levels[0] == std::vector<Triple>{{0, 0, 1}});
    REQUIRE(rs.levels[1].empty()); // tail 0 sits in the level-0 visited set
    REQUIRE(rs.visited[2].empty());
}

TEST_CASE("an item with no out-edges yields empty levels", "[graph_store]") {
    const KnowledgeGraph kg = urir::kg_from_triples(3, 1, {{1, 0, 2}});
    const RippleSets rs = build_ripple_sets(kg, 0, 3, 2, 1);
    for (const auto& level : rs.levels) REQUIRE(level.empty());
}

TEST_CASE("ripple argument validation", "[graph_store]") {
    const KnowledgeGraph kg = urir::kg_from_triples(2, 1, {{0, 0, 1}});
    REQUIRE_THROWS_AS(build_ripple_sets(kg, 5, 1, 1, 0), urir::IndexError);
    REQUIRE_THROWS_AS(build_ripple_sets(kg, 0, 0, 1, 0), urir::ConfigError);
    REQUIRE_THROWS_AS(build_ripple_sets(kg, 0, 1, 0, 0), urir::ConfigError);
}

TEST_CASE("sampled expansion matches the seeded oracle on random graphs", "[graph_store]") {
    // 50-node graphs at L=2, k=3 exercise sampling and exclusion together
    for (uint64_t seed = 0; seed < 20; ++seed) {
        const KnowledgeGraph kg = synth::random_kg(50, 3, 7, 1000 + seed);
        for (ItemId item = 0; item < 10; ++item) {
            const RippleSets got = build_ripple_sets(kg, item, 2, 3, seed);
            const RippleSets want = oracles::ripple_sampled(kg, item, 2, 3, seed);
            REQUIRE(oracles::ripple_equal(got, want));
        }
    }
}

TEST_CASE("unsampled expansion equals exhaustive BFS when out-degree <= k", "[graph_store]") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
        const KnowledgeGraph kg = synth::random_kg(40, 2, 3, 2000 + seed);
        for (ItemId item = 0; item < 8; ++item) {
            const RippleSets got = build_ripple_sets(kg, item, 3, 3, seed);
            const RippleSets want = oracles::ripple_unsampled(kg, item, 3);
            REQUIRE(oracles::ripple_equal(got, want));
        }
    }
}

TEST_CASE("ripple serialization is byte-stable", "[graph_store]") {
    const KnowledgeGraph kg = synth::random_kg(30, 2, 6, 77);
    const auto a = urir::serialize_ripple(build_ripple_sets(kg, 3, 2, 2, 42));
    const auto b = urir::serialize_ripple(build_ripple_sets(kg, 3, 2, 2, 42));
    const auto c = urir::serialize_ripple(build_ripple_sets(kg, 3, 2, 2, 43));
    REQUIRE(a == b);
    REQUIRE(a != c);
}

TEST_CASE("visited sets are disjoint across levels", "[graph_store]") {
    for (uint64_t seed = 0; seed < 10; ++seed) {
        const KnowledgeGraph kg = synth::random_kg(40, 3, 10, 3000 + seed);
        const RippleSets rs = build_ripple_sets(kg, 1, 3, 3, seed);
        std::set<EntityId> seen;
        for (const auto& level : rs.visited) {
            for (EntityId e : level) {
                REQUIRE(seen.insert(e).second);
            }
        }
        // heads of level l must be tails recorded at level l-1
        for (size_t l = 0; l < rs.levels.size(); ++l) {
            const auto& prev = rs.visited[l];
            for (const Triple& t : rs.levels[l]) {
                REQUIRE(std::binary_search(prev.begin(), prev.end(), t.head));
            }
        }
    }
}

TEST_CASE("each expanded node contributes min(k, out-degree) on a layered DAG", "[graph_store]") {
    // layered graph: 0 -> {1..4}, each of those -> 4 distinct deeper nodes
    std::vector<Triple> triples;
    for (int i = 1; i <= 4; ++i) triples.push_back({0, 0, i});
    EntityId next = 5;
    for (int h = 1; h <= 4; ++h) {
        for (int j = 0; j < 4; ++j) triples.push_back({h, 0, next++});
    }
    const KnowledgeGraph kg = urir::kg_from_triples(next, 1, triples);

    const int k = 3;
    const RippleSets rs = build_ripple_sets(kg, 0, 2, k, 5);
    auto level1 = per_head_counts(rs.levels[0]);
    REQUIRE(level1[0] == 3); // min(3, 4)
    for (const auto& [head, count] : per_head_counts(rs.levels[1])) {
        REQUIRE(count == 3);
    }

    // general graphs: never more than k per expanded node
    const KnowledgeGraph rnd = synth::random_kg(50, 3, 9, 4);
    const RippleSets rs2 = build_ripple_sets(rnd, 2, 3, 2, 6);
    for (const auto& level : rs2.levels) {
        for (const auto& [head, count] : per_head_counts(level)) {
            REQUIRE(count <= 2);
        }
    }
}

TEST_CASE("with-replacement sampling always draws k triples", "[graph_store]") {
    std::vector<Triple> triples;
    for (int i = 1; i <= 3; ++i) triples.push_back({0, 0, i});
    const KnowledgeGraph kg = urir::kg_from_triples(4, 1, triples);
    RippleOptions opt;
    opt.with_replacement = true;
    const RippleSets rs = build_ripple_sets(kg, 0, 1, 8, 12, opt);
    REQUIRE(rs.levels[0].size() == 8); // duplicates allowed, fixed-size draw
    for (const Triple& t : rs.levels[0]) {
        REQUIRE(t.head == 0);
        REQUIRE(t.tail >= 1);
        REQUIRE(t.tail <= 3);
    }
}

TEST_CASE("exclusion before sampling keeps the sample budget", "[graph_store]") {
    // 0 -> 1; 1 -> {0, 2, 3}; k=2. With exclusion first, node 1 samples
    // from {2,3} and always lands both; with exclusion after, the draw
    // may spend a slot on the visited tail 0.
    const KnowledgeGraph kg =
        urir::kg_from_triples(4, 1, {{0, 0, 1}, {1, 0, 0}, {1, 0, 2}, {1, 0, 3}});
    RippleOptions before;
    before.exclude_before_sampling = true;
    for (uint64_t seed = 0; seed < 20; ++seed) {
        const RippleSets rs = build_ripple_sets(kg, 0, 2, 2, seed, before);
        REQUIRE(rs.levels[1].size() == 2);
        const RippleSets after = build_ripple_sets(kg, 0, 2, 2, seed);
        REQUIRE(after.levels[1].size() >= 1);
        REQUIRE(after.levels[1].size() <= 2);
        for (const Triple& t : after.levels[1]) REQUIRE(t.tail != 0);
    }
}

TEST_CASE("vocabulary round-trips through its file format", "[graph_store]") {
    TempDir tmp;
    urir::Vocab v;
    v.get_or_add("alpha");
    v.get_or_add("beta with space");
    v.get_or_add("gamma");
    const auto path = tmp.sub("vocab.tsv");
    v.save(path);
    const urir::Vocab loaded = urir::Vocab::load(path);
    REQUIRE(loaded.size() == 3);
    REQUIRE(loaded.lookup("beta with space") == 1);
    REQUIRE(loaded.token(2) == "gamma");
}

TEST_CASE("ripple cache honours its fingerprint", "[graph_store]") {
    TempDir tmp;
    const KnowledgeGraph kg = synth::random_kg(30, 2, 5, 9);
    std::map<ItemId, RippleSets> ripples;
    for (ItemId v = 0; v < 10; ++v) {
        ripples.emplace(v, build_ripple_sets(kg, v, 2, 3, urir::sub_seed(17, urir::Stream::RippleItem,
                                                                         static_cast<uint64_t>(v))));
    }
    const urir::RippleFingerprint fp{2, 3, 17, false, false};
    const auto path = tmp.sub("cache.tsv");
    urir::save_ripple_cache(path, fp, ripples);

    const auto loaded = urir::load_ripple_cache(path, fp, 2);
    REQUIRE(loaded.has_value());
    REQUIRE(loaded->size() == ripples.size());
    for (const auto& [item, rs] : *loaded) {
        REQUIRE(oracles::ripple_equal(rs, ripples.at(item)));
    }

    const urir::RippleFingerprint stale{2, 4, 17, false, false};
    REQUIRE_FALSE(urir::load_ripple_cache(path, stale, 2).has_value());
}
