#pragma once
// Implicit-feedback interaction log. File format: one record per line,
// `user<TAB>item[<TAB>rating][<TAB>timestamp]`. Any rating value counts
// as a positive interaction; ordering comes from the file, not the
// timestamp column. Duplicate (user, item) pairs keep the first record.

#include <cstdint>
#include <fstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "urir/errors.hpp"
#include "urir/graph_store.hpp"
#include "urir/types.hpp"

namespace urir {

struct InteractionLog {
    std::vector<Interaction> records; // file order, deduplicated
    std::vector<ItemId> catalog;      // distinct items, ascending
    int64_t duplicates_dropped = 0;
    int64_t items_missing_from_kg = 0; // item tokens absent from the KG entity vocab
};

// Users get a fresh vocabulary; item tokens map through the KG entity
// vocabulary and unseen tokens extend it (they become isolated entities
// with empty ripple sets).
inline InteractionLog load_interactions(const std::string& path, Vocab& users, Vocab& entities,
                                        int32_t kg_entity_count) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open interactions file: " + path);
    InteractionLog log;
    std::unordered_set<uint64_t> seen_pairs;
    std::unordered_set<ItemId> seen_items;
    std::string line;
    int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = detail::split_tabs(line);
        if (fields.size() < 2 || fields.size() > 4 || fields[0].empty() || fields[1].empty()) {
            throw ParseError("interactions parse error at line " + std::to_string(line_no) +
                             ": expected user<TAB>item[<TAB>rating][<TAB>timestamp] in " + path);
        }
        const UserId u = users.get_or_add(fields[0]);
        const int32_t before = entities.size();
        const ItemId v = entities.get_or_add(fields[1]);
        if (v >= kg_entity_count && entities.size() > before) {
            ++log.items_missing_from_kg;
        }
        const uint64_t key = (static_cast<uint64_t>(static_cast<uint32_t>(u)) << 32) |
                             static_cast<uint32_t>(v);
        if (!seen_pairs.insert(key).second) {
            ++log.duplicates_dropped;
            continue;
        }
        log.records.push_back({u, v, static_cast<int64_t>(log.records.size())});
        seen_items.insert(v);
    }
    if (log.records.empty()) throw DataError("empty interactions file: " + path);
    log.catalog.assign(seen_items.begin(), seen_items.end());
    std::sort(log.catalog.begin(), log.catalog.end());
    return log;
}

} // namespace urir
