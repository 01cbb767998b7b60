#pragma once
// Core domain ids and the knowledge-graph triple. Ids are dense 0-based
// indices; every item id is also a valid entity id (items are KG nodes).

#include <compare>
#include <cstdint>

namespace urir {

using EntityId = int32_t;
using RelationId = int32_t;
using UserId = int32_t;
using ItemId = int32_t;

struct Triple {
    EntityId head = 0;
    RelationId relation = 0;
    EntityId tail = 0;

    auto operator<=>(const Triple&) const = default;
};

// One implicit-feedback record. record_index preserves input file order,
// which stands in for chronology when building user histories.
struct Interaction {
    UserId user = 0;
    ItemId item = 0;
    int64_t record_index = 0;
};

} // namespace urir
