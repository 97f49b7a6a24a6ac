// Copyright 2026 The Chainplan Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "chainplan/chain_cache.h"

#include <set>
#include <utility>

#include "chainplan/chain_rules.h"

namespace chainplan {

Minutes PickupBucket(Minutes pickup) {
  Minutes q = pickup / kPickupBucketMinutes;
  if (pickup % kPickupBucketMinutes != 0 && pickup < 0) --q;
  return q * kPickupBucketMinutes;
}

CacheKey ChainCache::KeyFor(const NetworkState& state, const Request& request) {
  if (attributes_version_ != state.network_version()) {
    std::set<RestrictionAttribute> seen;
    for (std::size_t b = 0; b < state.num_blocks(); ++b) {
      const Block& blk = state.block(static_cast<BlockIndex>(b));
      if (!blk.alive) continue;
      for (const Restriction& r : blk.restrictions) seen.insert(r.attribute);
    }
    attributes_.assign(seen.begin(), seen.end());
    attributes_version_ = state.network_version();
  }
  CacheKey key;
  key.origin_group = state.GroupOf(request.origin);
  key.destination_group = state.GroupOf(request.destination);
  key.pickup_bucket = PickupBucket(request.pickup_earliest);
  key.delivery_latest = request.delivery_latest;
  for (RestrictionAttribute a : attributes_) {
    key.attribute_digest += AttributeName(a);
    key.attribute_digest += '=';
    if (auto v = AttributeValue(request, a, state)) {
      key.attribute_digest += '"';
      key.attribute_digest += *v;
      key.attribute_digest += '"';
    }
    key.attribute_digest += ';';
  }
  for (BlockIndex b : request.required_prefix) {
    key.prefix_digest += state.block(b).id;
    key.prefix_digest += ';';
  }
  return key;
}

std::optional<CachedChains> ChainCache::Lookup(const CacheKey& key,
                                               std::uint64_t network_version) {
  auto it = entries_.find(key);
  if (it == entries_.end() || it->second.version != network_version) {
    ++misses_;
    return std::nullopt;
  }
  ++hits_;
  return it->second.chains;
}

void ChainCache::Store(const CacheKey& key, std::uint64_t network_version,
                       CachedChains chains) {
  entries_[key] = Entry{network_version, std::move(chains)};
}

void ChainCache::Clear() {
  entries_.clear();
  attributes_.clear();
  attributes_version_.reset();
}

}  // namespace chainplan
