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

// Reuse of enumerated chains across similar requests.
//
// Entries hold capacity-free enumerations run from the start of the pickup
// bucket, so they depend on the network alone and are tagged with the
// network version. Serving filters them per request: chains that fail
// validation for the concrete request are dropped and capacity is checked
// by the caller.

#ifndef CHAINPLAN_CHAIN_CACHE_H_
#define CHAINPLAN_CHAIN_CACHE_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "chainplan/network_state.h"

namespace chainplan {

inline constexpr Minutes kPickupBucketMinutes = 15;

struct CacheKey {
  GroupIndex origin_group = -1;
  GroupIndex destination_group = -1;
  Minutes pickup_bucket = 0;
  Minutes delivery_latest = 0;
  // Values of the attributes that some restriction in the network reads.
  std::string attribute_digest;
  std::string prefix_digest;

  auto Tie() const {
    return std::tie(origin_group, destination_group, pickup_bucket, delivery_latest,
                    attribute_digest, prefix_digest);
  }
  friend bool operator<(const CacheKey& a, const CacheKey& b) { return a.Tie() < b.Tie(); }
  friend bool operator==(const CacheKey& a, const CacheKey& b) { return a.Tie() == b.Tie(); }
};

// Start of the bucket holding `pickup`.
Minutes PickupBucket(Minutes pickup);

struct CachedChains {
  std::vector<TransportChain> chains;
  // The enumeration stopped early; an empty filtered result is then not
  // conclusive.
  bool truncated = false;
};

class ChainCache {
 public:
  CacheKey KeyFor(const NetworkState& state, const Request& request);
  std::optional<CachedChains> Lookup(const CacheKey& key, std::uint64_t network_version);
  void Store(const CacheKey& key, std::uint64_t network_version, CachedChains chains);
  void Clear();

  std::size_t size() const { return entries_.size(); }
  std::int64_t hits() const { return hits_; }
  std::int64_t misses() const { return misses_; }

 private:
  struct Entry {
    std::uint64_t version = 0;
    CachedChains chains;
  };
  std::map<CacheKey, Entry> entries_;
  // Attributes read by restrictions, for the network version in
  // attributes_version_.
  std::vector<RestrictionAttribute> attributes_;
  std::optional<std::uint64_t> attributes_version_;
  std::int64_t hits_ = 0;
  std::int64_t misses_ = 0;
};

}  // namespace chainplan

#endif  // CHAINPLAN_CHAIN_CACHE_H_
