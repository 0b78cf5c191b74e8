#pragma once

#include <cstddef>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <unordered_map>

#include "bsplace/twin.hpp"

namespace bsplace {

struct TwinKey {
  std::uint64_t map_id = 0;
  std::uint64_t radio_id = 0;
  Coord bs;

  friend bool operator==(const TwinKey&, const TwinKey&) = default;
};

struct TwinKeyHash {
  std::size_t operator()(const TwinKey& k) const noexcept;
};

struct CacheStats {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::size_t size = 0;
  std::size_t capacity = 0;
};

// Bounded LRU memo of pathloss predictions. All operations take one mutex,
// so get/put are linearizable; values are shared immutable snapshots.
class TwinCache {
 public:
  explicit TwinCache(std::size_t capacity = 4096);

  std::shared_ptr<const PathlossMap> get(const TwinKey& key);
  void put(const TwinKey& key, std::shared_ptr<const PathlossMap> value);

  // Hit: cached value. Miss: predicts outside the lock, then inserts.
  std::shared_ptr<const PathlossMap> get_or_predict(const SiteMap& map, const RadioConfig& radio,
                                                    Coord bs);

  void clear();
  CacheStats stats() const;

 private:
  using Entry = std::pair<TwinKey, std::shared_ptr<const PathlossMap>>;

  mutable std::mutex mu_;
  std::size_t capacity_;
  std::list<Entry> lru_;  // front = most recent
  std::unordered_map<TwinKey, std::list<Entry>::iterator, TwinKeyHash> index_;
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
};

}  // namespace bsplace
