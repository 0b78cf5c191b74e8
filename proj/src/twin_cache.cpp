#include "bsplace/twin_cache.hpp"

#include "bsplace/error.hpp"

namespace bsplace {

std::size_t TwinKeyHash::operator()(const TwinKey& k) const noexcept {
  std::uint64_t h = k.map_id * 0x9e3779b97f4a7c15ULL;
  h ^= k.radio_id + 0x632be59bd9b4e019ULL + (h << 6) + (h >> 2);
  h ^= (static_cast<std::uint64_t>(static_cast<std::uint32_t>(k.bs.i)) << 32 |
        static_cast<std::uint32_t>(k.bs.j)) +
       (h << 6) + (h >> 2);
  return static_cast<std::size_t>(h);
}

TwinCache::TwinCache(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw Error("twin cache capacity must be positive");
}

std::shared_ptr<const PathlossMap> TwinCache::get(const TwinKey& key) {
  std::lock_guard lock(mu_);
  auto it = index_.find(key);
  if (it == index_.end()) {
    ++misses_;
    return nullptr;
  }
  ++hits_;
  lru_.splice(lru_.begin(), lru_, it->second);
  return it->second->second;
}

void TwinCache::put(const TwinKey& key, std::shared_ptr<const PathlossMap> value) {
  std::lock_guard lock(mu_);
  if (auto it = index_.find(key); it != index_.end()) {
    it->second->second = std::move(value);
    lru_.splice(lru_.begin(), lru_, it->second);
    return;
  }
  if (lru_.size() == capacity_) {
    index_.erase(lru_.back().first);
    lru_.pop_back();
  }
  lru_.emplace_front(key, std::move(value));
  index_[key] = lru_.begin();
}

std::shared_ptr<const PathlossMap> TwinCache::get_or_predict(const SiteMap& map,
                                                             const RadioConfig& radio, Coord bs) {
  const TwinKey key{map.map_id(), radio.id(), bs};
  if (auto hit = get(key)) return hit;
  auto value = std::make_shared<const PathlossMap>(predict_pathloss(map, radio, bs));
  put(key, value);
  return value;
}

void TwinCache::clear() {
  std::lock_guard lock(mu_);
  lru_.clear();
  index_.clear();
  hits_ = 0;
  misses_ = 0;
}

CacheStats TwinCache::stats() const {
  std::lock_guard lock(mu_);
  return {hits_, misses_, lru_.size(), capacity_};
}

}  // namespace bsplace
