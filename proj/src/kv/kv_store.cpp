#include "bcounter/kv/kv_store.hpp"

#include <algorithm>

namespace bcounter::kv {

Result<VersionedRecord> KvStore::get(const std::string& key) {
  ++stats_.gets;
  auto it = records_.find(key);
  if (it == records_.end()) return Errc::NotFound;
  return VersionedRecord{key, it->second.siblings, it->second.version,
                         it->second.consistency};
}

void KvStore::add_sibling(Entry& e, Bytes value) {
  // Identical bytes are the same version; keeping one copy loses nothing.
  if (std::find(e.siblings.begin(), e.siblings.end(), value) == e.siblings.end()) {
    e.siblings.push_back(std::move(value));
  }
}

Status KvStore::put(const std::string& key, Bytes value,
                    std::optional<VersionToken> context) {
  auto it = records_.find(key);
  if (it == records_.end()) {
    ++stats_.puts;
    records_.emplace(key, Entry{{std::move(value)}, next_version(), Consistency::Weak});
    return {};
  }
  Entry& e = it->second;
  if (e.consistency == Consistency::Strong) return Errc::WrongMode;
  ++stats_.puts;
  if (context && *context == e.version) {
    e.siblings.clear();
    e.siblings.push_back(std::move(value));
  } else {
    add_sibling(e, std::move(value));
  }
  e.version = next_version();
  return {};
}

Result<VersionToken> KvStore::put_conditional(const std::string& key, Bytes value,
                                              std::optional<VersionToken> expected) {
  auto it = records_.find(key);
  if (it != records_.end() && it->second.consistency == Consistency::Weak) {
    return Errc::WrongMode;
  }
  ++stats_.conditional_writes;
  const bool matches = it == records_.end() ? !expected.has_value()
                                            : expected && *expected == it->second.version;
  if (!matches) {
    ++stats_.conflicts;
    return Errc::Conflict;
  }
  const VersionToken v = next_version();
  if (it == records_.end()) {
    records_.emplace(key, Entry{{std::move(value)}, v, Consistency::Strong});
  } else {
    it->second.siblings.assign(1, std::move(value));
    it->second.version = v;
  }
  return v;
}

Status KvStore::replicate_in(const std::string& key, Bytes value) {
  auto it = records_.find(key);
  if (it == records_.end()) {
    ++stats_.replicated_in;
    records_.emplace(key, Entry{{std::move(value)}, next_version(), Consistency::Weak});
    return {};
  }
  if (it->second.consistency == Consistency::Strong) return Errc::WrongMode;
  ++stats_.replicated_in;
  add_sibling(it->second, std::move(value));
  it->second.version = next_version();
  return {};
}

std::vector<std::string> KvStore::keys() const {
  std::vector<std::string> out;
  out.reserve(records_.size());
  for (const auto& [k, _] : records_) out.push_back(k);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace bcounter::kv
