#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <variant>

namespace layoutkit {

class Collection;
template <bool Const>
class BasicObjectView;
using ObjectView = BasicObjectView<false>;

using BehaviorValue = std::variant<std::monostate, bool, std::int64_t, std::uint64_t, float, double>;

using ObjectFunction = std::function<BehaviorValue(ObjectView&, std::span<const BehaviorValue>)>;
using CollectionFunction = std::function<BehaviorValue(Collection&, std::span<const BehaviorValue>)>;

/// Named functions attached to collections and object views through a
/// NoStorage property. Functions only see the generic accessors, so they
/// behave identically under every layout.
struct BehaviorBundle {
  std::string id;
  std::map<std::string, ObjectFunction, std::less<>> object_functions;
  std::map<std::string, CollectionFunction, std::less<>> collection_functions;
};

class BehaviorRegistry {
 public:
  static BehaviorRegistry& global();

  /// Throws BehaviorError when a bundle with the same id is present.
  void register_bundle(BehaviorBundle bundle);
  /// Registers unless the id is already present. Returns true if it inserted.
  bool ensure_registered(BehaviorBundle bundle);
  bool contains(std::string_view id) const;
  const BehaviorBundle& find(std::string_view id) const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, BehaviorBundle, std::less<>> bundles_;
};

BehaviorValue call_behavior(std::string_view bundle, std::string_view function, ObjectView& target,
                            std::span<const BehaviorValue> args = {});
BehaviorValue call_behavior(std::string_view bundle, std::string_view function, Collection& target,
                            std::span<const BehaviorValue> args = {});

}  // namespace layoutkit
