#include "layoutkit/behavior.hpp"

#include "layoutkit/collection.hpp"
#include "layoutkit/errors.hpp"

namespace layoutkit {

BehaviorRegistry& BehaviorRegistry::global() {
  static BehaviorRegistry registry;
  return registry;
}

void BehaviorRegistry::register_bundle(BehaviorBundle bundle) {
  std::lock_guard lock(mutex_);
  if (bundles_.count(bundle.id) != 0) throw BehaviorError("behavior bundle '" + bundle.id + "' already registered");
  std::string id = bundle.id;
  bundles_.emplace(std::move(id), std::move(bundle));
}

bool BehaviorRegistry::ensure_registered(BehaviorBundle bundle) {
  std::lock_guard lock(mutex_);
  if (bundles_.count(bundle.id) != 0) return false;
  std::string id = bundle.id;
  bundles_.emplace(std::move(id), std::move(bundle));
  return true;
}

bool BehaviorRegistry::contains(std::string_view id) const {
  std::lock_guard lock(mutex_);
  return bundles_.find(id) != bundles_.end();
}

const BehaviorBundle& BehaviorRegistry::find(std::string_view id) const {
  std::lock_guard lock(mutex_);
  auto it = bundles_.find(id);
  if (it == bundles_.end()) throw BehaviorError("behavior bundle '" + std::string(id) + "' is not registered");
  return it->second;
}

namespace {

const BehaviorBundle& resolve(std::string_view bundle, const Collection& c) {
  if (!c.has_bundle(bundle)) {
    throw BehaviorError("schema '" + c.schema().name() + "' does not declare behavior bundle '" + std::string(bundle) +
                        "'");
  }
  return BehaviorRegistry::global().find(bundle);
}

}  // namespace

BehaviorValue call_behavior(std::string_view bundle, std::string_view function, ObjectView& target,
                            std::span<const BehaviorValue> args) {
  const auto& b = resolve(bundle, target.collection());
  auto it = b.object_functions.find(function);
  if (it == b.object_functions.end()) {
    throw BehaviorError("bundle '" + b.id + "' has no object function '" + std::string(function) + "'");
  }
  return it->second(target, args);
}

BehaviorValue call_behavior(std::string_view bundle, std::string_view function, Collection& target,
                            std::span<const BehaviorValue> args) {
  const auto& b = resolve(bundle, target);
  auto it = b.collection_functions.find(function);
  if (it == b.collection_functions.end()) {
    throw BehaviorError("bundle '" + b.id + "' has no collection function '" + std::string(function) + "'");
  }
  return it->second(target, args);
}

}  // namespace layoutkit
