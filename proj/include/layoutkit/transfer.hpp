#pragma once

#include <cstdint>
#include <functional>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "layoutkit/collection.hpp"

namespace layoutkit {

/// Resolution order of transfer specifications, most specific first.
enum class TransferPriority : std::uint8_t { ExactPair, SameLayoutKind, PerLeafDefault };

std::string_view to_string(TransferPriority p);

struct TransferSpecification {
  std::string name;
  TransferPriority priority = TransferPriority::ExactPair;
  std::function<bool(const Collection& dst, const Collection& src)> applies;
  std::function<void(Collection& dst, const Collection& src, const CopyOptions& opts)> execute;
};

struct TransferStats {
  std::string specification;
  TransferPriority priority = TransferPriority::PerLeafDefault;
  std::uint64_t bytes = 0;
  std::uint64_t copy_ops = 0;
};

class TransferRegistry {
 public:
  /// Pre-populated with the bulk arena copy and the per-leaf default.
  static TransferRegistry& global();

  TransferRegistry();

  /// Throws TransferError when a specification with the same name exists.
  void register_spec(TransferSpecification spec);
  /// Test hook. Returns false when no specification has that name.
  bool unregister_spec(std::string_view name);
  std::vector<std::string> names() const;

  /// First applicable specification by priority, then registration order.
  TransferSpecification resolve(const Collection& dst, const Collection& src) const;

 private:
  mutable std::mutex mutex_;
  std::vector<TransferSpecification> specs_;
};

/// dst becomes a logical copy of src. Both must share the same storage plan.
TransferStats copy_collection(Collection& dst, const Collection& src, const CopyOptions& opts = {},
                              const TransferRegistry& registry = TransferRegistry::global());
/// Copies then clears the source.
TransferStats move_collection(Collection& dst, Collection& src, const CopyOptions& opts = {},
                              const TransferRegistry& registry = TransferRegistry::global());
/// New collection with src's contents in the given layout and context.
Collection copy_to(const Collection& src, const LayoutSpec& spec, const ContextInfo& info,
                   const CopyOptions& opts = {});

/// Sets every size tag of dst to src's sizes, then copies leaf by leaf.
void per_leaf_copy(Collection& dst, const Collection& src, const CopyOptions& opts = {});
/// Copies one arena block into another arena of identical spec.
void arena_block_copy(Collection& dst, const Collection& src, const CopyOptions& opts = {});
bool same_arena_spec(const Collection& dst, const Collection& src);

}  // namespace layoutkit
