#include "layoutkit/transfer.hpp"

#include <algorithm>

namespace layoutkit {

std::string_view to_string(TransferPriority p) {
  switch (p) {
    case TransferPriority::ExactPair: return "exact_pair";
    case TransferPriority::SameLayoutKind: return "same_layout_kind";
    case TransferPriority::PerLeafDefault: return "per_leaf_default";
  }
  return "?";
}

namespace {

void match_sizes(Layout& dst, const Layout& src) {
  const std::size_t tags = src.plan().size_tags.size();
  for (std::size_t t = 0; t < tags; ++t) dst.reserve(t, src.size(t));
  for (std::size_t t = 0; t < tags; ++t) dst.resize(t, src.size(t));
}

void check_copier(const Collection& dst, const Collection& src) {
  const auto& from = src.context_info().context;
  const auto& to = dst.context_info().context;
  if (!memory().has_copier(from, to)) throw TransferError("no copier registered from " + from + " to " + to);
}

}  // namespace

bool same_arena_spec(const Collection& dst, const Collection& src) {
  return dst.layout_kind() == LayoutKind::Arena && src.layout_kind() == LayoutKind::Arena &&
         dst.layout().spec() == src.layout().spec();
}

void per_leaf_copy(Collection& dst, const Collection& src, const CopyOptions& opts) {
  Layout& out = dst.layout();
  const Layout& in = src.layout();
  match_sizes(out, in);
  auto& mem = memory();
  for (std::size_t leaf = 0; leaf < in.plan().leaves.size(); ++leaf) {
    const LeafMapping s = in.mapping(leaf);
    const LeafMapping d = out.mapping(leaf);
    if (s.rows * s.slots == 0) continue;
    if (s.contiguous() && d.contiguous()) {
      mem.memcopy_with_context(d.buffer, d.offset, s.buffer, s.offset, s.rows * s.slots * s.element_size, opts);
    } else if (s.rows_contiguous() && d.rows_contiguous()) {
      for (std::size_t k = 0; k < s.slots; ++k) {
        mem.memcopy_with_context(d.buffer, d.byte_offset(0, k), s.buffer, s.byte_offset(0, k),
                                 s.rows * s.element_size, opts);
      }
    } else {
      for (std::size_t k = 0; k < s.slots; ++k) {
        mem.memcopy_strided(d.buffer, d.byte_offset(0, k), d.row_stride, s.buffer, s.byte_offset(0, k), s.row_stride,
                            s.element_size, s.rows, opts);
      }
    }
  }
}

void arena_block_copy(Collection& dst, const Collection& src, const CopyOptions& opts) {
  match_sizes(dst.layout(), src.layout());
  const Buffer to = dst.layout().buffers().at(0);
  const Buffer from = src.layout().buffers().at(0);
  memory().memcopy_with_context(to, 0, from, 0, from.length_bytes(), opts);
}

TransferRegistry& TransferRegistry::global() {
  static TransferRegistry registry;
  return registry;
}

TransferRegistry::TransferRegistry() {
  specs_.push_back({"arena_block", TransferPriority::SameLayoutKind, same_arena_spec, arena_block_copy});
  specs_.push_back({"per_leaf", TransferPriority::PerLeafDefault,
                    [](const Collection&, const Collection&) { return true; }, per_leaf_copy});
}

void TransferRegistry::register_spec(TransferSpecification spec) {
  std::lock_guard lock(mutex_);
  for (const auto& s : specs_) {
    if (s.name == spec.name) throw TransferError("transfer specification '" + spec.name + "' already registered");
  }
  if (!spec.applies || !spec.execute) throw TransferError("transfer specification '" + spec.name + "' is incomplete");
  specs_.push_back(std::move(spec));
}

bool TransferRegistry::unregister_spec(std::string_view name) {
  std::lock_guard lock(mutex_);
  auto it = std::find_if(specs_.begin(), specs_.end(), [&](const auto& s) { return s.name == name; });
  if (it == specs_.end()) return false;
  specs_.erase(it);
  return true;
}

std::vector<std::string> TransferRegistry::names() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& s : specs_) out.push_back(s.name);
  return out;
}

TransferSpecification TransferRegistry::resolve(const Collection& dst, const Collection& src) const {
  std::lock_guard lock(mutex_);
  for (auto p : {TransferPriority::ExactPair, TransferPriority::SameLayoutKind, TransferPriority::PerLeafDefault}) {
    for (const auto& s : specs_) {
      if (s.priority == p && s.applies(dst, src)) return s;
    }
  }
  throw TransferError("no transfer specification applies from " + std::string(to_string(src.layout_kind())) + " to " +
                      std::string(to_string(dst.layout_kind())));
}

TransferStats copy_collection(Collection& dst, const Collection& src, const CopyOptions& opts,
                              const TransferRegistry& registry) {
  if (&dst == &src) throw TransferError("source and destination of a transfer are the same collection");
  if (dst.plan() != src.plan()) {
    throw TransferError("cannot transfer between schemas '" + src.schema().name() + "' and '" + dst.schema().name() +
                        "' with different storage plans");
  }
  check_copier(dst, src);
  const TransferSpecification spec = registry.resolve(dst, src);
  const CopyStats before = memory().copy_stats();
  dst.mark_mutated();
  spec.execute(dst, src, opts);
  const CopyStats after = memory().copy_stats();
  return {spec.name, spec.priority, after.bytes - before.bytes, after.operations - before.operations};
}

TransferStats move_collection(Collection& dst, Collection& src, const CopyOptions& opts,
                              const TransferRegistry& registry) {
  TransferStats stats = copy_collection(dst, src, opts, registry);
  for (std::size_t t = src.plan().size_tags.size(); t-- > 0;) src.layout().clear(t);
  src.mark_mutated();
  return stats;
}

Collection copy_to(const Collection& src, const LayoutSpec& spec, const ContextInfo& info, const CopyOptions& opts) {
  Collection out(src.schema(), spec, info);
  copy_collection(out, src, opts);
  return out;
}

}  // namespace layoutkit
