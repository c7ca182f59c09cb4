#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "layoutkit/memctx.hpp"
#include "layoutkit/schema.hpp"

namespace layoutkit {

enum class LayoutKind : std::uint8_t { PerField, Arena, Aos };

std::string_view to_string(LayoutKind kind);
LayoutKind parse_layout_kind(std::string_view text);

/// Fixed per-size-tag capacities of the single-block layout.
struct ArenaSpec {
  std::map<std::string, std::uint64_t, std::less<>> capacities;  // keyed by size-tag id
  std::size_t alignment = 64;

  friend bool operator==(const ArenaSpec&, const ArenaSpec&) = default;
};

struct LayoutSpec {
  LayoutKind kind = LayoutKind::PerField;
  ArenaSpec arena;

  static LayoutSpec per_field() { return {}; }
  static LayoutSpec aos() { return {LayoutKind::Aos, {}}; }
  static LayoutSpec single_block(ArenaSpec spec) { return {LayoutKind::Arena, std::move(spec)}; }

  friend bool operator==(const LayoutSpec&, const LayoutSpec&) = default;
};

struct AccessFlags {
  bool readable = false;
  bool writable = false;
  bool resizable = false;
};

struct LayoutCapabilities {
  ScalarType size_type{ScalarKind::U64};
  ScalarType difference_type{ScalarKind::I64};
  MemoryContextId memory_context;
  AccessFlags host;
  AccessFlags device;

  const AccessFlags& in(ExecutionContext exec) const { return exec == ExecutionContext::Host ? host : device; }
};

/// Where the elements of one leaf live: element (row, slot) is at
/// buffer + offset + row * row_stride + slot * slot_stride.
struct LeafMapping {
  Buffer buffer;
  std::size_t offset = 0;
  std::ptrdiff_t row_stride = 0;
  std::ptrdiff_t slot_stride = 0;
  std::size_t rows = 0;
  std::size_t slots = 1;
  std::size_t element_size = 0;

  bool rows_contiguous() const { return static_cast<std::size_t>(row_stride) == element_size; }
  bool contiguous() const {
    return rows_contiguous() && (slots <= 1 || static_cast<std::size_t>(slot_stride) == rows * element_size);
  }
  std::size_t byte_offset(std::size_t row, std::size_t slot) const {
    return offset + row * static_cast<std::size_t>(row_stride) + slot * static_cast<std::size_t>(slot_stride);
  }
};

/// Physical realization of a StoragePlan.
///
/// Size-changing operations act on every leaf under a size tag. Element
/// access is a mapping from (leaf, flat index) to a location; contiguity is
/// not part of the contract. New elements are always zero-filled.
class Layout {
 public:
  virtual ~Layout();
  Layout(const Layout&) = delete;
  Layout& operator=(const Layout&) = delete;

  const StoragePlan& plan() const { return *plan_; }
  const std::shared_ptr<const StoragePlan>& shared_plan() const { return plan_; }
  const ContextInfo& context_info() const { return info_; }
  LayoutCapabilities capabilities() const;

  virtual LayoutKind kind() const = 0;
  virtual LayoutSpec spec() const = 0;

  std::size_t size(std::size_t tag) const { return sizes_.at(tag); }
  virtual std::size_t capacity(std::size_t tag) const = 0;
  /// Rows currently stored for a leaf.
  std::size_t rows(std::size_t leaf) const { return plan_->leaves[leaf].rows_for(sizes_[plan_->leaves[leaf].size_tag]); }

  void resize(std::size_t tag, std::size_t new_size);
  void reserve(std::size_t tag, std::size_t n);
  void clear(std::size_t tag) { resize(tag, 0); }
  void shrink_to_fit(std::size_t tag);
  void insert(std::size_t tag, std::size_t index, std::size_t count);
  void erase(std::size_t tag, std::size_t index, std::size_t count);

  /// Physical location of a leaf, without the execution-context guard. For
  /// context-level operations such as memcopy_with_context.
  virtual LeafMapping mapping(std::size_t leaf) const = 0;

  /// Guarded direct access to one element.
  std::byte* element_ref(std::size_t leaf, std::size_t flat_index, AccessMode mode) const;
  /// Guarded base address of a leaf (row 0, slot 0) together with its mapping.
  std::byte* leaf_base(std::size_t leaf, AccessMode mode, LeafMapping* out = nullptr) const;

  virtual std::vector<Buffer> buffers() const = 0;
  /// Number of allocations this instance has performed so far.
  std::uint64_t allocation_count() const { return allocations_; }

  /// Retags or migrates every buffer to `info` with the strong guarantee.
  void update_memory_context_info(const ContextInfo& info, const CopyOptions& opts = {});

 protected:
  Layout(std::shared_ptr<const StoragePlan> plan, ContextInfo info);

  Buffer allocate(std::size_t bytes, std::size_t alignment = 64);
  void release(Buffer& buffer);

  virtual void do_reserve(std::size_t tag, std::size_t n) = 0;
  virtual void do_resize(std::size_t tag, std::size_t old_size, std::size_t new_size) = 0;
  virtual void do_insert(std::size_t tag, std::size_t index, std::size_t count) = 0;
  virtual void do_erase(std::size_t tag, std::size_t index, std::size_t count) = 0;
  virtual void do_shrink(std::size_t tag) = 0;
  /// Replace buffers with the migrated set, same order as buffers().
  virtual void rebind(const std::vector<Buffer>& migrated) = 0;

  std::shared_ptr<const StoragePlan> plan_;
  ContextInfo info_;
  std::vector<std::size_t> sizes_;
  std::uint64_t allocations_ = 0;
};

std::unique_ptr<Layout> build_layout(const LayoutSpec& spec, std::shared_ptr<const StoragePlan> plan,
                                     const ContextInfo& info);

/// Byte offsets of each leaf region inside the single block, and its total
/// size. Leaf regions hold rows_for(capacity) * slots elements and start on
/// `alignment` boundaries; the total is rounded up to `alignment`.
struct ArenaPlacement {
  std::vector<std::size_t> offsets;
  std::vector<std::size_t> capacity_rows;
  std::size_t total_bytes = 0;
};
ArenaPlacement place_arena(const StoragePlan& plan, const ArenaSpec& spec);

/// Interleaved record layout of the main-tag element leaves: a byte offset
/// per leaf (npos for leaves stored out of line) and the record stride.
struct AosRecordLayout {
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::vector<std::size_t> field_offsets;
  std::size_t record_size = 0;
  std::size_t record_alignment = 1;
};
AosRecordLayout place_aos_record(const StoragePlan& plan);

}  // namespace layoutkit
