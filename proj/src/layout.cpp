#include "layoutkit/layout.hpp"

#include <algorithm>

#include "layoutkit/errors.hpp"

namespace layoutkit {

namespace {

std::size_t align_up(std::size_t n, std::size_t a) { return (n + a - 1) / a * a; }

/// A leaf region whose rows are contiguous and whose slots are `slot_stride`
/// bytes apart.
struct SlotRegion {
  Buffer buffer;
  std::size_t offset = 0;
  std::size_t slot_stride = 0;
  std::size_t element_size = 0;
  std::size_t slots = 1;

  std::size_t at(std::size_t slot, std::size_t row) const { return offset + slot * slot_stride + row * element_size; }
};

void zero_rows(const SlotRegion& r, std::size_t from, std::size_t to) {
  if (to <= from) return;
  for (std::size_t s = 0; s < r.slots; ++s) {
    memory().memset(r.buffer, 0, r.at(s, from), (to - from) * r.element_size);
  }
}

void insert_rows(const SlotRegion& r, std::size_t rows, std::size_t at, std::size_t count) {
  if (count == 0) return;
  for (std::size_t s = 0; s < r.slots; ++s) {
    memory().memcopy_with_context(r.buffer, r.at(s, at + count), r.buffer, r.at(s, at), (rows - at) * r.element_size);
    memory().memset(r.buffer, 0, r.at(s, at), count * r.element_size);
  }
}

void erase_rows(const SlotRegion& r, std::size_t rows, std::size_t at, std::size_t count) {
  if (count == 0) return;
  for (std::size_t s = 0; s < r.slots; ++s) {
    memory().memcopy_with_context(r.buffer, r.at(s, at), r.buffer, r.at(s, at + count),
                                  (rows - at - count) * r.element_size);
  }
}

void copy_rows(const SlotRegion& dst, const SlotRegion& src, std::size_t rows) {
  if (rows == 0) return;
  for (std::size_t s = 0; s < src.slots; ++s) {
    memory().memcopy_with_context(dst.buffer, dst.at(s, 0), src.buffer, src.at(s, 0), rows * src.element_size);
  }
}

}  // namespace

std::string_view to_string(LayoutKind kind) {
  switch (kind) {
    case LayoutKind::PerField: return "per_field";
    case LayoutKind::Arena: return "arena";
    case LayoutKind::Aos: return "aos";
  }
  return "?";
}

LayoutKind parse_layout_kind(std::string_view text) {
  if (text == "per_field") return LayoutKind::PerField;
  if (text == "arena") return LayoutKind::Arena;
  if (text == "aos") return LayoutKind::Aos;
  throw LayoutError("unknown layout kind '" + std::string(text) + "'");
}

Layout::Layout(std::shared_ptr<const StoragePlan> plan, ContextInfo info)
    : plan_(std::move(plan)), info_(std::move(info)), sizes_(plan_->size_tags.size(), 0) {
  memory().context(info_.context).validate(info_);
}

Layout::~Layout() = default;

LayoutCapabilities Layout::capabilities() const {
  LayoutCapabilities caps;
  caps.memory_context = info_.context;
  const AccessFlags all{true, true, true};
  if (memory().accessible(info_, ExecutionContext::Host)) caps.host = all;
  if (memory().accessible(info_, ExecutionContext::MockDevice)) caps.device = all;
  return caps;
}

Buffer Layout::allocate(std::size_t bytes, std::size_t alignment) {
  Buffer b = memory().allocate(info_, bytes, alignment);
  ++allocations_;
  return b;
}

void Layout::release(Buffer& buffer) {
  if (buffer.valid()) memory().deallocate(buffer);
  buffer = Buffer();
}

void Layout::resize(std::size_t tag, std::size_t new_size) {
  const std::size_t old = sizes_.at(tag);
  if (old == new_size) return;
  do_resize(tag, old, new_size);
  sizes_[tag] = new_size;
}

void Layout::reserve(std::size_t tag, std::size_t n) {
  if (n > capacity(tag)) do_reserve(tag, n);
}

void Layout::shrink_to_fit(std::size_t tag) {
  (void)sizes_.at(tag);
  do_shrink(tag);
}

void Layout::insert(std::size_t tag, std::size_t index, std::size_t count) {
  const std::size_t size = sizes_.at(tag);
  if (index > size) {
    throw RangeError("insert at " + std::to_string(index) + " past size " + std::to_string(size) + " of tag " +
                     plan_->size_tags[tag].id);
  }
  if (count == 0) return;
  do_insert(tag, index, count);
  sizes_[tag] = size + count;
}

void Layout::erase(std::size_t tag, std::size_t index, std::size_t count) {
  const std::size_t size = sizes_.at(tag);
  if (index > size || count > size - index) {
    throw RangeError("erase [" + std::to_string(index) + ", +" + std::to_string(count) + ") out of size " +
                     std::to_string(size) + " of tag " + plan_->size_tags[tag].id);
  }
  if (count == 0) return;
  do_erase(tag, index, count);
  sizes_[tag] = size - count;
}

std::byte* Layout::leaf_base(std::size_t leaf, AccessMode mode, LeafMapping* out) const {
  LeafMapping m = mapping(leaf);
  std::byte* base = memory().data(m.buffer, mode);
  if (out != nullptr) *out = m;
  return base == nullptr ? nullptr : base + m.offset;
}

std::byte* Layout::element_ref(std::size_t leaf, std::size_t flat_index, AccessMode mode) const {
  if (leaf >= plan_->leaves.size()) throw RangeError("leaf " + std::to_string(leaf) + " out of range");
  LeafMapping m = mapping(leaf);
  const std::size_t length = m.rows * m.slots;
  if (flat_index >= length) {
    throw RangeError("element " + std::to_string(flat_index) + " out of bounds for leaf '" +
                     plan_->leaves[leaf].path_string() + "' of length " + std::to_string(length));
  }
  std::byte* base = memory().data(m.buffer, mode);
  return base + m.byte_offset(flat_index % m.rows, flat_index / m.rows);
}

void Layout::update_memory_context_info(const ContextInfo& info, const CopyOptions& opts) {
  auto migrated = memory().update_memory_context_info(buffers(), info, opts);
  rebind(migrated);
  info_ = info;
}

namespace {

/// Layout whose leaves (or a subset of them) each own a growable buffer of
/// capacity rows x slots, slot-major.
class ColumnOwningLayout : public Layout {
 protected:
  struct Column {
    Buffer buffer;
    std::size_t capacity_rows = 0;
    bool owned = false;
  };

  ColumnOwningLayout(std::shared_ptr<const StoragePlan> plan, ContextInfo info)
      : Layout(std::move(plan), std::move(info)), columns_(plan_->leaves.size()), caps_(plan_->size_tags.size(), 0) {}

  ~ColumnOwningLayout() override {
    for (auto& c : columns_) {
      if (c.owned) release(c.buffer);
    }
  }

  void own(std::size_t leaf) {
    const auto& lf = plan_->leaves[leaf];
    Column& c = columns_[leaf];
    c.owned = true;
    c.capacity_rows = lf.rows_for(0);
    c.buffer = allocate(c.capacity_rows * lf.slots * lf.element_size());
    memory().memset(c.buffer, 0, 0, c.buffer.length_bytes());
  }

  SlotRegion region(std::size_t leaf) const {
    const auto& lf = plan_->leaves[leaf];
    const Column& c = columns_[leaf];
    return {c.buffer, 0, c.capacity_rows * lf.element_size(), lf.element_size(), lf.slots};
  }

  LeafMapping column_mapping(std::size_t leaf) const {
    const auto& lf = plan_->leaves[leaf];
    const Column& c = columns_[leaf];
    LeafMapping m;
    m.buffer = c.buffer;
    m.row_stride = static_cast<std::ptrdiff_t>(lf.element_size());
    m.slot_stride = static_cast<std::ptrdiff_t>(c.capacity_rows * lf.element_size());
    m.rows = rows(leaf);
    m.slots = lf.slots;
    m.element_size = lf.element_size();
    return m;
  }

  void regrow(std::size_t leaf, std::size_t capacity_rows) {
    const auto& lf = plan_->leaves[leaf];
    Column& c = columns_[leaf];
    if (c.capacity_rows == capacity_rows) return;
    const std::size_t live = std::min(rows(leaf), capacity_rows);
    Buffer fresh = allocate(capacity_rows * lf.slots * lf.element_size());
    SlotRegion dst{fresh, 0, capacity_rows * lf.element_size(), lf.element_size(), lf.slots};
    try {
      copy_rows(dst, region(leaf), live);
    } catch (...) {
      release(fresh);
      throw;
    }
    release(c.buffer);
    c.buffer = fresh;
    c.capacity_rows = capacity_rows;
  }

  std::vector<std::size_t> owned_under(std::size_t tag) const {
    std::vector<std::size_t> out;
    for (std::size_t leaf : plan_->leaves_under(tag)) {
      if (columns_[leaf].owned) out.push_back(leaf);
    }
    return out;
  }

  void set_owned_capacity(std::size_t tag, std::size_t cap) {
    for (std::size_t leaf : owned_under(tag)) regrow(leaf, plan_->leaves[leaf].rows_for(cap));
  }

  void owned_resize(std::size_t tag, std::size_t old_size, std::size_t new_size) {
    if (new_size <= old_size) return;
    for (std::size_t leaf : owned_under(tag)) {
      const auto& lf = plan_->leaves[leaf];
      zero_rows(region(leaf), lf.rows_for(old_size), lf.rows_for(new_size));
    }
  }

  void owned_insert(std::size_t tag, std::size_t index, std::size_t count) {
    for (std::size_t leaf : owned_under(tag)) {
      const auto& lf = plan_->leaves[leaf];
      insert_rows(region(leaf), rows(leaf), index * lf.rows_per_unit + lf.row_offset, count * lf.rows_per_unit);
    }
  }

  void owned_erase(std::size_t tag, std::size_t index, std::size_t count) {
    for (std::size_t leaf : owned_under(tag)) {
      const auto& lf = plan_->leaves[leaf];
      erase_rows(region(leaf), rows(leaf), index * lf.rows_per_unit + lf.row_offset, count * lf.rows_per_unit);
    }
  }

  std::size_t grown_capacity(std::size_t tag, std::size_t needed) const {
    return std::max(needed, caps_[tag] * 2);
  }

  std::vector<Column> columns_;
  std::vector<std::size_t> caps_;
};

class PerFieldLayout final : public ColumnOwningLayout {
 public:
  PerFieldLayout(std::shared_ptr<const StoragePlan> plan, ContextInfo info)
      : ColumnOwningLayout(std::move(plan), std::move(info)) {
    for (std::size_t leaf = 0; leaf < plan_->leaves.size(); ++leaf) own(leaf);
  }

  LayoutKind kind() const override { return LayoutKind::PerField; }
  LayoutSpec spec() const override { return LayoutSpec::per_field(); }
  std::size_t capacity(std::size_t tag) const override { return caps_.at(tag); }
  LeafMapping mapping(std::size_t leaf) const override { return column_mapping(leaf); }

  std::vector<Buffer> buffers() const override {
    std::vector<Buffer> out;
    for (const auto& c : columns_) out.push_back(c.buffer);
    return out;
  }

 protected:
  void set_capacity(std::size_t tag, std::size_t cap) {
    set_owned_capacity(tag, cap);
    caps_[tag] = cap;
  }
  void ensure(std::size_t tag, std::size_t needed) {
    if (needed > caps_[tag]) set_capacity(tag, grown_capacity(tag, needed));
  }

  void do_reserve(std::size_t tag, std::size_t n) override { set_capacity(tag, n); }
  void do_resize(std::size_t tag, std::size_t old_size, std::size_t new_size) override {
    ensure(tag, new_size);
    owned_resize(tag, old_size, new_size);
  }
  void do_insert(std::size_t tag, std::size_t index, std::size_t count) override {
    ensure(tag, size(tag) + count);
    owned_insert(tag, index, count);
  }
  void do_erase(std::size_t tag, std::size_t index, std::size_t count) override { owned_erase(tag, index, count); }
  void do_shrink(std::size_t tag) override {
    if (caps_[tag] > size(tag)) set_capacity(tag, size(tag));
  }
  void rebind(const std::vector<Buffer>& migrated) override {
    for (std::size_t i = 0; i < columns_.size(); ++i) columns_[i].buffer = migrated[i];
  }
};

class ArenaLayout final : public Layout {
 public:
  ArenaLayout(std::shared_ptr<const StoragePlan> plan, ContextInfo info, ArenaSpec spec)
      : Layout(std::move(plan), std::move(info)), spec_(std::move(spec)), placement_(place_arena(*plan_, spec_)) {
    for (const auto& tag : plan_->size_tags) caps_.push_back(spec_.capacities.find(tag.id)->second);
    block_ = allocate(placement_.total_bytes, spec_.alignment);
    memory().memset(block_, 0, 0, block_.length_bytes());
  }
  ~ArenaLayout() override { release(block_); }

  LayoutKind kind() const override { return LayoutKind::Arena; }
  LayoutSpec spec() const override { return LayoutSpec::single_block(spec_); }
  std::size_t capacity(std::size_t tag) const override { return caps_.at(tag); }

  LeafMapping mapping(std::size_t leaf) const override {
    const auto& lf = plan_->leaves[leaf];
    LeafMapping m;
    m.buffer = block_;
    m.offset = placement_.offsets[leaf];
    m.row_stride = static_cast<std::ptrdiff_t>(lf.element_size());
    m.slot_stride = static_cast<std::ptrdiff_t>(placement_.capacity_rows[leaf] * lf.element_size());
    m.rows = rows(leaf);
    m.slots = lf.slots;
    m.element_size = lf.element_size();
    return m;
  }

  std::vector<Buffer> buffers() const override { return {block_}; }

 protected:
  void require(std::size_t tag, std::size_t needed) const {
    if (needed > caps_[tag]) {
      throw CapacityError("arena capacity " + std::to_string(caps_[tag]) + " of tag '" + plan_->size_tags[tag].id +
                          "' exceeded (needs " + std::to_string(needed) + ")");
    }
  }
  SlotRegion region(std::size_t leaf) const {
    const auto& lf = plan_->leaves[leaf];
    return {block_, placement_.offsets[leaf], placement_.capacity_rows[leaf] * lf.element_size(), lf.element_size(),
            lf.slots};
  }

  void do_reserve(std::size_t tag, std::size_t n) override { require(tag, n); }
  void do_resize(std::size_t tag, std::size_t old_size, std::size_t new_size) override {
    require(tag, new_size);
    if (new_size <= old_size) return;
    for (std::size_t leaf : plan_->leaves_under(tag)) {
      const auto& lf = plan_->leaves[leaf];
      zero_rows(region(leaf), lf.rows_for(old_size), lf.rows_for(new_size));
    }
  }
  void do_insert(std::size_t tag, std::size_t index, std::size_t count) override {
    require(tag, size(tag) + count);
    for (std::size_t leaf : plan_->leaves_under(tag)) {
      const auto& lf = plan_->leaves[leaf];
      insert_rows(region(leaf), rows(leaf), index * lf.rows_per_unit + lf.row_offset, count * lf.rows_per_unit);
    }
  }
  void do_erase(std::size_t tag, std::size_t index, std::size_t count) override {
    for (std::size_t leaf : plan_->leaves_under(tag)) {
      const auto& lf = plan_->leaves[leaf];
      erase_rows(region(leaf), rows(leaf), index * lf.rows_per_unit + lf.row_offset, count * lf.rows_per_unit);
    }
  }
  void do_shrink(std::size_t) override {}
  void rebind(const std::vector<Buffer>& migrated) override { block_ = migrated.at(0); }

 private:
  ArenaSpec spec_;
  ArenaPlacement placement_;
  std::vector<std::size_t> caps_;
  Buffer block_;
};

/// Main-tag element leaves interleaved record by record; prefix sums,
/// globals and jagged element leaves live in per-leaf side columns.
class AosLayout final : public ColumnOwningLayout {
 public:
  AosLayout(std::shared_ptr<const StoragePlan> plan, ContextInfo info)
      : ColumnOwningLayout(std::move(plan), std::move(info)), record_(place_aos_record(*plan_)) {
    block_ = allocate(0, alignment());
    for (std::size_t leaf = 0; leaf < plan_->leaves.size(); ++leaf) {
      if (record_.field_offsets[leaf] == AosRecordLayout::npos) own(leaf);
    }
  }
  ~AosLayout() override { release(block_); }

  LayoutKind kind() const override { return LayoutKind::Aos; }
  LayoutSpec spec() const override { return LayoutSpec::aos(); }
  std::size_t capacity(std::size_t tag) const override { return caps_.at(tag); }
  const AosRecordLayout& record() const { return record_; }

  LeafMapping mapping(std::size_t leaf) const override {
    if (record_.field_offsets[leaf] == AosRecordLayout::npos) return column_mapping(leaf);
    const auto& lf = plan_->leaves[leaf];
    LeafMapping m;
    m.buffer = block_;
    m.offset = record_.field_offsets[leaf];
    m.row_stride = static_cast<std::ptrdiff_t>(record_.record_size);
    m.slot_stride = static_cast<std::ptrdiff_t>(lf.element_size());
    m.rows = rows(leaf);
    m.slots = lf.slots;
    m.element_size = lf.element_size();
    return m;
  }

  std::vector<Buffer> buffers() const override {
    std::vector<Buffer> out{block_};
    for (const auto& c : columns_) {
      if (c.owned) out.push_back(c.buffer);
    }
    return out;
  }

 protected:
  std::size_t alignment() const { return std::max<std::size_t>(64, record_.record_alignment); }

  void set_capacity(std::size_t tag, std::size_t cap) {
    if (tag == StoragePlan::main_tag && record_.record_size > 0 && cap != caps_[tag]) {
      Buffer fresh = allocate(cap * record_.record_size, alignment());
      const std::size_t live = std::min(size(tag), cap) * record_.record_size;
      try {
        memory().memcopy_with_context(fresh, 0, block_, 0, live);
      } catch (...) {
        release(fresh);
        throw;
      }
      release(block_);
      block_ = fresh;
    }
    set_owned_capacity(tag, cap);
    caps_[tag] = cap;
  }
  void ensure(std::size_t tag, std::size_t needed) {
    if (needed > caps_[tag]) set_capacity(tag, grown_capacity(tag, needed));
  }

  void do_reserve(std::size_t tag, std::size_t n) override { set_capacity(tag, n); }
  void do_resize(std::size_t tag, std::size_t old_size, std::size_t new_size) override {
    ensure(tag, new_size);
    if (tag == StoragePlan::main_tag && new_size > old_size) {
      memory().memset(block_, 0, old_size * record_.record_size, (new_size - old_size) * record_.record_size);
    }
    owned_resize(tag, old_size, new_size);
  }
  void do_insert(std::size_t tag, std::size_t index, std::size_t count) override {
    ensure(tag, size(tag) + count);
    if (tag == StoragePlan::main_tag && record_.record_size > 0) {
      const std::size_t r = record_.record_size;
      memory().memcopy_with_context(block_, (index + count) * r, block_, index * r, (size(tag) - index) * r);
      memory().memset(block_, 0, index * r, count * r);
    }
    owned_insert(tag, index, count);
  }
  void do_erase(std::size_t tag, std::size_t index, std::size_t count) override {
    if (tag == StoragePlan::main_tag && record_.record_size > 0) {
      const std::size_t r = record_.record_size;
      memory().memcopy_with_context(block_, index * r, block_, (index + count) * r, (size(tag) - index - count) * r);
    }
    owned_erase(tag, index, count);
  }
  void do_shrink(std::size_t tag) override {
    if (caps_[tag] > size(tag)) set_capacity(tag, size(tag));
  }
  void rebind(const std::vector<Buffer>& migrated) override {
    block_ = migrated.at(0);
    std::size_t i = 1;
    for (auto& c : columns_) {
      if (c.owned) c.buffer = migrated.at(i++);
    }
  }

 private:
  AosRecordLayout record_;
  Buffer block_;
};

}  // namespace

ArenaPlacement place_arena(const StoragePlan& plan, const ArenaSpec& spec) {
  if (spec.alignment == 0 || (spec.alignment & (spec.alignment - 1)) != 0) {
    throw LayoutError("arena alignment must be a power of two, got " + std::to_string(spec.alignment));
  }
  std::vector<std::size_t> caps;
  for (const auto& tag : plan.size_tags) {
    auto it = spec.capacities.find(tag.id);
    if (it == spec.capacities.end()) throw LayoutError("arena spec has no capacity for size tag '" + tag.id + "'");
    caps.push_back(it->second);
  }
  ArenaPlacement p;
  std::size_t cursor = 0;
  for (const auto& leaf : plan.leaves) {
    if (leaf.element_size() > spec.alignment) {
      throw LayoutError("arena alignment " + std::to_string(spec.alignment) + " is below the element size of '" +
                        leaf.path_string() + "'");
    }
    const std::size_t cap_rows = leaf.rows_for(caps[leaf.size_tag]);
    const std::size_t offset = align_up(cursor, spec.alignment);
    p.offsets.push_back(offset);
    p.capacity_rows.push_back(cap_rows);
    cursor = offset + cap_rows * leaf.slots * leaf.element_size();
  }
  p.total_bytes = align_up(cursor, spec.alignment);
  return p;
}

AosRecordLayout place_aos_record(const StoragePlan& plan) {
  AosRecordLayout r;
  std::size_t cursor = 0;
  for (const auto& leaf : plan.leaves) {
    if (leaf.role != LeafRole::Element || leaf.size_tag != StoragePlan::main_tag) {
      r.field_offsets.push_back(AosRecordLayout::npos);
      continue;
    }
    const std::size_t a = leaf.element_size();
    cursor = align_up(cursor, a);
    r.field_offsets.push_back(cursor);
    cursor += a * leaf.slots;
    r.record_alignment = std::max(r.record_alignment, a);
  }
  r.record_size = align_up(cursor, r.record_alignment);
  return r;
}

std::unique_ptr<Layout> build_layout(const LayoutSpec& spec, std::shared_ptr<const StoragePlan> plan,
                                     const ContextInfo& info) {
  switch (spec.kind) {
    case LayoutKind::PerField: return std::make_unique<PerFieldLayout>(std::move(plan), info);
    case LayoutKind::Arena: return std::make_unique<ArenaLayout>(std::move(plan), info, spec.arena);
    case LayoutKind::Aos: return std::make_unique<AosLayout>(std::move(plan), info);
  }
  throw LayoutError("unknown layout kind");
}

}  // namespace layoutkit
