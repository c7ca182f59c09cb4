#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "layoutkit/behavior.hpp"
#include "layoutkit/column.hpp"
#include "layoutkit/errors.hpp"
#include "layoutkit/layout.hpp"
#include "layoutkit/memctx.hpp"
#include "layoutkit/schema.hpp"

#ifndef LAYOUTKIT_CHECK_VIEWS
#define LAYOUTKIT_CHECK_VIEWS 1
#endif

namespace layoutkit {

/// Typed handle to one leaf, resolved once from a property path.
template <class T>
struct Field {
  std::size_t leaf = 0;
};

struct JaggedHandle {
  std::size_t tag = 0;
  std::size_t prefix_leaf = 0;
  std::uint64_t multiplier = 1;
};

/// Contents of one vector of a jagged property: values[leaf][inner slot][element].
struct JaggedEntry {
  std::size_t length = 0;
  std::vector<std::vector<std::vector<RawScalar>>> values;

  friend bool operator==(const JaggedEntry&, const JaggedEntry&) = default;
};

/// Layout-independent contents of one record.
///   fields[i][slot]   i-th main element leaf of the plan
///   jagged[j][slot]   j-th jagged size tag, one entry per vector of the record
struct RecordValue {
  std::vector<std::vector<RawScalar>> fields;
  std::vector<std::vector<JaggedEntry>> jagged;

  friend bool operator==(const RecordValue&, const RecordValue&) = default;
};

class Collection;

template <bool Const>
class BasicObjectView {
 public:
  using CollectionRef = std::conditional_t<Const, const Collection, Collection>;
  template <class T>
  using Ref = std::conditional_t<Const, const T&, T&>;

  BasicObjectView(CollectionRef& owner, std::size_t index);

  template <bool C = Const, class = std::enable_if_t<C>>
  BasicObjectView(const BasicObjectView<false>& other)  // NOLINT(google-explicit-constructor)
      : owner_(&other.collection()), index_(other.index()), generation_(other.generation()) {}

  std::size_t index() const { return index_; }
  CollectionRef& collection() const { return *owner_; }
  std::uint64_t generation() const { return generation_; }
  bool valid() const;

  template <class T>
  Ref<T> get(Field<T> field, std::size_t slot = 0) const;
  template <class T>
  Ref<T> get(std::string_view path, std::size_t slot = 0) const;

  /// Fixed-extent view of an array leaf for this record: element k is slot k.
  template <class T>
  Column<std::conditional_t<Const, const T, T>> array(Field<T> field) const;

  /// Values of one jagged vector of this record (element leaf `field`).
  template <class T>
  Column<std::conditional_t<Const, const T, T>> jagged(const JaggedHandle& h, Field<T> field,
                                                       std::size_t slot = 0) const;
  std::size_t jagged_length(const JaggedHandle& h, std::size_t slot = 0) const;

  /// Resizes one of this record's jagged vectors and keeps the view usable.
  void jagged_resize(const JaggedHandle& h, std::size_t new_length, std::size_t slot = 0)
    requires(!Const);

 private:
  void check() const;

  CollectionRef* owner_;
  std::size_t index_;
  std::uint64_t generation_;
};

using ConstObjectView = BasicObjectView<true>;

/// A growable sequence of records described by a Schema and stored through a
/// pluggable Layout in a given memory context.
class Collection {
 public:
  explicit Collection(Schema schema, LayoutSpec spec = LayoutSpec::per_field(),
                      ContextInfo info = ContextInfo::host());
  Collection(Collection&&) noexcept;
  Collection& operator=(Collection&&) noexcept;
  ~Collection();

  const Schema& schema() const { return schema_; }
  const StoragePlan& plan() const { return *plan_; }
  Layout& layout() { return *layout_; }
  const Layout& layout() const { return *layout_; }
  LayoutKind layout_kind() const { return layout_->kind(); }
  const ContextInfo& context_info() const { return layout_->context_info(); }

  std::size_t size() const { return layout_->size(StoragePlan::main_tag); }
  bool empty() const { return size() == 0; }
  /// Bumped by every size-changing operation; object views compare against it.
  std::uint64_t generation() const { return generation_; }

  template <class T>
  Field<T> field(std::string_view path) const;
  JaggedHandle jagged(std::string_view path) const;
  /// Leaf index of a per-item or global property path.
  std::size_t leaf_of(std::string_view path) const;

  ObjectView get_object(std::size_t index);
  ConstObjectView get_object(std::size_t index) const;
  ObjectView operator[](std::size_t index) { return get_object(index); }

  /// Column of a per-item (size x slots) or global (single value) leaf.
  template <class T>
  Column<T> get_collection(Field<T> field);
  template <class T>
  Column<const T> get_collection(Field<T> field) const;
  template <class T>
  Column<T> get_collection(std::string_view path) {
    return get_collection(field<T>(path));
  }
  template <class T>
  Column<const T> get_collection(std::string_view path) const {
    return get_collection(field<T>(path));
  }

  template <class T>
  T& global(std::string_view path);
  template <class T>
  const T& global(std::string_view path) const;

  /// All values of a jagged element leaf, as one sequence over every record.
  template <class T>
  Column<T> jagged_values(const JaggedHandle& h, Field<T> field);
  template <class T>
  Column<const T> jagged_values(const JaggedHandle& h, Field<T> field) const;

  std::size_t jagged_total(const JaggedHandle& h) const { return layout_->size(h.tag); }
  std::size_t jagged_begin(std::size_t record, const JaggedHandle& h, std::size_t slot = 0) const;
  std::size_t jagged_length(std::size_t record, const JaggedHandle& h, std::size_t slot = 0) const;
  /// The whole prefix-sum array of a jagged property (size * multiplier + 1 values).
  std::vector<std::int64_t> prefix_sums(const JaggedHandle& h) const;

  void resize(std::size_t n);
  void reserve(std::size_t n);
  void reserve_jagged(const JaggedHandle& h, std::size_t n);
  void clear();
  void shrink_to_fit();

  void jagged_resize(std::size_t record, const JaggedHandle& h, std::size_t new_length, std::size_t slot = 0);
  /// Rebuilds a jagged property from per-vector lengths (size * multiplier of
  /// them, record-major). All its element values become zero.
  void assign_jagged_lengths(const JaggedHandle& h, std::span<const std::uint64_t> lengths);

  RecordValue make_record() const;
  RecordValue read_record(std::size_t index) const;
  void write_record(std::size_t index, const RecordValue& value);
  void push_record(const RecordValue& value) { insert_record(size(), value); }
  void insert_record(std::size_t index, const RecordValue& value);
  void erase_record(std::size_t index);

  /// Main element leaves in plan order (RecordValue::fields order).
  const std::vector<std::size_t>& main_leaves() const { return main_leaves_; }
  /// Element leaves of each jagged tag (RecordValue::jagged order).
  const std::vector<std::vector<std::size_t>>& jagged_leaves() const { return jagged_leaves_; }

  void update_memory_context_info(const ContextInfo& info, const CopyOptions& opts = {});

  /// Deterministic text of the logical contents: schema order, record order.
  std::string dump() const;
  /// Throws Error when a jagged prefix array is inconsistent.
  void check_invariants() const;

  /// Invalidates outstanding views after a mutation made behind the
  /// collection's back (transfers write through the layout directly).
  void mark_mutated() { ++generation_; }

  bool has_bundle(std::string_view bundle) const;

 private:
  template <bool>
  friend class BasicObjectView;

  void require_resizable() const;
  std::byte* element(std::size_t leaf, std::size_t row, std::size_t slot, AccessMode mode) const;
  template <class T>
  void check_type(std::size_t leaf) const;
  std::int64_t prefix_at(const JaggedHandle& h, std::size_t i) const;
  void shift_prefix(const JaggedHandle& h, std::size_t from, std::int64_t delta);
  void fill_prefix(const JaggedHandle& h, std::size_t from, std::size_t to, std::int64_t value);
  void check_index_capacity(const JaggedHandle& h, std::uint64_t total) const;
  JaggedHandle handle_for_tag(std::size_t tag) const;

  Schema schema_;
  std::shared_ptr<const StoragePlan> plan_;
  std::unique_ptr<Layout> layout_;
  std::uint64_t generation_ = 0;
  std::vector<std::size_t> main_leaves_;
  std::vector<std::vector<std::size_t>> jagged_leaves_;
  std::unordered_map<std::string, std::size_t> element_by_path_;
};

// ---------------------------------------------------------------------------

template <class T>
void Collection::check_type(std::size_t leaf) const {
  const auto& lf = plan_->leaves[leaf];
  if (!storage_compatible<T>(lf.value_type)) {
    throw SchemaError("property '" + lf.path_string() + "' holds " + lf.value_type.name() +
                      ", incompatible with the requested type");
  }
}

template <class T>
Field<T> Collection::field(std::string_view path) const {
  const std::size_t leaf = leaf_of(path);
  check_type<T>(leaf);
  return Field<T>{leaf};
}

template <class T>
Column<T> Collection::get_collection(Field<T> f) {
  LeafMapping m;
  auto* base = reinterpret_cast<T*>(layout_->leaf_base(f.leaf, AccessMode::Write, &m));
  const auto e = static_cast<std::ptrdiff_t>(sizeof(T));
  return Column<T>(base, m.row_stride / e, m.slot_stride / e, m.rows, m.slots);
}

template <class T>
Column<const T> Collection::get_collection(Field<T> f) const {
  LeafMapping m;
  auto* base = reinterpret_cast<const T*>(layout_->leaf_base(f.leaf, AccessMode::Read, &m));
  const auto e = static_cast<std::ptrdiff_t>(sizeof(T));
  return Column<const T>(base, m.row_stride / e, m.slot_stride / e, m.rows, m.slots);
}

template <class T>
T& Collection::global(std::string_view path) {
  const std::size_t leaf = leaf_of(path);
  if (plan_->leaves[leaf].role != LeafRole::Global) throw SchemaError("'" + std::string(path) + "' is not global");
  check_type<T>(leaf);
  return *reinterpret_cast<T*>(layout_->leaf_base(leaf, AccessMode::Write));
}

template <class T>
const T& Collection::global(std::string_view path) const {
  const std::size_t leaf = leaf_of(path);
  if (plan_->leaves[leaf].role != LeafRole::Global) throw SchemaError("'" + std::string(path) + "' is not global");
  check_type<T>(leaf);
  return *reinterpret_cast<const T*>(layout_->leaf_base(leaf, AccessMode::Read));
}

template <class T>
Column<T> Collection::jagged_values(const JaggedHandle& h, Field<T> f) {
  if (plan_->leaves[f.leaf].size_tag != h.tag) throw SchemaError("leaf does not belong to this jagged vector");
  return get_collection(f);
}

template <class T>
Column<const T> Collection::jagged_values(const JaggedHandle& h, Field<T> f) const {
  if (plan_->leaves[f.leaf].size_tag != h.tag) throw SchemaError("leaf does not belong to this jagged vector");
  return get_collection(f);
}

template <bool Const>
BasicObjectView<Const>::BasicObjectView(CollectionRef& owner, std::size_t index)
    : owner_(&owner), index_(index), generation_(owner.generation()) {
  if (index >= owner.size()) {
    throw RangeError("object index " + std::to_string(index) + " out of range " + std::to_string(owner.size()));
  }
}

template <bool Const>
bool BasicObjectView<Const>::valid() const {
  return owner_->generation() == generation_ && index_ < owner_->size();
}

template <bool Const>
void BasicObjectView<Const>::check() const {
#if LAYOUTKIT_CHECK_VIEWS
  if (owner_->generation() != generation_) {
    throw StaleViewError("object view of record " + std::to_string(index_) +
                         " used after a size-changing operation on its collection");
  }
#endif
}

template <bool Const>
template <class T>
auto BasicObjectView<Const>::get(Field<T> f, std::size_t slot) const -> Ref<T> {
  check();
  const auto& lf = owner_->plan().leaves[f.leaf];
  if (lf.role != LeafRole::Element || lf.size_tag != StoragePlan::main_tag) {
    throw SchemaError("'" + lf.path_string() + "' is not a per-item property of the record");
  }
  if (slot >= lf.slots) throw RangeError("slot " + std::to_string(slot) + " out of range " + std::to_string(lf.slots));
  auto* p = owner_->element(f.leaf, index_, slot, Const ? AccessMode::Read : AccessMode::Write);
  return *reinterpret_cast<std::conditional_t<Const, const T*, T*>>(p);
}

template <bool Const>
template <class T>
auto BasicObjectView<Const>::get(std::string_view path, std::size_t slot) const -> Ref<T> {
  return get(owner_->template field<T>(path), slot);
}

template <bool Const>
template <class T>
Column<std::conditional_t<Const, const T, T>> BasicObjectView<Const>::array(Field<T> f) const {
  check();
  const auto& lf = owner_->plan().leaves[f.leaf];
  if (lf.role != LeafRole::Element || lf.size_tag != StoragePlan::main_tag) {
    throw SchemaError("'" + lf.path_string() + "' is not an array property of the record");
  }
  auto col = owner_->get_collection(f);
  // One row, slots as elements: transpose so that element k is slot k.
  return Column<std::conditional_t<Const, const T, T>>(&col(index_, 0), col.slot_stride(), col.row_stride(),
                                                       col.slots(), 1);
}

template <bool Const>
std::size_t BasicObjectView<Const>::jagged_length(const JaggedHandle& h, std::size_t slot) const {
  check();
  return owner_->jagged_length(index_, h, slot);
}

template <bool Const>
template <class T>
Column<std::conditional_t<Const, const T, T>> BasicObjectView<Const>::jagged(const JaggedHandle& h, Field<T> f,
                                                                            std::size_t slot) const {
  check();
  const std::size_t begin = owner_->jagged_begin(index_, h, slot);
  const std::size_t length = owner_->jagged_length(index_, h, slot);
  return owner_->jagged_values(h, f).rows_slice(begin, length);
}

template <bool Const>
void BasicObjectView<Const>::jagged_resize(const JaggedHandle& h, std::size_t new_length, std::size_t slot)
  requires(!Const)
{
  check();
  owner_->jagged_resize(index_, h, new_length, slot);
  generation_ = owner_->generation();
}

}  // namespace layoutkit
