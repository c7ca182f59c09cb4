#include "layoutkit/collection.hpp"

#include <algorithm>
#include <sstream>

namespace layoutkit {

Collection::Collection(Schema schema, LayoutSpec spec, ContextInfo info)
    : schema_(std::move(schema)), plan_(std::make_shared<const StoragePlan>(flatten(schema_))) {
  layout_ = build_layout(spec, plan_, info);
  jagged_leaves_.resize(plan_->size_tags.size() - 1);
  for (std::size_t leaf = 0; leaf < plan_->leaves.size(); ++leaf) {
    const auto& lf = plan_->leaves[leaf];
    if (lf.role == LeafRole::PrefixSum) continue;
    element_by_path_.emplace(lf.path_string(), leaf);
    if (lf.role != LeafRole::Element) continue;
    if (lf.size_tag == StoragePlan::main_tag) {
      main_leaves_.push_back(leaf);
    } else {
      jagged_leaves_[lf.size_tag - 1].push_back(leaf);
    }
  }
}

Collection::Collection(Collection&&) noexcept = default;
Collection& Collection::operator=(Collection&&) noexcept = default;
Collection::~Collection() = default;

std::size_t Collection::leaf_of(std::string_view path) const {
  auto it = element_by_path_.find(std::string(path));
  if (it == element_by_path_.end()) {
    throw SchemaError("schema '" + schema_.name() + "' has no stored property '" + std::string(path) + "'");
  }
  return it->second;
}

JaggedHandle Collection::jagged(std::string_view path) const {
  auto tag = plan_->find_tag(path);
  if (!tag || *tag == StoragePlan::main_tag) {
    throw SchemaError("schema '" + schema_.name() + "' has no jagged vector '" + std::string(path) + "'");
  }
  return handle_for_tag(*tag);
}

JaggedHandle Collection::handle_for_tag(std::size_t tag) const {
  return JaggedHandle{tag, plan_->prefix_leaf(tag), plan_->size_tags[tag].multiplier};
}

ObjectView Collection::get_object(std::size_t index) { return ObjectView(*this, index); }
ConstObjectView Collection::get_object(std::size_t index) const { return ConstObjectView(*this, index); }

std::byte* Collection::element(std::size_t leaf, std::size_t row, std::size_t slot, AccessMode mode) const {
  LeafMapping m;
  std::byte* base = layout_->leaf_base(leaf, mode, &m);
  return base + static_cast<std::ptrdiff_t>(row) * m.row_stride + static_cast<std::ptrdiff_t>(slot) * m.slot_stride;
}

void Collection::require_resizable() const {
  const auto exec = current_execution_context();
  if (!layout_->capabilities().in(exec).resizable) {
    throw AccessFault("collection in context " + context_info().to_string() + " is not resizable from " +
                      std::string(to_string(exec)) + " execution");
  }
}

std::int64_t Collection::prefix_at(const JaggedHandle& h, std::size_t i) const {
  return load_integer(element(h.prefix_leaf, i, 0, AccessMode::Read), plan_->leaves[h.prefix_leaf].value_type);
}

void Collection::shift_prefix(const JaggedHandle& h, std::size_t from, std::int64_t delta) {
  if (delta == 0) return;
  const auto& type = plan_->leaves[h.prefix_leaf].value_type;
  LeafMapping m;
  std::byte* base = layout_->leaf_base(h.prefix_leaf, AccessMode::Write, &m);
  for (std::size_t r = from; r < m.rows; ++r) {
    std::byte* p = base + static_cast<std::ptrdiff_t>(r) * m.row_stride;
    store_integer(p, type, load_integer(p, type) + delta);
  }
}

void Collection::fill_prefix(const JaggedHandle& h, std::size_t from, std::size_t to, std::int64_t value) {
  const auto& type = plan_->leaves[h.prefix_leaf].value_type;
  LeafMapping m;
  std::byte* base = layout_->leaf_base(h.prefix_leaf, AccessMode::Write, &m);
  for (std::size_t r = from; r < to; ++r) store_integer(base + static_cast<std::ptrdiff_t>(r) * m.row_stride, type, value);
}

void Collection::check_index_capacity(const JaggedHandle& h, std::uint64_t total) const {
  const auto& type = plan_->leaves[h.prefix_leaf].value_type;
  if (total > static_cast<std::uint64_t>(integer_max(type))) {
    throw RangeError("jagged vector '" + plan_->size_tags[h.tag].id + "' would hold " + std::to_string(total) +
                     " elements, more than its " + type.name() + " index type can address");
  }
}

std::size_t Collection::jagged_begin(std::size_t record, const JaggedHandle& h, std::size_t slot) const {
  if (record >= size()) throw RangeError("record " + std::to_string(record) + " out of range " + std::to_string(size()));
  if (slot >= h.multiplier) throw RangeError("jagged slot " + std::to_string(slot) + " out of range");
  return static_cast<std::size_t>(prefix_at(h, record * h.multiplier + slot));
}

std::size_t Collection::jagged_length(std::size_t record, const JaggedHandle& h, std::size_t slot) const {
  const std::size_t begin = jagged_begin(record, h, slot);
  return static_cast<std::size_t>(prefix_at(h, record * h.multiplier + slot + 1)) - begin;
}

std::vector<std::int64_t> Collection::prefix_sums(const JaggedHandle& h) const {
  const std::size_t n = layout_->rows(h.prefix_leaf);
  std::vector<std::int64_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = prefix_at(h, i);
  return out;
}

void Collection::resize(std::size_t n) {
  require_resizable();
  const std::size_t old = size();
  if (n == old) return;
  ++generation_;
  if (n < old) {
    for (std::size_t tag = 1; tag < plan_->size_tags.size(); ++tag) {
      const JaggedHandle h = handle_for_tag(tag);
      layout_->resize(tag, static_cast<std::size_t>(prefix_at(h, n * h.multiplier)));
    }
    layout_->resize(StoragePlan::main_tag, n);
    return;
  }
  layout_->resize(StoragePlan::main_tag, n);
  for (std::size_t tag = 1; tag < plan_->size_tags.size(); ++tag) {
    const JaggedHandle h = handle_for_tag(tag);
    fill_prefix(h, old * h.multiplier + 1, n * h.multiplier + 1, prefix_at(h, old * h.multiplier));
  }
}

void Collection::reserve(std::size_t n) {
  require_resizable();
  ++generation_;
  layout_->reserve(StoragePlan::main_tag, n);
}

void Collection::reserve_jagged(const JaggedHandle& h, std::size_t n) {
  require_resizable();
  ++generation_;
  layout_->reserve(h.tag, n);
}

void Collection::clear() { resize(0); }

void Collection::shrink_to_fit() {
  require_resizable();
  ++generation_;
  for (std::size_t tag = 0; tag < plan_->size_tags.size(); ++tag) layout_->shrink_to_fit(tag);
}

void Collection::jagged_resize(std::size_t record, const JaggedHandle& h, std::size_t new_length, std::size_t slot) {
  require_resizable();
  const std::size_t v = record * h.multiplier + slot;
  const std::size_t begin = jagged_begin(record, h, slot);
  const std::size_t old_length = static_cast<std::size_t>(prefix_at(h, v + 1)) - begin;
  if (new_length == old_length) return;
  const std::size_t total = layout_->size(h.tag);
  check_index_capacity(h, total - old_length + new_length);
  ++generation_;
  if (new_length > old_length) {
    layout_->insert(h.tag, begin + old_length, new_length - old_length);
  } else {
    layout_->erase(h.tag, begin + new_length, old_length - new_length);
  }
  shift_prefix(h, v + 1, static_cast<std::int64_t>(new_length) - static_cast<std::int64_t>(old_length));
}

void Collection::assign_jagged_lengths(const JaggedHandle& h, std::span<const std::uint64_t> lengths) {
  require_resizable();
  const std::size_t vectors = size() * h.multiplier;
  if (lengths.size() != vectors) {
    throw RangeError("expected " + std::to_string(vectors) + " jagged lengths, got " + std::to_string(lengths.size()));
  }
  std::uint64_t total = 0;
  for (auto len : lengths) total += len;
  check_index_capacity(h, total);
  ++generation_;
  layout_->reserve(h.tag, total);
  layout_->resize(h.tag, 0);
  layout_->resize(h.tag, total);

  const auto& type = plan_->leaves[h.prefix_leaf].value_type;
  LeafMapping m;
  std::byte* base = layout_->leaf_base(h.prefix_leaf, AccessMode::Write, &m);
  std::int64_t running = 0;
  store_integer(base, type, 0);
  for (std::size_t v = 0; v < vectors; ++v) {
    running += static_cast<std::int64_t>(lengths[v]);
    store_integer(base + static_cast<std::ptrdiff_t>(v + 1) * m.row_stride, type, running);
  }
}

RecordValue Collection::make_record() const {
  RecordValue r;
  for (std::size_t leaf : main_leaves_) r.fields.emplace_back(plan_->leaves[leaf].slots, 0);
  for (std::size_t j = 0; j < jagged_leaves_.size(); ++j) {
    JaggedEntry empty;
    for (std::size_t leaf : jagged_leaves_[j]) empty.values.emplace_back(plan_->leaves[leaf].slots);
    r.jagged.emplace_back(plan_->size_tags[j + 1].multiplier, empty);
  }
  return r;
}

RecordValue Collection::read_record(std::size_t index) const {
  if (index >= size()) throw RangeError("record " + std::to_string(index) + " out of range " + std::to_string(size()));
  RecordValue r = make_record();
  for (std::size_t i = 0; i < main_leaves_.size(); ++i) {
    const auto& lf = plan_->leaves[main_leaves_[i]];
    for (std::size_t s = 0; s < lf.slots; ++s) {
      r.fields[i][s] = load_raw(element(main_leaves_[i], index, s, AccessMode::Read), lf.element_size());
    }
  }
  for (std::size_t j = 0; j < jagged_leaves_.size(); ++j) {
    const JaggedHandle h = handle_for_tag(j + 1);
    for (std::size_t v = 0; v < h.multiplier; ++v) {
      JaggedEntry& e = r.jagged[j][v];
      const std::size_t begin = jagged_begin(index, h, v);
      e.length = jagged_length(index, h, v);
      for (std::size_t l = 0; l < jagged_leaves_[j].size(); ++l) {
        const std::size_t leaf = jagged_leaves_[j][l];
        const auto& lf = plan_->leaves[leaf];
        for (std::size_t s = 0; s < lf.slots; ++s) {
          auto& out = e.values[l][s];
          out.resize(e.length);
          for (std::size_t k = 0; k < e.length; ++k) {
            out[k] = load_raw(element(leaf, begin + k, s, AccessMode::Read), lf.element_size());
          }
        }
      }
    }
  }
  return r;
}

namespace {

void check_shape(const Collection& c, const RecordValue& value) {
  const auto& plan = c.plan();
  auto bad = [](const std::string& what) { throw RangeError("record value does not match schema: " + what); };
  if (value.fields.size() != c.main_leaves().size()) bad("field count");
  for (std::size_t i = 0; i < value.fields.size(); ++i) {
    if (value.fields[i].size() != plan.leaves[c.main_leaves()[i]].slots) bad(plan.leaves[c.main_leaves()[i]].path_string());
  }
  if (value.jagged.size() != c.jagged_leaves().size()) bad("jagged count");
  for (std::size_t j = 0; j < value.jagged.size(); ++j) {
    const auto& tag = plan.size_tags[j + 1];
    if (value.jagged[j].size() != tag.multiplier) bad(tag.id);
    for (const auto& e : value.jagged[j]) {
      if (e.values.size() != c.jagged_leaves()[j].size()) bad(tag.id);
      for (std::size_t l = 0; l < e.values.size(); ++l) {
        if (e.values[l].size() != plan.leaves[c.jagged_leaves()[j][l]].slots) bad(tag.id);
        for (const auto& slot : e.values[l]) {
          if (slot.size() != e.length) bad(tag.id);
        }
      }
    }
  }
}

}  // namespace

void Collection::write_record(std::size_t index, const RecordValue& value) {
  if (index >= size()) throw RangeError("record " + std::to_string(index) + " out of range " + std::to_string(size()));
  check_shape(*this, value);
  std::vector<JaggedHandle> handles;
  for (std::size_t j = 0; j < jagged_leaves_.size(); ++j) {
    const JaggedHandle h = handle_for_tag(j + 1);
    std::uint64_t total = layout_->size(h.tag);
    for (std::size_t v = 0; v < h.multiplier; ++v) total = total - jagged_length(index, h, v) + value.jagged[j][v].length;
    check_index_capacity(h, total);
    handles.push_back(h);
  }
  // Claim all capacity first so that nothing below can fail half way.
  for (std::size_t j = 0; j < handles.size(); ++j) {
    std::uint64_t total = layout_->size(handles[j].tag);
    for (std::size_t v = 0; v < handles[j].multiplier; ++v) {
      total = total - jagged_length(index, handles[j], v) + value.jagged[j][v].length;
    }
    if (total > layout_->size(handles[j].tag)) {
      require_resizable();
      layout_->reserve(handles[j].tag, total);
    }
  }
  ++generation_;
  // Shrinks before growths keeps every intermediate total within the reservation.
  for (bool growing : {false, true}) {
    for (std::size_t j = 0; j < handles.size(); ++j) {
      for (std::size_t v = 0; v < handles[j].multiplier; ++v) {
        const std::size_t have = jagged_length(index, handles[j], v);
        const std::size_t want = value.jagged[j][v].length;
        if (want != have && (want > have) == growing) jagged_resize(index, handles[j], want, v);
      }
    }
  }
  for (std::size_t i = 0; i < main_leaves_.size(); ++i) {
    const auto& lf = plan_->leaves[main_leaves_[i]];
    for (std::size_t s = 0; s < lf.slots; ++s) {
      store_raw(element(main_leaves_[i], index, s, AccessMode::Write), lf.element_size(), value.fields[i][s]);
    }
  }
  for (std::size_t j = 0; j < handles.size(); ++j) {
    for (std::size_t v = 0; v < handles[j].multiplier; ++v) {
      const JaggedEntry& e = value.jagged[j][v];
      const std::size_t begin = jagged_begin(index, handles[j], v);
      for (std::size_t l = 0; l < jagged_leaves_[j].size(); ++l) {
        const std::size_t leaf = jagged_leaves_[j][l];
        const auto& lf = plan_->leaves[leaf];
        for (std::size_t s = 0; s < lf.slots; ++s) {
          for (std::size_t k = 0; k < e.length; ++k) {
            store_raw(element(leaf, begin + k, s, AccessMode::Write), lf.element_size(), e.values[l][s][k]);
          }
        }
      }
    }
  }
}

void Collection::insert_record(std::size_t index, const RecordValue& value) {
  require_resizable();
  const std::size_t n = size();
  if (index > n) throw RangeError("insert at " + std::to_string(index) + " past size " + std::to_string(n));
  check_shape(*this, value);
  for (std::size_t j = 0; j < jagged_leaves_.size(); ++j) {
    const JaggedHandle h = handle_for_tag(j + 1);
    std::uint64_t total = layout_->size(h.tag);
    for (const auto& e : value.jagged[j]) total += e.length;
    check_index_capacity(h, total);
    layout_->reserve(h.tag, total);
  }
  layout_->reserve(StoragePlan::main_tag, n + 1);
  ++generation_;
  layout_->insert(StoragePlan::main_tag, index, 1);
  for (std::size_t j = 0; j < jagged_leaves_.size(); ++j) {
    const JaggedHandle h = handle_for_tag(j + 1);
    const std::size_t first = index * h.multiplier;
    fill_prefix(h, first + 1, first + h.multiplier + 1, prefix_at(h, first));
  }
  write_record(index, value);
}

void Collection::erase_record(std::size_t index) {
  require_resizable();
  if (index >= size()) throw RangeError("erase of record " + std::to_string(index) + " out of range " + std::to_string(size()));
  ++generation_;
  for (std::size_t tag = 1; tag < plan_->size_tags.size(); ++tag) {
    const JaggedHandle h = handle_for_tag(tag);
    const std::size_t first = index * h.multiplier;
    const auto begin = static_cast<std::size_t>(prefix_at(h, first));
    const auto end = static_cast<std::size_t>(prefix_at(h, first + h.multiplier));
    layout_->erase(tag, begin, end - begin);
    shift_prefix(h, first + h.multiplier, -static_cast<std::int64_t>(end - begin));
  }
  layout_->erase(StoragePlan::main_tag, index, 1);
}

void Collection::update_memory_context_info(const ContextInfo& info, const CopyOptions& opts) {
  layout_->update_memory_context_info(info, opts);
  ++generation_;
}

bool Collection::has_bundle(std::string_view bundle) const {
  const auto bundles = schema_.behavior_bundles();
  return std::find(bundles.begin(), bundles.end(), bundle) != bundles.end();
}

void Collection::check_invariants() const {
  const std::size_t n = size();
  for (std::size_t tag = 1; tag < plan_->size_tags.size(); ++tag) {
    const JaggedHandle h = handle_for_tag(tag);
    const std::string& id = plan_->size_tags[tag].id;
    const std::size_t rows = layout_->rows(h.prefix_leaf);
    if (rows != n * h.multiplier + 1) {
      throw Error("jagged '" + id + "': prefix array has " + std::to_string(rows) + " entries for " +
                  std::to_string(n) + " records");
    }
    const auto p = prefix_sums(h);
    if (p[0] != 0) throw Error("jagged '" + id + "': first offset is " + std::to_string(p[0]));
    for (std::size_t i = 1; i < p.size(); ++i) {
      if (p[i] < p[i - 1]) {
        throw Error("jagged '" + id + "': offsets decrease at " + std::to_string(i) + " (" + std::to_string(p[i - 1]) +
                    " > " + std::to_string(p[i]) + ")");
      }
    }
    if (static_cast<std::size_t>(p.back()) != layout_->size(h.tag)) {
      throw Error("jagged '" + id + "': last offset " + std::to_string(p.back()) + " differs from element count " +
                  std::to_string(layout_->size(h.tag)));
    }
    for (std::size_t leaf : jagged_leaves_[tag - 1]) {
      if (layout_->rows(leaf) != layout_->size(h.tag)) {
        throw Error("jagged '" + id + "': leaf '" + plan_->leaves[leaf].path_string() + "' length mismatch");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// dump

namespace {

struct DumpWalker {
  const Collection& c;
  std::size_t record;
  std::ostringstream& out;

  std::string value(std::size_t leaf, std::size_t row, std::size_t slot) const {
    const auto& lf = c.plan().leaves[leaf];
    LeafMapping m = c.layout().mapping(leaf);
    const std::byte* base = c.layout().leaf_base(leaf, AccessMode::Read);
    const std::byte* p = base + static_cast<std::ptrdiff_t>(row) * m.row_stride +
                         static_cast<std::ptrdiff_t>(slot) * m.slot_stride;
    return format_scalar(load_raw(p, lf.element_size()), lf.value_type);
  }

  // Position inside the record: `row` is the record index or the jagged
  // element index, `slot` the combined array index of the current leaves,
  // `vslot` the combined array index outside the innermost jagged vector.
  struct Pos {
    std::size_t row;
    std::uint64_t slot;
    std::uint64_t vslot;
    bool in_jagged;
  };

  bool stored(const PropertyDescriptor& d) const {
    return d.kind != PropertyKind::NoStorage && d.kind != PropertyKind::Global;
  }

  void items(const std::vector<PropertyDescriptor>& ds, std::vector<std::string>& path, const Pos& pos) {
    bool first = true;
    for (const auto& d : ds) {
      if (!stored(d)) continue;
      if (!first) out << ' ';
      first = false;
      out << d.name;
      path.push_back(d.name);
      node(d, path, pos, true);
      path.pop_back();
    }
  }

  // Prints the value part of `d` ("=v", "{...}", "=[...]", "=<n>[...]").
  void node(const PropertyDescriptor& d, std::vector<std::string>& path, const Pos& pos, bool named) {
    switch (d.kind) {
      case PropertyKind::PerItem: {
        if (named) out << '=';
        const std::size_t leaf = c.leaf_of(join_path(path));
        out << value(leaf, pos.row, pos.slot);
        break;
      }
      case PropertyKind::SubGroup:
        out << '{';
        items(d.children, path, pos);
        out << '}';
        break;
      case PropertyKind::FixedArray: {
        if (named) out << '=';
        out << '[';
        for (std::uint32_t a = 0; a < d.extent; ++a) {
          if (a > 0) out << ',';
          Pos inner{pos.row, pos.slot * d.extent + a, pos.in_jagged ? pos.vslot : pos.vslot * d.extent + a,
                    pos.in_jagged};
          element(d, path, inner);
        }
        out << ']';
        break;
      }
      case PropertyKind::JaggedVector: {
        const JaggedHandle h = c.jagged(join_path(path));
        const std::size_t begin = c.jagged_begin(record, h, pos.vslot);
        const std::size_t len = c.jagged_length(record, h, pos.vslot);
        if (named) out << '=';
        out << '<' << len << ">[";
        for (std::size_t k = 0; k < len; ++k) {
          if (k > 0) out << ',';
          element(d, path, Pos{begin + k, 0, pos.vslot, true});
        }
        out << ']';
        break;
      }
      default: break;
    }
  }

  void element(const PropertyDescriptor& d, std::vector<std::string>& path, const Pos& pos) {
    std::size_t stored_children = 0;
    const PropertyDescriptor* only = nullptr;
    for (const auto& ch : d.children) {
      if (stored(ch)) {
        ++stored_children;
        only = &ch;
      }
    }
    if (stored_children == 1 && only->kind == PropertyKind::PerItem) {
      path.push_back(only->name);
      node(*only, path, pos, false);
      path.pop_back();
      return;
    }
    out << '{';
    items(d.children, path, pos);
    out << '}';
  }
};

void dump_globals(const Collection& c, const std::vector<PropertyDescriptor>& ds, std::vector<std::string>& path,
                  std::ostringstream& out) {
  for (const auto& d : ds) {
    path.push_back(d.name);
    if (d.kind == PropertyKind::Global) {
      const std::size_t leaf = c.leaf_of(join_path(path));
      const auto& lf = c.plan().leaves[leaf];
      const std::byte* p = c.layout().leaf_base(leaf, AccessMode::Read);
      out << "global " << join_path(path) << '=' << format_scalar(load_raw(p, lf.element_size()), lf.value_type)
          << '\n';
    } else if (d.kind == PropertyKind::SubGroup) {
      dump_globals(c, d.children, path, out);
    }
    path.pop_back();
  }
}

}  // namespace

std::string Collection::dump() const {
  std::ostringstream out;
  out << "schema " << schema_.name() << " size " << size() << '\n';
  std::vector<std::string> path;
  dump_globals(*this, schema_.properties(), path, out);
  for (std::size_t i = 0; i < size(); ++i) {
    out << '[' << i << "] ";
    DumpWalker w{*this, i, out};
    w.items(schema_.properties(), path, {i, 0, 0, false});
    out << '\n';
  }
  return out.str();
}

}  // namespace layoutkit
