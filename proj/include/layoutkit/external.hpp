#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstring>
#include <functional>
#include <span>
#include <string>
#include <tuple>
#include <type_traits>
#include <utility>
#include <vector>

#include "layoutkit/collection.hpp"

namespace layoutkit {

/// Maps the stored leaves of a schema onto members of an existing record
/// type R so that sequences of R can be imported into, and exported from,
/// any collection of that schema.
template <class R>
class ExternalBinding {
 public:
  /// Rows processed per leaf before moving on to the next leaf.
  static constexpr std::size_t kBlock = 512;

  template <class T>
  ExternalBinding& bind(std::string path, T R::*member) {
    return bind_with<T>(
        std::move(path), [member](const R& r) -> const T& { return r.*member; },
        [member](R& r, const T& v) { r.*member = v; });
  }

  /// Member of a nested struct member, e.g. &Sensor::calibration_data, &CalibrationData::noisy.
  template <class M, class T>
  ExternalBinding& bind(std::string path, M R::*outer, T M::*inner) {
    return bind_with<T>(
        std::move(path), [outer, inner](const R& r) -> const T& { return (r.*outer).*inner; },
        [outer, inner](R& r, const T& v) { (r.*outer).*inner = v; });
  }

  /// Leaf addressed through arbitrary callables; get(const R&) -> T, set(R&, T).
  template <class T, class Get, class Set>
  ExternalBinding& bind_with(std::string path, Get get, Set set) {
    Entry e;
    e.path = std::move(path);
    e.import = [get](Collection& c, std::size_t leaf, std::span<const R> src, std::size_t b, std::size_t n) {
      auto col = c.get_collection(Field<T>{leaf});
      if (col.row_stride() == 1) {
        T* out = col.base();
        for (std::size_t i = b; i < b + n; ++i) out[i] = get(src[i]);
      } else {
        for (std::size_t i = b; i < b + n; ++i) col(i) = get(src[i]);
      }
    };
    e.export_ = [set](const Collection& c, std::size_t leaf, std::span<R> dst, std::size_t b, std::size_t n) {
      auto col = c.get_collection(Field<T>{leaf});
      if (col.row_stride() == 1) {
        const T* in = col.base();
        for (std::size_t i = b; i < b + n; ++i) set(dst[i], in[i]);
      } else {
        for (std::size_t i = b; i < b + n; ++i) set(dst[i], col(i));
      }
    };
    e.check = [](const Collection& c, std::size_t leaf) { c.get_collection(Field<T>{leaf}); };
    entries_.push_back(std::move(e));
    return *this;
  }

  /// Fixed array member; slot k of the leaf holds element k.
  template <class T, std::size_t N>
  ExternalBinding& bind_array(std::string path, std::array<T, N> R::*member) {
    Entry e;
    e.path = std::move(path);
    e.slots = N;
    e.import = [member](Collection& c, std::size_t leaf, std::span<const R> src, std::size_t b, std::size_t n) {
      auto col = c.get_collection(Field<T>{leaf});
      for (std::size_t k = 0; k < N; ++k) {
        for (std::size_t i = b; i < b + n; ++i) col(i, k) = (src[i].*member)[k];
      }
    };
    e.export_ = [member](const Collection& c, std::size_t leaf, std::span<R> dst, std::size_t b, std::size_t n) {
      auto col = c.get_collection(Field<T>{leaf});
      for (std::size_t k = 0; k < N; ++k) {
        for (std::size_t i = b; i < b + n; ++i) (dst[i].*member)[k] = col(i, k);
      }
    };
    e.check = [](const Collection& c, std::size_t leaf) { c.get_collection(Field<T>{leaf}); };
    entries_.push_back(std::move(e));
    return *this;
  }

  /// Jagged vector with a single value leaf, mapped to a std::vector member.
  /// `path` names the jagged property; its value leaf is `path.value` unless
  /// `value_leaf` is given.
  template <class T>
  ExternalBinding& bind_jagged(std::string path, std::vector<T> R::*member, std::string value_leaf = "value") {
    Jagged j;
    j.path = path;
    j.value_path = path + "." + value_leaf;
    j.lengths = [member](std::span<const R> src, std::vector<std::uint64_t>& out) {
      out.resize(src.size());
      for (std::size_t i = 0; i < src.size(); ++i) out[i] = (src[i].*member).size();
    };
    j.import = [member](Collection& c, const JaggedHandle& h, std::size_t leaf, std::span<const R> src) {
      auto col = c.jagged_values(h, Field<T>{leaf});
      std::size_t at = 0;
      for (const R& r : src) {
        for (const T& v : r.*member) col(at++) = v;
      }
    };
    j.export_ = [member](const Collection& c, const JaggedHandle& h, std::size_t leaf, std::span<R> dst) {
      auto col = c.jagged_values(h, Field<T>{leaf});
      const auto p = c.prefix_sums(h);
      for (std::size_t i = 0; i < dst.size(); ++i) {
        auto& v = dst[i].*member;
        v.resize(static_cast<std::size_t>(p[i + 1] - p[i]));
        for (std::size_t k = 0; k < v.size(); ++k) v[k] = col(static_cast<std::size_t>(p[i]) + k);
      }
    };
    j.check = [](const Collection& c, std::size_t leaf) { c.get_collection(Field<T>{leaf}); };
    jagged_.push_back(std::move(j));
    return *this;
  }

  /// Replaces dst's contents with the records of src.
  void import_into(Collection& dst, std::span<const R> src) const {
    const auto resolved = resolve(dst);
    dst.resize(src.size());
    std::vector<std::uint64_t> lengths;
    for (std::size_t j = 0; j < jagged_.size(); ++j) {
      const JaggedHandle h = dst.jagged(jagged_[j].path);
      jagged_[j].lengths(src, lengths);
      dst.assign_jagged_lengths(h, lengths);
      jagged_[j].import(dst, h, resolved.jagged_leaves[j], src);
    }
    for (std::size_t b = 0; b < src.size(); b += kBlock) {
      const std::size_t n = std::min(kBlock, src.size() - b);
      for (std::size_t e = 0; e < entries_.size(); ++e) entries_[e].import(dst, resolved.leaves[e], src, b, n);
    }
  }

  /// Leaf index of each bind()/bind_with() entry, in binding order, after
  /// checking that the binding covers the collection's schema.
  std::vector<std::size_t> bound_leaves(const Collection& c) const { return resolve(c).leaves; }

  /// Writes the collection's records into dst, which must have src.size() entries.
  void export_into(const Collection& src, std::span<R> dst) const {
    if (dst.size() != src.size()) {
      throw BindingError("export of " + std::to_string(src.size()) + " records into storage of " +
                         std::to_string(dst.size()));
    }
    const auto resolved = resolve(src);
    for (std::size_t b = 0; b < dst.size(); b += kBlock) {
      const std::size_t n = std::min(kBlock, dst.size() - b);
      for (std::size_t e = 0; e < entries_.size(); ++e) entries_[e].export_(src, resolved.leaves[e], dst, b, n);
    }
    for (std::size_t j = 0; j < jagged_.size(); ++j) {
      jagged_[j].export_(src, src.jagged(jagged_[j].path), resolved.jagged_leaves[j], dst);
    }
  }

 private:
  struct Entry {
    std::string path;
    std::size_t slots = 1;
    std::function<void(Collection&, std::size_t, std::span<const R>, std::size_t, std::size_t)> import;
    std::function<void(const Collection&, std::size_t, std::span<R>, std::size_t, std::size_t)> export_;
    std::function<void(const Collection&, std::size_t)> check;
  };
  struct Jagged {
    std::string path;
    std::string value_path;
    std::function<void(std::span<const R>, std::vector<std::uint64_t>&)> lengths;
    std::function<void(Collection&, const JaggedHandle&, std::size_t, std::span<const R>)> import;
    std::function<void(const Collection&, const JaggedHandle&, std::size_t, std::span<R>)> export_;
    std::function<void(const Collection&, std::size_t)> check;
  };
  struct Resolved {
    std::vector<std::size_t> leaves;
    std::vector<std::size_t> jagged_leaves;
  };

  Resolved resolve(const Collection& c) const {
    const auto& plan = c.plan();
    Resolved r;
    std::vector<bool> bound(plan.leaves.size(), false);
    auto claim = [&](const std::string& path, std::size_t leaf) {
      if (bound[leaf]) throw BindingError("leaf '" + path + "' bound twice");
      bound[leaf] = true;
    };
    for (const auto& e : entries_) {
      const std::size_t leaf = c.leaf_of(e.path);
      const auto& lf = plan.leaves[leaf];
      if (lf.role != LeafRole::Element || lf.size_tag != StoragePlan::main_tag) {
        throw BindingError("'" + e.path + "' is not a per-item leaf of the record");
      }
      if (lf.slots != e.slots) {
        throw BindingError("'" + e.path + "' has " + std::to_string(lf.slots) + " slots, binding has " +
                           std::to_string(e.slots));
      }
      e.check(c, leaf);
      claim(e.path, leaf);
      r.leaves.push_back(leaf);
    }
    for (const auto& j : jagged_) {
      const JaggedHandle h = c.jagged(j.path);
      const std::size_t leaf = c.leaf_of(j.value_path);
      if (h.multiplier != 1 || plan.leaves[leaf].size_tag != h.tag || plan.leaves[leaf].slots != 1) {
        throw BindingError("'" + j.path + "' is not a simple jagged vector");
      }
      j.check(c, leaf);
      claim(j.value_path, leaf);
      bound[h.prefix_leaf] = true;
      r.jagged_leaves.push_back(leaf);
    }
    for (std::size_t leaf = 0; leaf < plan.leaves.size(); ++leaf) {
      if (!bound[leaf] && plan.leaves[leaf].role != LeafRole::Global) {
        throw BindingError("leaf '" + plan.leaves[leaf].path_string() + "' has no external binding");
      }
    }
    return r;
  }

  std::vector<Entry> entries_;
  std::vector<Jagged> jagged_;
};

/// One scalar member of R, reached through one or two member pointers.
template <class R, class T, class M = void>
struct MemberField {
  using value_type = T;
  std::string path;
  M R::*outer;
  T M::*inner;

  const T& get(const R& r) const { return (r.*outer).*inner; }
  T& ref(R& r) const { return (r.*outer).*inner; }
};

template <class R, class T>
struct MemberField<R, T, void> {
  using value_type = T;
  std::string path;
  T R::*member;

  const T& get(const R& r) const { return r.*member; }
  T& ref(R& r) const { return r.*member; }
};

template <class R, class T>
MemberField<R, T> member(std::string path, T R::*m) {
  return {std::move(path), m};
}

template <class R, class M, class T>
MemberField<R, T, M> member(std::string path, M R::*outer, T M::*inner) {
  return {std::move(path), outer, inner};
}

/// Binding whose fields are all scalar members known at compile time. Import
/// and export make a single pass over the records; the equivalent
/// ExternalBinding is kept for validation and for callers that need the
/// type-erased form.
template <class R, class... Fields>
class RecordBinding {
 public:
  explicit RecordBinding(Fields... fields) : fields_(std::move(fields)...) {
    std::apply([this](const auto&... f) { (bind_one(f), ...); }, fields_);
  }

  const ExternalBinding<R>& dynamic() const { return dynamic_; }

  void import_into(Collection& dst, std::span<const R> src) const {
    const auto leaves = dynamic_.bound_leaves(dst);
    dst.resize(src.size());
    auto cols = columns(dst, leaves, std::index_sequence_for<Fields...>{});
    const std::size_t n = src.size();
    if (std::byte* image = record_image(cols)) {
      if (n > 0) std::memcpy(image, src.data(), n * sizeof(R));
    } else if (dense(cols)) {
      auto ptrs = std::apply([](const auto&... c) { return std::make_tuple(c.base()...); }, cols);
      for (std::size_t i = 0; i < n; ++i) each(ptrs, [&](auto* p, const auto& f) { p[i] = f.get(src[i]); });
    } else {
      for (std::size_t i = 0; i < n; ++i) each(cols, [&](const auto& c, const auto& f) { c(i) = f.get(src[i]); });
    }
  }

  void export_into(const Collection& src, std::span<R> dst) const {
    if (dst.size() != src.size()) {
      throw BindingError("export of " + std::to_string(src.size()) + " records into storage of " +
                         std::to_string(dst.size()));
    }
    const auto leaves = dynamic_.bound_leaves(src);
    const auto cols = columns(src, leaves, std::index_sequence_for<Fields...>{});
    if (const std::byte* image = record_image(cols)) {
      if (!dst.empty()) std::memcpy(dst.data(), image, dst.size() * sizeof(R));
      return;
    }
    for (std::size_t i = 0; i < dst.size(); ++i) each(cols, [&](const auto& c, const auto& f) { f.ref(dst[i]) = c(i); });
  }

 private:
  template <class F>
  void bind_one(const F& f) {
    using T = typename F::value_type;
    dynamic_.template bind_with<T>(
        f.path, [f](const R& r) -> const T& { return f.get(r); }, [f](R& r, const T& v) { f.ref(r) = v; });
  }

  template <class C, std::size_t... I>
  auto columns(C& c, const std::vector<std::size_t>& leaves, std::index_sequence<I...>) const {
    return std::make_tuple(
        c.get_collection(Field<typename std::tuple_element_t<I, std::tuple<Fields...>>::value_type>{leaves[I]})...);
  }

  /// Start of the stored records when the columns interleave exactly like the
  /// members of R, so that rows are byte images of R; null otherwise.
  template <class Cols>
  auto record_image(const Cols& cols) const {
    using Byte = std::conditional_t<std::is_const_v<std::remove_pointer_t<decltype(std::get<0>(cols).base())>>,
                                    const std::byte, std::byte>;
    Byte* image = nullptr;
    if constexpr (std::is_trivially_copyable_v<R> && std::is_default_constructible_v<R>) {
      static const R probe{};
      bool ok = true;
      Byte* common = nullptr;
      each(cols, [&](const auto& c, const auto& f) {
        using T = typename std::remove_reference_t<decltype(f)>::value_type;
        const auto offset = reinterpret_cast<const std::byte*>(&f.get(probe)) - reinterpret_cast<const std::byte*>(&probe);
        Byte* start = reinterpret_cast<Byte*>(c.base()) - offset;
        ok = ok && c.slots() == 1 && c.row_stride() * static_cast<std::ptrdiff_t>(sizeof(T)) ==
                                         static_cast<std::ptrdiff_t>(sizeof(R));
        if (common == nullptr) common = start;
        ok = ok && start == common;
      });
      if (ok) image = common;
    }
    return image;
  }

  template <class Cols>
  static bool dense(const Cols& cols) {
    return std::apply([](const auto&... c) { return ((c.row_stride() == 1) && ...); }, cols);
  }

  template <class Tuple, class Fn>
  void each(const Tuple& t, Fn&& fn) const {
    each_impl(t, fn, std::index_sequence_for<Fields...>{});
  }
  template <class Tuple, class Fn, std::size_t... I>
  void each_impl(const Tuple& t, Fn& fn, std::index_sequence<I...>) const {
    (fn(std::get<I>(t), std::get<I>(fields_)), ...);
  }

  std::tuple<Fields...> fields_;
  ExternalBinding<R> dynamic_;
};

template <class R, class... Fields>
RecordBinding<R, Fields...> make_record_binding(Fields... fields) {
  return RecordBinding<R, Fields...>(std::move(fields)...);
}

template <class R>
void import_external(Collection& dst, std::span<const R> src, const ExternalBinding<R>& binding) {
  binding.import_into(dst, src);
}

template <class R>
void import_external(Collection& dst, const std::vector<R>& src, const ExternalBinding<R>& binding) {
  binding.import_into(dst, std::span<const R>(src));
}

template <class R>
void export_external(const Collection& src, std::span<R> dst, const ExternalBinding<R>& binding) {
  binding.export_into(src, dst);
}

template <class R>
std::vector<R> export_external(const Collection& src, const ExternalBinding<R>& binding) {
  std::vector<R> out(src.size());
  binding.export_into(src, std::span<R>(out));
  return out;
}

template <class R, class... Fields>
void import_external(Collection& dst, std::span<const R> src, const RecordBinding<R, Fields...>& binding) {
  binding.import_into(dst, src);
}

template <class R, class... Fields>
void import_external(Collection& dst, const std::vector<R>& src, const RecordBinding<R, Fields...>& binding) {
  binding.import_into(dst, std::span<const R>(src));
}

template <class R, class... Fields>
void export_external(const Collection& src, std::span<R> dst, const RecordBinding<R, Fields...>& binding) {
  binding.export_into(src, dst);
}

template <class R, class... Fields>
std::vector<R> export_external(const Collection& src, const RecordBinding<R, Fields...>& binding) {
  std::vector<R> out(src.size());
  binding.export_into(src, std::span<R>(out));
  return out;
}

}  // namespace layoutkit
