#pragma once

#include <cstddef>
#include <cstdint>
#include <iterator>
#include <string>
#include <type_traits>

#include "layoutkit/errors.hpp"

namespace layoutkit {

/// Typed view over one leaf: a rows x slots matrix addressed through element
/// strides. Flat index f maps to (row f % rows, slot f / rows), i.e. all
/// records' slot-0 values first, then slot 1, and so on.
///
/// A Column does not track its collection; any size-changing operation on
/// the owner leaves it dangling.
template <class T>
class Column {
 public:
  using value_type = std::remove_cv_t<T>;
  using reference = T&;

  Column() = default;
  Column(T* base, std::ptrdiff_t row_stride, std::ptrdiff_t slot_stride, std::size_t rows, std::size_t slots)
      : base_(base), row_stride_(row_stride), slot_stride_(slot_stride), rows_(rows), slots_(slots) {}

  template <class U, class = std::enable_if_t<std::is_same_v<const U, T>>>
  Column(const Column<U>& other)  // NOLINT(google-explicit-constructor)
      : Column(other.base(), other.row_stride(), other.slot_stride(), other.rows(), other.slots()) {}

  std::size_t rows() const { return rows_; }
  std::size_t slots() const { return slots_; }
  std::size_t size() const { return rows_ * slots_; }
  bool empty() const { return size() == 0; }
  T* base() const { return base_; }
  std::ptrdiff_t row_stride() const { return row_stride_; }
  std::ptrdiff_t slot_stride() const { return slot_stride_; }
  bool contiguous() const { return row_stride_ == 1 && (slots_ <= 1 || slot_stride_ == static_cast<std::ptrdiff_t>(rows_)); }

  T& operator()(std::size_t row, std::size_t slot = 0) const {
    return base_[static_cast<std::ptrdiff_t>(row) * row_stride_ + static_cast<std::ptrdiff_t>(slot) * slot_stride_];
  }
  T& operator[](std::size_t flat) const {
    if (slots_ == 1) return base_[static_cast<std::ptrdiff_t>(flat) * row_stride_];
    return (*this)(flat % rows_, flat / rows_);
  }
  T& at(std::size_t flat) const {
    if (flat >= size()) {
      throw RangeError("column index " + std::to_string(flat) + " out of range " + std::to_string(size()));
    }
    return (*this)[flat];
  }

  /// Single slot as a one-slot column.
  Column slot(std::size_t s) const {
    if (s >= slots_) throw RangeError("slot " + std::to_string(s) + " out of range " + std::to_string(slots_));
    return Column(base_ + static_cast<std::ptrdiff_t>(s) * slot_stride_, row_stride_, slot_stride_, rows_, 1);
  }
  /// Rows [begin, begin + count) of every slot.
  Column rows_slice(std::size_t begin, std::size_t count) const {
    if (begin > rows_ || count > rows_ - begin) throw RangeError("row slice out of range");
    return Column(base_ + static_cast<std::ptrdiff_t>(begin) * row_stride_, row_stride_, slot_stride_, count, slots_);
  }

  void fill(const value_type& value) const
    requires(!std::is_const_v<T>)
  {
    for (std::size_t s = 0; s < slots_; ++s) {
      T* p = base_ + static_cast<std::ptrdiff_t>(s) * slot_stride_;
      for (std::size_t r = 0; r < rows_; ++r) p[static_cast<std::ptrdiff_t>(r) * row_stride_] = value;
    }
  }

  /// Assigns a sequence in flat order; its length must equal size().
  template <class Range>
  void assign(const Range& values) const
    requires(!std::is_const_v<T>)
  {
    const auto n = static_cast<std::size_t>(std::distance(std::begin(values), std::end(values)));
    if (n != size()) {
      throw RangeError("assign of " + std::to_string(n) + " values to column of " + std::to_string(size()));
    }
    std::size_t i = 0;
    for (const auto& v : values) (*this)[i++] = static_cast<value_type>(v);
  }

  class iterator {
   public:
    using iterator_category = std::random_access_iterator_tag;
    using value_type = std::remove_cv_t<T>;
    using difference_type = std::ptrdiff_t;
    using pointer = T*;
    using reference = T&;

    iterator() = default;
    iterator(const Column* c, std::size_t i) : c_(c), i_(i) {}
    T& operator*() const { return (*c_)[i_]; }
    T& operator[](difference_type d) const { return (*c_)[i_ + d]; }
    iterator& operator++() { ++i_; return *this; }
    iterator operator++(int) { auto t = *this; ++i_; return t; }
    iterator& operator--() { --i_; return *this; }
    iterator operator--(int) { auto t = *this; --i_; return t; }
    iterator& operator+=(difference_type d) { i_ += d; return *this; }
    iterator& operator-=(difference_type d) { i_ -= d; return *this; }
    friend iterator operator+(iterator it, difference_type d) { return it += d; }
    friend iterator operator+(difference_type d, iterator it) { return it += d; }
    friend iterator operator-(iterator it, difference_type d) { return it -= d; }
    friend difference_type operator-(const iterator& a, const iterator& b) {
      return static_cast<difference_type>(a.i_) - static_cast<difference_type>(b.i_);
    }
    friend bool operator==(const iterator& a, const iterator& b) { return a.i_ == b.i_; }
    friend auto operator<=>(const iterator& a, const iterator& b) { return a.i_ <=> b.i_; }

   private:
    const Column* c_ = nullptr;
    std::size_t i_ = 0;
  };

  iterator begin() const { return iterator(this, 0); }
  iterator end() const { return iterator(this, size()); }

 private:
  T* base_ = nullptr;
  std::ptrdiff_t row_stride_ = 0;
  std::ptrdiff_t slot_stride_ = 0;
  std::size_t rows_ = 0;
  std::size_t slots_ = 0;
};

}  // namespace layoutkit
