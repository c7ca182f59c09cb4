#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <type_traits>

namespace layoutkit {

enum class ScalarKind : std::uint8_t { Bool, U8, U16, U32, U64, I32, I64, F32, F64, Enum };

/// Value type of a leaf. Enumerations are stored as the narrowest unsigned
/// integer able to hold [0, cardinality).
struct ScalarType {
  ScalarKind kind = ScalarKind::U8;
  std::string enum_name;
  std::uint32_t cardinality = 0;

  ScalarType() = default;
  ScalarType(ScalarKind k) : kind(k) {}  // NOLINT(google-explicit-constructor)

  static ScalarType enumeration(std::string name, std::uint32_t cardinality);

  std::size_t size() const;
  bool is_integer() const;
  bool is_signed() const;
  bool is_floating() const { return kind == ScalarKind::F32 || kind == ScalarKind::F64; }

  /// "f32", "u64", "enum<SensorType,4>", ...
  std::string name() const;

  friend bool operator==(const ScalarType&, const ScalarType&) = default;
};

/// Parses the textual form produced by ScalarType::name().
ScalarType parse_scalar_type(std::string_view text);

/// Bit pattern of one scalar, zero-extended to 64 bits. Equality of RawScalar
/// is bit equality of the stored value.
using RawScalar = std::uint64_t;

inline RawScalar load_raw(const std::byte* p, std::size_t size) {
  RawScalar r = 0;
  std::memcpy(&r, p, size);
  return r;
}

inline void store_raw(std::byte* p, std::size_t size, RawScalar value) {
  std::memcpy(p, &value, size);
}

/// Integer interpretation of a stored integer scalar (sign-extended where the
/// type is signed).
std::int64_t load_integer(const std::byte* p, const ScalarType& type);
void store_integer(std::byte* p, const ScalarType& type, std::int64_t value);
std::int64_t integer_max(const ScalarType& type);

/// Exact textual form: integers in decimal, floats as shortest round-trip.
std::string format_scalar(RawScalar raw, const ScalarType& type);

template <class T>
RawScalar to_raw(T value) {
  static_assert(std::is_trivially_copyable_v<T> && sizeof(T) <= sizeof(RawScalar));
  RawScalar r = 0;
  std::memcpy(&r, &value, sizeof(T));
  return r;
}

template <class T>
T from_raw(RawScalar raw) {
  static_assert(std::is_trivially_copyable_v<T> && sizeof(T) <= sizeof(RawScalar));
  T value;
  std::memcpy(&value, &raw, sizeof(T));
  return value;
}

/// True when a native T may alias storage of the given scalar type.
template <class T>
bool storage_compatible(const ScalarType& type) {
  using U = std::remove_cv_t<T>;
  if (sizeof(U) != type.size()) return false;
  switch (type.kind) {
    case ScalarKind::Bool: return std::is_same_v<U, bool>;
    case ScalarKind::F32: return std::is_same_v<U, float>;
    case ScalarKind::F64: return std::is_same_v<U, double>;
    case ScalarKind::I32:
    case ScalarKind::I64: return std::is_integral_v<U> && std::is_signed_v<U>;
    case ScalarKind::Enum: return std::is_enum_v<U> || (std::is_integral_v<U> && std::is_unsigned_v<U>);
    default: return std::is_integral_v<U> && std::is_unsigned_v<U> && !std::is_same_v<U, bool>;
  }
}

}  // namespace layoutkit
