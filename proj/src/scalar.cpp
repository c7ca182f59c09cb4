#include "layoutkit/scalar.hpp"

#include <charconv>
#include <limits>

#include "layoutkit/errors.hpp"

namespace layoutkit {

ScalarType ScalarType::enumeration(std::string name, std::uint32_t cardinality) {
  if (cardinality == 0) throw SchemaError("enum '" + name + "' must have cardinality >= 1");
  ScalarType t(ScalarKind::Enum);
  t.enum_name = std::move(name);
  t.cardinality = cardinality;
  return t;
}

std::size_t ScalarType::size() const {
  switch (kind) {
    case ScalarKind::Bool:
    case ScalarKind::U8: return 1;
    case ScalarKind::U16: return 2;
    case ScalarKind::U32:
    case ScalarKind::I32:
    case ScalarKind::F32: return 4;
    case ScalarKind::U64:
    case ScalarKind::I64:
    case ScalarKind::F64: return 8;
    case ScalarKind::Enum:
      if (cardinality <= 0x100u) return 1;
      if (cardinality <= 0x10000u) return 2;
      return 4;
  }
  return 0;
}

bool ScalarType::is_integer() const {
  switch (kind) {
    case ScalarKind::U8:
    case ScalarKind::U16:
    case ScalarKind::U32:
    case ScalarKind::U64:
    case ScalarKind::I32:
    case ScalarKind::I64: return true;
    default: return false;
  }
}

bool ScalarType::is_signed() const {
  return kind == ScalarKind::I32 || kind == ScalarKind::I64 || is_floating();
}

std::string ScalarType::name() const {
  switch (kind) {
    case ScalarKind::Bool: return "bool";
    case ScalarKind::U8: return "u8";
    case ScalarKind::U16: return "u16";
    case ScalarKind::U32: return "u32";
    case ScalarKind::U64: return "u64";
    case ScalarKind::I32: return "i32";
    case ScalarKind::I64: return "i64";
    case ScalarKind::F32: return "f32";
    case ScalarKind::F64: return "f64";
    case ScalarKind::Enum: return "enum<" + enum_name + "," + std::to_string(cardinality) + ">";
  }
  return "?";
}

ScalarType parse_scalar_type(std::string_view text) {
  static constexpr std::pair<std::string_view, ScalarKind> kNames[] = {
      {"bool", ScalarKind::Bool}, {"u8", ScalarKind::U8},   {"u16", ScalarKind::U16},
      {"u32", ScalarKind::U32},   {"u64", ScalarKind::U64}, {"i32", ScalarKind::I32},
      {"i64", ScalarKind::I64},   {"f32", ScalarKind::F32}, {"f64", ScalarKind::F64},
  };
  for (const auto& [name, kind] : kNames) {
    if (text == name) return ScalarType(kind);
  }
  if (text.starts_with("enum<") && text.ends_with(">")) {
    auto body = text.substr(5, text.size() - 6);
    auto comma = body.rfind(',');
    if (comma != std::string_view::npos && comma > 0) {
      std::uint32_t card = 0;
      auto digits = body.substr(comma + 1);
      auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), card);
      if (ec == std::errc() && ptr == digits.data() + digits.size()) {
        return ScalarType::enumeration(std::string(body.substr(0, comma)), card);
      }
    }
  }
  throw SchemaError("unknown scalar type '" + std::string(text) + "'");
}

std::int64_t load_integer(const std::byte* p, const ScalarType& type) {
  switch (type.kind) {
    case ScalarKind::I32: {
      std::int32_t v;
      std::memcpy(&v, p, sizeof v);
      return v;
    }
    case ScalarKind::I64: {
      std::int64_t v;
      std::memcpy(&v, p, sizeof v);
      return v;
    }
    default:
      return static_cast<std::int64_t>(load_raw(p, type.size()));
  }
}

void store_integer(std::byte* p, const ScalarType& type, std::int64_t value) {
  if (type.kind == ScalarKind::I32) {
    auto v = static_cast<std::int32_t>(value);
    std::memcpy(p, &v, sizeof v);
    return;
  }
  store_raw(p, type.size(), static_cast<RawScalar>(value));
}

std::int64_t integer_max(const ScalarType& type) {
  switch (type.kind) {
    case ScalarKind::U8: return std::numeric_limits<std::uint8_t>::max();
    case ScalarKind::U16: return std::numeric_limits<std::uint16_t>::max();
    case ScalarKind::U32: return std::numeric_limits<std::uint32_t>::max();
    case ScalarKind::I32: return std::numeric_limits<std::int32_t>::max();
    default: return std::numeric_limits<std::int64_t>::max();
  }
}

namespace {

template <class T>
std::string float_text(T value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

}  // namespace

std::string format_scalar(RawScalar raw, const ScalarType& type) {
  switch (type.kind) {
    case ScalarKind::Bool: return (raw & 0xFF) != 0 ? "true" : "false";
    case ScalarKind::F32: return float_text(from_raw<float>(raw));
    case ScalarKind::F64: return float_text(from_raw<double>(raw));
    case ScalarKind::I32: return std::to_string(from_raw<std::int32_t>(raw));
    case ScalarKind::I64: return std::to_string(from_raw<std::int64_t>(raw));
    default: return std::to_string(raw);
  }
}

}  // namespace layoutkit
