#pragma once

// Reader for the TOML subset used by experiment files: [tables], dotted keys,
// integers, floats, booleans, basic strings and (nested) arrays. Every value
// remembers its source line so later validation can point at it.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace thermolab::toml {

struct Value;
using Array = std::vector<Value>;

struct Value {
  std::variant<bool, std::int64_t, double, std::string, Array> data;
  std::size_t line = 0;  // 0 = command-line override

  bool is_number() const noexcept {
    return std::holds_alternative<std::int64_t>(data) || std::holds_alternative<double>(data);
  }
  const char* type_name() const noexcept;
};

struct Entry {
  std::string key;  // full dotted path
  Value value;
};

class Document {
 public:
  // Replaces an existing key (overrides) or appends.
  void set(std::string key, Value v);
  // Throws a parse error naming the line when the key is already present.
  void insert(std::string key, Value v);
  const Value* find(std::string_view key) const;
  const std::vector<Entry>& entries() const noexcept { return entries_; }

 private:
  std::vector<Entry> entries_;
};

Document parse(std::string_view text);
Document parse_file(const std::string& path);

/// One value in TOML syntax; `line` is stored on the result.
Value parse_value(std::string_view text, std::size_t line);

/// "a.b=value". A value that is not valid TOML is taken as a bare string.
void apply_override(Document& doc, std::string_view assignment);

}  // namespace thermolab::toml
