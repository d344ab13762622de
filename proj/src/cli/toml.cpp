#include "thermolab/cli/toml.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>

#include "thermolab/errors.hpp"

namespace thermolab::toml {

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& msg) {
  if (line == 0) throw Error(ErrorKind::parse, "override: " + msg);
  throw Error(ErrorKind::parse, "line " + std::to_string(line) + ": " + msg);
}

bool is_bare(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

class Cursor {
 public:
  Cursor(std::string_view s, std::size_t line) : s_(s), line_(line) {}

  void skip_ws() {
    while (pos_ < s_.size()) {
      const char c = s_[pos_];
      if (c == ' ' || c == '\t' || c == '\r') {
        ++pos_;
      } else if (c == '\n') {
        ++pos_;
        ++line_;
      } else if (c == '#') {
        while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }
  // spaces and tabs only, no newline
  void skip_blank() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\r')) ++pos_;
  }
  bool done() const { return pos_ >= s_.size(); }
  char peek() const { return done() ? '\0' : s_[pos_]; }
  char take() { return s_[pos_++]; }
  std::size_t line() const { return line_; }

  // end of statement: optional comment then newline or end of input
  void end_of_line() {
    skip_blank();
    if (peek() == '#') {
      while (!done() && peek() != '\n') ++pos_;
    }
    if (done()) return;
    if (peek() != '\n') fail(line_, std::string("unexpected '") + peek() + "' after value");
    ++pos_;
    ++line_;
  }

  std::string key() {
    std::string out;
    for (;;) {
      skip_blank();
      if (peek() == '"') {
        out += basic_string();
      } else {
        const std::size_t start = pos_;
        while (!done() && is_bare(peek())) ++pos_;
        if (pos_ == start) fail(line_, "expected a key");
        out += s_.substr(start, pos_ - start);
      }
      skip_blank();
      if (peek() != '.') return out;
      ++pos_;
      out += '.';
    }
  }

  std::string basic_string() {
    ++pos_;  // opening quote
    std::string out;
    while (true) {
      if (done() || peek() == '\n') fail(line_, "unterminated string");
      const char c = take();
      if (c == '"') return out;
      if (c != '\\') {
        out += c;
        continue;
      }
      if (done()) fail(line_, "unterminated escape");
      switch (take()) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default: fail(line_, "unsupported escape in string");
      }
    }
  }

  Value value() {
    skip_blank();
    Value v;
    v.line = line_;
    const char c = peek();
    if (c == '"') {
      v.data = basic_string();
    } else if (c == '[') {
      ++pos_;
      Array arr;
      for (;;) {
        skip_ws();
        if (peek() == ']') {
          ++pos_;
          break;
        }
        arr.push_back(value());
        skip_ws();
        if (peek() == ',') {
          ++pos_;
          continue;
        }
        if (peek() == ']') {
          ++pos_;
          break;
        }
        fail(line_, "expected ',' or ']' in array");
      }
      v.data = std::move(arr);
    } else {
      const std::size_t start = pos_;
      while (!done() && (is_bare(peek()) || peek() == '.' || peek() == '+')) ++pos_;
      const std::string_view tok = s_.substr(start, pos_ - start);
      if (tok.empty()) fail(line_, "expected a value");
      v.data = scalar(tok);
    }
    return v;
  }

 private:
  std::variant<bool, std::int64_t, double, std::string, Array> scalar(std::string_view tok) {
    if (tok == "true") return true;
    if (tok == "false") return false;
    if (tok == "inf" || tok == "+inf") return std::numeric_limits<double>::infinity();
    std::string clean;
    for (char c : tok) {
      if (c != '_') clean += c;
    }
    const char* b = clean.data();
    const char* e = b + clean.size();
    if (*b == '+') ++b;
    const bool floaty = clean.find_first_of(".eE") != std::string::npos;
    if (!floaty) {
      std::int64_t i = 0;
      const auto r = std::from_chars(b, e, i);
      if (r.ec == std::errc() && r.ptr == e) return i;
    } else {
      double d = 0.0;
      const auto r = std::from_chars(b, e, d);
      if (r.ec == std::errc() && r.ptr == e) return d;
    }
    fail(line_, "invalid value '" + std::string(tok) + "'");
  }

  std::string_view s_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

}  // namespace

const char* Value::type_name() const noexcept {
  switch (data.index()) {
    case 0: return "boolean";
    case 1: return "integer";
    case 2: return "float";
    case 3: return "string";
    default: return "array";
  }
}

void Document::set(std::string key, Value v) {
  for (auto& e : entries_) {
    if (e.key == key) {
      e.value = std::move(v);
      return;
    }
  }
  entries_.push_back({std::move(key), std::move(v)});
}

void Document::insert(std::string key, Value v) {
  if (const Value* old = find(key)) {
    fail(v.line, "duplicate key '" + key + "' (first set on line " + std::to_string(old->line) + ")");
  }
  entries_.push_back({std::move(key), std::move(v)});
}

const Value* Document::find(std::string_view key) const {
  for (const auto& e : entries_) {
    if (e.key == key) return &e.value;
  }
  return nullptr;
}

Document parse(std::string_view text) {
  Document doc;
  Cursor cur(text, 1);
  std::string table;
  for (;;) {
    cur.skip_ws();
    if (cur.done()) break;
    if (cur.peek() == '[') {
      cur.take();
      if (cur.peek() == '[') fail(cur.line(), "arrays of tables are not supported");
      table = cur.key();
      cur.skip_blank();
      if (cur.peek() != ']') fail(cur.line(), "expected ']' after table name");
      cur.take();
      cur.end_of_line();
      continue;
    }
    const std::size_t line = cur.line();
    std::string key = cur.key();
    cur.skip_blank();
    if (cur.peek() != '=') fail(line, "expected '=' after key '" + key + "'");
    cur.take();
    Value v = cur.value();
    v.line = line;
    cur.end_of_line();
    doc.insert(table.empty() ? key : table + "." + key, std::move(v));
  }
  return doc;
}

Document parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::parse, "cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

Value parse_value(std::string_view text, std::size_t line) {
  Cursor cur(text, line);
  Value v = cur.value();
  cur.end_of_line();
  if (!cur.done()) fail(line, "trailing text after value");
  v.line = line;
  return v;
}

void apply_override(Document& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    fail(0, "expected key=value, got '" + std::string(assignment) + "'");
  }
  Cursor kc(assignment.substr(0, eq), 0);
  std::string key = kc.key();
  kc.skip_blank();
  if (!kc.done()) fail(0, "invalid key '" + std::string(assignment.substr(0, eq)) + "'");
  const std::string_view rhs = assignment.substr(eq + 1);
  Value v;
  try {
    v = parse_value(rhs, 0);
  } catch (const Error&) {
    if (rhs.find_first_of("\"[]") != std::string_view::npos || rhs.empty()) throw;
    v.data = std::string(rhs);
  }
  v.line = 0;
  doc.set(std::move(key), std::move(v));
}

}  // namespace thermolab::toml
