#pragma once

// Native trace format: UTF-8 line-delimited JSON.
//
//   {"id": "sample-1", "label": "benign", "duration": 300}     optional header
//   {"ts": 0.25, "api": "NtCreateFile", "category": "file"}    one per event
//
// Blank lines are ignored. Unknown fields are ignored.

#include <rwprof/error.hpp>
#include <rwprof/trace.hpp>

#include <json.hpp>

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace rwprof {

namespace detail {

// SAX handler for one native-format line. Only top-level members are read.
class NativeLineHandler : public nlohmann::json_sax<nlohmann::json> {
 public:
  enum class Field { none, ts, api, category, id, label, duration };

  std::optional<double> ts;
  std::optional<std::string> api;
  std::optional<std::string> category;
  std::optional<std::string> id;
  std::optional<std::string> label;
  std::optional<double> duration;
  std::string type_error;
  std::string syntax_error;
  bool top_is_object = false;

  void reset() {
    ts.reset();
    api.reset();
    category.reset();
    id.reset();
    label.reset();
    duration.reset();
    type_error.clear();
    syntax_error.clear();
    top_is_object = false;
    depth_ = 0;
    field_ = Field::none;
  }

  bool is_event() const { return ts.has_value() || api.has_value(); }
  bool is_header() const { return id || label || duration; }

  bool null() override { return scalar_mismatch(); }
  bool boolean(bool) override { return scalar_mismatch(); }
  bool number_integer(number_integer_t v) override { return number(static_cast<double>(v)); }
  bool number_unsigned(number_unsigned_t v) override { return number(static_cast<double>(v)); }
  bool number_float(number_float_t v, const string_t&) override { return number(v); }

  bool string(string_t& v) override {
    if (depth_ != 1) return true;
    switch (field_) {
      case Field::api: api = std::move(v); break;
      case Field::category: category = std::move(v); break;
      case Field::id: id = std::move(v); break;
      case Field::label: label = std::move(v); break;
      case Field::ts:
      case Field::duration: return mismatch("a number");
      case Field::none: break;
    }
    field_ = Field::none;
    return true;
  }

  bool binary(binary_t&) override { return true; }

  bool start_object(std::size_t) override {
    if (depth_ == 0) top_is_object = true;
    if (depth_ == 1 && field_ != Field::none) return mismatch("a scalar");
    ++depth_;
    return true;
  }
  bool end_object() override {
    --depth_;
    return true;
  }
  bool start_array(std::size_t) override {
    if (depth_ == 1 && field_ != Field::none) return mismatch("a scalar");
    ++depth_;
    return true;
  }
  bool end_array() override {
    --depth_;
    return true;
  }

  bool key(string_t& k) override {
    if (depth_ != 1) return true;
    if (k == "ts") field_ = Field::ts;
    else if (k == "api") field_ = Field::api;
    else if (k == "category") field_ = Field::category;
    else if (k == "id") field_ = Field::id;
    else if (k == "label") field_ = Field::label;
    else if (k == "duration") field_ = Field::duration;
    else field_ = Field::none;
    return true;
  }

  bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception& ex) override {
    syntax_error = ex.what();
    return false;
  }

 private:
  bool number(double v) {
    if (depth_ != 1) return true;
    switch (field_) {
      case Field::ts: ts = v; break;
      case Field::duration: duration = v; break;
      case Field::id: id = format_number(v); break;
      case Field::api:
      case Field::category:
      case Field::label: return mismatch("a string");
      case Field::none: break;
    }
    field_ = Field::none;
    return true;
  }

  bool scalar_mismatch() {
    if (depth_ != 1 || field_ == Field::none) return true;
    if (field_ == Field::category) {  // "category": null reads as absent
      field_ = Field::none;
      return true;
    }
    return mismatch(field_ == Field::ts || field_ == Field::duration ? "a number" : "a string");
  }

  bool mismatch(const char* expected) {
    static constexpr const char* names[] = {"", "ts", "api", "category", "id", "label", "duration"};
    type_error = std::string("field '") + names[static_cast<int>(field_)] + "' must be " + expected;
    return false;
  }

  static std::string format_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  }

  int depth_ = 0;
  Field field_ = Field::none;
};

inline void append_number(std::string& out, double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

inline std::string json_quote(std::string_view s) { return nlohmann::json(s).dump(); }

// Fast path for the canonical event line this library writes:
//   {"ts":<number>,"api":"<name>"[,"category":"<name>"|null]}
// with plain ASCII names. Anything else returns false and goes through the
// full JSON parser, which also produces the error messages.
struct FastEvent {
  double ts = 0.0;
  std::string_view api;
  std::string_view category;
};

inline bool consume(std::string_view& s, std::string_view lit) {
  if (s.substr(0, lit.size()) != lit) return false;
  s.remove_prefix(lit.size());
  return true;
}

// Length of the JSON number at the front of t, or 0 if there is none.
inline std::size_t json_number_length(std::string_view t) {
  std::size_t i = 0;
  auto digit = [&](std::size_t k) { return k < t.size() && t[k] >= '0' && t[k] <= '9'; };
  if (i < t.size() && t[i] == '-') ++i;
  if (!digit(i)) return 0;
  if (t[i] == '0') ++i;
  else while (digit(i)) ++i;
  if (i < t.size() && t[i] == '.') {
    ++i;
    if (!digit(i)) return 0;
    while (digit(i)) ++i;
  }
  if (i < t.size() && (t[i] == 'e' || t[i] == 'E')) {
    ++i;
    if (i < t.size() && (t[i] == '+' || t[i] == '-')) ++i;
    if (!digit(i)) return 0;
    while (digit(i)) ++i;
  }
  return i;
}

inline bool plain_string(std::string_view& s, std::string_view& out) {
  if (!consume(s, "\"")) return false;
  const auto i = s.find('"');
  if (i == std::string_view::npos) return false;
  for (std::size_t k = 0; k < i; ++k) {
    const auto c = static_cast<unsigned char>(s[k]);
    if (c == '\\' || c < 0x20 || c >= 0x80) return false;
  }
  out = s.substr(0, i);
  s.remove_prefix(i + 1);
  return true;
}

inline bool parse_fast_event(std::string_view s, FastEvent& e) {
  if (!consume(s, "{\"ts\":")) return false;
  const auto len = json_number_length(s);
  if (len == 0) return false;
  const auto res = std::from_chars(s.data(), s.data() + len, e.ts);
  if (res.ec != std::errc() || res.ptr != s.data() + len) return false;
  s.remove_prefix(len);
  if (!consume(s, ",\"api\":") || !plain_string(s, e.api)) return false;
  e.category = {};
  if (consume(s, ",\"category\":")) {
    if (!consume(s, "null") && !plain_string(s, e.category)) return false;
  }
  return s == "}";
}

// Direct-mapped cache in front of a SymbolTable; traces repeat a few names
// millions of times.
class InternCache {
 public:
  explicit InternCache(SymbolTable& table) : table_(table) {}

  SymbolId intern(std::string_view name) {
    auto& slot = slots_[slot_of(name)];
    if (slot.id != kNoSymbol && slot.name == name) return slot.id;
    slot.id = table_.intern(name);
    slot.name.assign(name);
    return slot.id;
  }

 private:
  static std::size_t slot_of(std::string_view s) {
    if (s.empty()) return 0;
    const auto a = static_cast<unsigned char>(s.front());
    const auto b = static_cast<unsigned char>(s[s.size() / 2]);
    const auto c = static_cast<unsigned char>(s.back());
    return (s.size() * 31 + a * 7 + b * 13 + c) % kSlots;
  }

  struct Slot {
    std::string name;
    SymbolId id = kNoSymbol;
  };
  static constexpr std::size_t kSlots = 256;
  SymbolTable& table_;
  std::array<Slot, kSlots> slots_{};
};

}  // namespace detail

namespace detail {

// Line-at-a-time parser state shared by the string and stream entry points.
class NativeParser {
 public:
  NativeParser() : api_cache_(trace_.apis), category_cache_(trace_.categories) {}

  void reserve(std::size_t events) { trace_.events.reserve(events); }

  void line(std::string_view line) {
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) return;

    if (FastEvent fe; parse_fast_event(line, fe)) {
      if (fe.ts < 0.0) throw ValidationError(where() + "negative timestamp");
      if (fe.api.empty()) throw ValidationError(where() + "empty api name");
      if (!std::isfinite(fe.ts)) throw ValidationError(where() + "timestamp must be finite");
      trace_.events.push_back({fe.ts, api_cache_.intern(fe.api),
                               fe.category.empty() ? kNoSymbol : category_cache_.intern(fe.category)});
      seen_event_ = true;
      return;
    }

    handler_.reset();
    const bool ok = nlohmann::json::sax_parse(line, &handler_);
    if (!ok) {
      if (!handler_.type_error.empty()) throw ParseError(where() + handler_.type_error);
      throw ParseError(where() + (handler_.syntax_error.empty() ? "malformed record"
                                                                : handler_.syntax_error));
    }
    if (!handler_.top_is_object) throw ParseError(where() + "record must be a JSON object");

    if (handler_.is_event()) {
      if (!handler_.ts) throw ParseError(where() + "event is missing 'ts'");
      if (!handler_.api) throw ParseError(where() + "event is missing 'api'");
      if (*handler_.ts < 0.0) throw ValidationError(where() + "negative timestamp");
      if (handler_.api->empty()) throw ValidationError(where() + "empty api name");
      if (!std::isfinite(*handler_.ts)) throw ValidationError(where() + "timestamp must be finite");
      trace_.events.push_back({*handler_.ts, api_cache_.intern(*handler_.api),
                               handler_.category && !handler_.category->empty()
                                   ? category_cache_.intern(*handler_.category)
                                   : kNoSymbol});
      seen_event_ = true;
    } else if (handler_.is_header()) {
      if (seen_event_) throw ParseError(where() + "header must precede all events");
      if (handler_.id) trace_.id = *handler_.id;
      if (handler_.label) {
        try {
          trace_.label = parse_label(*handler_.label);
        } catch (const ValidationError& e) {
          throw ValidationError(where() + e.what());
        }
      }
      if (handler_.duration) {
        if (!(*handler_.duration > 0.0)) throw ValidationError(where() + "duration must be positive");
        trace_.declared_duration = *handler_.duration;
      }
    } else {
      throw ParseError(where() + "record has neither event nor header fields");
    }
  }

  Trace finish() {
    if (!trace_.is_sorted()) {
      std::stable_sort(trace_.events.begin(), trace_.events.end(),
                       [](const ApiEvent& a, const ApiEvent& b) { return a.ts < b.ts; });
    }
    return std::move(trace_);
  }

 private:
  std::string where() const { return "line " + std::to_string(line_no_) + ": "; }

  Trace trace_;
  InternCache api_cache_;
  InternCache category_cache_;
  NativeLineHandler handler_;
  std::size_t line_no_ = 0;
  bool seen_event_ = false;
};

}  // namespace detail

/// Parses the native format. Events are returned stably sorted by timestamp.
inline Trace parse_trace_native(std::string_view text) {
  detail::NativeParser parser;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    parser.line(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return parser.finish();
}

/// Streams the input in fixed-size chunks, so memory stays proportional to
/// the event count rather than the file size.
inline Trace parse_trace_native(std::istream& in, std::size_t expected_events = 0) {
  constexpr std::size_t kChunk = 1 << 20;
  detail::NativeParser parser;
  parser.reserve(expected_events);
  std::string buf;
  std::size_t start = 0;  // first unconsumed byte in buf
  std::vector<char> chunk(kChunk);
  while (in) {
    in.read(chunk.data(), static_cast<std::streamsize>(kChunk));
    const auto got = static_cast<std::size_t>(in.gcount());
    if (got == 0) break;
    buf.erase(0, start);
    start = 0;
    buf.append(chunk.data(), got);
    std::string_view view(buf);
    for (auto nl = view.find('\n', start); nl != std::string_view::npos; nl = view.find('\n', start)) {
      parser.line(view.substr(start, nl - start));
      start = nl + 1;
    }
  }
  if (in.bad()) throw IoError("error reading trace stream");
  if (start < buf.size()) parser.line(std::string_view(buf).substr(start));
  return parser.finish();
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string data;
  in.seekg(0, std::ios::end);
  const auto size = in.tellg();
  if (size > 0) {
    data.resize(static_cast<std::size_t>(size));
    in.seekg(0);
    in.read(data.data(), size);
  }
  if (in.bad()) throw IoError("error reading '" + path.string() + "'");
  return data;
}

inline Trace load_trace_native(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  // Event lines run about 60 bytes; a rough hint avoids repeated regrowth.
  std::error_code ec;
  const auto bytes = std::filesystem::file_size(path, ec);
  try {
    return parse_trace_native(in, ec ? 0 : static_cast<std::size_t>(bytes / 64));
  } catch (const IoError&) {
    throw IoError("error reading '" + path.string() + "'");
  }
}

/// Writes the header line followed by one line per event. Timestamps use the
/// shortest representation that round-trips exactly.
inline void serialize_native(const Trace& trace, std::ostream& out) {
  std::string line = "{\"id\":" + detail::json_quote(trace.id) + ",\"label\":\"" +
                     std::string(to_string(trace.label)) + "\"";
  if (trace.declared_duration) {
    line += ",\"duration\":";
    detail::append_number(line, *trace.declared_duration);
  }
  line += "}\n";
  out << line;

  std::vector<std::string> api_q, cat_q;
  api_q.reserve(trace.apis.size());
  for (const auto& n : trace.apis.names()) api_q.push_back(detail::json_quote(n));
  for (const auto& n : trace.categories.names()) cat_q.push_back(detail::json_quote(n));

  std::string chunk;
  chunk.reserve(1 << 16);
  for (const auto& e : trace.events) {
    chunk += "{\"ts\":";
    detail::append_number(chunk, e.ts);
    chunk += ",\"api\":";
    chunk += api_q[e.api];
    if (e.category != kNoSymbol) {
      chunk += ",\"category\":";
      chunk += cat_q[e.category];
    }
    chunk += "}\n";
    if (chunk.size() > (1 << 16) - 256) {
      out << chunk;
      chunk.clear();
    }
  }
  out << chunk;
}

inline std::string serialize_native(const Trace& trace) {
  std::ostringstream out;
  serialize_native(trace, out);
  return out.str();
}

inline void save_trace_native(const Trace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  serialize_native(trace, out);
  if (!out) throw IoError("error writing '" + path.string() + "'");
}

}  // namespace rwprof
