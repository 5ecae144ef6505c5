#include "clickmodel/log_io.hpp"

#include "clickmodel/error.hpp"

#include <json.hpp>

#include <fstream>
#include <istream>
#include <ostream>

namespace clickmodel {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::vector<std::string> string_array(const json& value, std::size_t line, const char* what) {
  if (!value.is_array()) throw ParseError(line, std::string(what) + " must be an array of strings");
  std::vector<std::string> out;
  out.reserve(value.size());
  for (const auto& v : value) {
    if (!v.is_string()) throw ParseError(line, std::string(what) + " must contain only strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

void parse_record(const json& rec, std::size_t line, ClickLog& log) {
  if (!rec.is_object()) throw ParseError(line, "record must be a JSON object");
  for (const auto& [key, _] : rec.items()) {
    if (key != "kind" && key != "topics" && key != "items" && key != "clicks") {
      throw ParseError(line, "unknown key \"" + key + "\"");
    }
  }
  if (!rec.contains("kind") || !rec["kind"].is_string()) throw ParseError(line, "missing string field \"kind\"");
  if (!rec.contains("items")) throw ParseError(line, "missing field \"items\"");
  if (!rec.contains("clicks")) throw ParseError(line, "missing field \"clicks\"");

  InterfaceKind kind;
  try {
    kind = parse_interface_kind(rec["kind"].get<std::string>());
  } catch (const ValidationError& e) {
    throw ParseError(line, e.what());
  }

  std::vector<std::string> topics;
  if (rec.contains("topics")) {
    if (kind != InterfaceKind::carousel) {
      throw ParseError(line, "topics forbidden for " + std::string(to_string(kind)));
    }
    topics = string_array(rec["topics"], line, "topics");
  } else if (kind == InterfaceKind::carousel) {
    throw ParseError(line, "topics required for carousel");
  }

  const auto& items_json = rec["items"];
  if (!items_json.is_array()) throw ParseError(line, "items must be an array of rows");
  std::vector<std::vector<std::string>> items;
  for (const auto& row : items_json) items.push_back(string_array(row, line, "items rows"));

  const auto& clicks_json = rec["clicks"];
  if (!clicks_json.is_array()) throw ParseError(line, "clicks must be an array of rows");
  std::vector<std::vector<int>> clicks;
  for (const auto& row : clicks_json) {
    if (!row.is_array()) throw ParseError(line, "clicks rows must be arrays");
    std::vector<int> r;
    for (const auto& c : row) {
      if (!c.is_number_integer()) throw ParseError(line, "click values must be integers 0 or 1");
      auto v = c.get<long long>();
      if (v != 0 && v != 1) throw ParseError(line, "click value outside {0,1}");
      r.push_back(static_cast<int>(v));
    }
    clicks.push_back(std::move(r));
  }

  try {
    log.add(kind, topics, items, clicks);
  } catch (const ParseError&) {
    throw;
  } catch (const ValidationError& e) {
    throw ParseError(line, e.what());
  }
}

}  // namespace

ClickLog parse_log(std::istream& source) {
  ClickLog log;
  std::string text;
  std::size_t line = 0;
  while (std::getline(source, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    json rec;
    try {
      rec = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(line, std::string("malformed JSON: ") + e.what());
    }
    if (line == 1 && rec.is_object() && rec.contains("format")) {
      if (rec["format"] != "clicklog") throw ParseError(line, "unknown format");
      if (rec.contains("version") && rec["version"] != 1) throw ParseError(line, "unsupported version");
      continue;
    }
    parse_record(rec, line, log);
  }
  if (source.bad()) throw Error("read failure on click log stream");
  return log;
}

void write_log(const ClickLog& log, std::ostream& sink) {
  sink << R"({"format":"clicklog","version":1})" << '\n';
  for (const auto& s : log.sessions()) {
    ordered_json rec;
    rec["kind"] = std::string(to_string(s.kind));
    if (s.kind == InterfaceKind::carousel) {
      auto topics = ordered_json::array();
      for (auto t : s.topics) topics.push_back(log.topics().name(t));
      rec["topics"] = std::move(topics);
    }
    auto items = ordered_json::array();
    auto clicks = ordered_json::array();
    for (Eigen::Index i = 0; i < s.items.rows(); ++i) {
      auto item_row = ordered_json::array();
      auto click_row = ordered_json::array();
      for (Eigen::Index j = 0; j < s.items.cols(); ++j) {
        item_row.push_back(log.items().name(s.items(i, j)));
        click_row.push_back(static_cast<int>(s.clicks(i, j)));
      }
      items.push_back(std::move(item_row));
      clicks.push_back(std::move(click_row));
    }
    rec["items"] = std::move(items);
    rec["clicks"] = std::move(clicks);
    sink << rec.dump() << '\n';
  }
  sink.flush();
  if (!sink) throw Error("write failure on click log sink");
}

ClickLog read_log_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open log file " + path);
  return parse_log(in);
}

void write_log_file(const ClickLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  write_log(log, out);
}

}  // namespace clickmodel
