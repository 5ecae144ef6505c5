#include "clickmodel/error.hpp"
#include "clickmodel/models.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace clickmodel {

std::string model_to_json(const ModelInstance& m) {
  nlohmann::ordered_json j;
  j["kind"] = std::string(to_string(m.kind()));
  j["shape"] = {{"m", m.shape().m}, {"n", m.shape().n}};
  j["unseen_default"] = m.unseen_default();
  for (const auto& t : m.tables()) {
    nlohmann::ordered_json table = nlohmann::ordered_json::object();
    for (Eigen::Index k = 0; k < t.size; ++k) table[m.key_name(t, k)] = m.parameters()[t.offset + k];
    j[t.name] = std::move(table);
  }
  return j.dump();
}

ModelInstance model_from_json(std::string_view text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed parameter file: ") + e.what());
  }
  try {
    const auto kind = parse_model_kind(j.at("kind").get<std::string>());
    const LayoutShape shape{j.at("shape").at("m").get<int>(), j.at("shape").at("n").get<int>()};
    const double unseen = j.value("unseen_default", 0.5);

    // Vocabularies come from the first item- and topic-keyed tables, in file order.
    const auto layout = table_layout(kind, shape, 0, 0);
    Vocabulary items, topics;
    bool have_items = false, have_topics = false;
    for (const auto& t : layout) {
      if (!j.contains(t.name)) throw ValidationError("missing table \"" + t.name + "\"");
      if (t.key == KeyKind::item && !have_items) {
        for (const auto& [key, _] : j[t.name].items()) items.intern(key);
        have_items = true;
      }
      if (t.key == KeyKind::topic && !have_topics) {
        for (const auto& [key, _] : j[t.name].items()) topics.intern(key);
        have_topics = true;
      }
    }
    ParamTables tables;
    for (const auto& [name, value] : j.items()) {
      if (name == "kind" || name == "shape" || name == "unseen_default") continue;
      // Fit reports and oracle outputs are parameter files with extra fields.
      if (name == "ll_trajectory" || name == "iterations" || name == "converged" || name == "method" ||
          name == "normalization" || name == "undetermined" || name == "log_likelihood" || name == "grid_step") {
        continue;
      }
      if (!value.is_object()) throw ValidationError("table \"" + name + "\" must be an object");
      auto& dst = tables[name];
      for (const auto& [key, v] : value.items()) {
        if (!v.is_number()) throw ValidationError("table \"" + name + "\" key \"" + key + "\" is not a number");
        dst[key] = v.get<double>();
      }
    }
    return make_model(kind, shape, std::move(items), std::move(topics), tables, unseen);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("invalid parameter file: ") + e.what());
  }
}

ModelInstance read_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open parameter file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

void write_model_file(const ModelInstance& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << model_to_json(m) << '\n';
  if (!out) throw Error("write failure on " + path);
}

}  // namespace clickmodel
