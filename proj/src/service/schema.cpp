#include "h2atlas/service/schema.hpp"

#include <algorithm>
#include <cmath>

namespace h2atlas::service {

namespace {

using nlohmann::json;

bool has_type(const json& v, const std::string& t) {
  if (t == "object") return v.is_object();
  if (t == "array") return v.is_array();
  if (t == "string") return v.is_string();
  if (t == "boolean") return v.is_boolean();
  if (t == "null") return v.is_null();
  if (t == "number") return v.is_number();
  if (t == "integer") {
    if (v.is_number_integer()) return true;
    return v.is_number_float() && std::floor(v.get<double>()) == v.get<double>();
  }
  return false;
}

void check(const json& s, const json& v, const std::string& at, std::vector<std::string>& out) {
  const std::string where = at.empty() ? "/" : at;
  if (auto t = s.find("type"); t != s.end() && !has_type(v, t->get<std::string>())) {
    out.push_back(where + ": expected " + t->get<std::string>());
    return;
  }
  if (auto e = s.find("enum"); e != s.end() && std::find(e->begin(), e->end(), v) == e->end())
    out.push_back(where + ": value " + v.dump() + " not allowed");
  if (v.is_number()) {
    const double x = v.get<double>();
    if (auto m = s.find("minimum"); m != s.end() && !(x >= m->get<double>()))
      out.push_back(where + ": must be >= " + m->dump());
    if (auto m = s.find("maximum"); m != s.end() && !(x <= m->get<double>()))
      out.push_back(where + ": must be <= " + m->dump());
    if (auto m = s.find("exclusiveMinimum"); m != s.end() && !(x > m->get<double>()))
      out.push_back(where + ": must be > " + m->dump());
  }
  if (v.is_string())
    if (auto m = s.find("minLength"); m != s.end() && v.get<std::string>().size() < m->get<std::size_t>())
      out.push_back(where + ": string too short");
  if (v.is_array()) {
    if (auto m = s.find("minItems"); m != s.end() && v.size() < m->get<std::size_t>())
      out.push_back(where + ": needs at least " + m->dump() + " items");
    if (auto m = s.find("maxItems"); m != s.end() && v.size() > m->get<std::size_t>())
      out.push_back(where + ": allows at most " + m->dump() + " items");
    if (auto items = s.find("items"); items != s.end())
      for (std::size_t i = 0; i < v.size(); ++i) check(*items, v[i], at + "/" + std::to_string(i), out);
  }
  if (v.is_object()) {
    if (auto req = s.find("required"); req != s.end())
      for (const auto& k : *req)
        if (!v.contains(k.get<std::string>())) out.push_back(where + ": missing required field " + k.get<std::string>());
    const auto props = s.find("properties");
    const auto extra = s.find("additionalProperties");
    for (const auto& [k, child] : v.items()) {
      const std::string path = at + "/" + k;
      if (props != s.end() && props->contains(k)) {
        check(props->at(k), child, path, out);
      } else if (extra != s.end()) {
        if (extra->is_boolean()) {
          if (!extra->get<bool>()) out.push_back(path + ": unknown field");
        } else {
          check(*extra, child, path, out);
        }
      }
    }
  }
}

}  // namespace

std::vector<std::string> schema_violations(const nlohmann::json& schema, const nlohmann::json& doc) {
  std::vector<std::string> out;
  check(schema, doc, "", out);
  return out;
}

}  // namespace h2atlas::service
