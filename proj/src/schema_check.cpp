#include "convo/schema_check.hpp"

#include <fstream>

#include "convo/error.hpp"

namespace convo {

using nlohmann::json;

namespace {

class Validator {
 public:
  explicit Validator(const json& root) : root_(root) {}

  void check(const json& schema, const json& doc, const std::string& at) {
    if (schema.is_boolean()) {
      if (!schema.get<bool>()) fail(at, "no value is allowed here");
      return;
    }
    if (!schema.is_object()) return;
    if (const auto ref = schema.find("$ref"); ref != schema.end()) {
      check(resolve(ref->get<std::string>()), doc, at);
      return;
    }
    if (const auto t = schema.find("type"); t != schema.end() && !type_ok(*t, doc)) {
      fail(at, "expected type " + t->dump() + ", got " + doc.type_name());
      return;
    }
    if (const auto e = schema.find("enum"); e != schema.end()) {
      if (std::find(e->begin(), e->end(), doc) == e->end()) fail(at, "value " + doc.dump() + " not in enum");
    }
    if (const auto c = schema.find("const"); c != schema.end() && *c != doc) fail(at, "expected " + c->dump());
    if (const auto any = schema.find("anyOf"); any != schema.end()) {
      bool ok = false;
      for (const auto& option : *any) {
        Validator probe(root_);
        probe.check(option, doc, at);
        if (probe.errors.empty()) {
          ok = true;
          break;
        }
      }
      if (!ok) fail(at, "matches no anyOf branch");
    }
    if (doc.is_string()) {
      if (const auto m = schema.find("minLength"); m != schema.end() && doc.get<std::string>().size() < m->get<std::size_t>()) {
        fail(at, "string shorter than " + m->dump());
      }
    }
    if (doc.is_number()) {
      const double v = doc.get<double>();
      if (const auto m = schema.find("minimum"); m != schema.end() && v < m->get<double>()) fail(at, "below minimum " + m->dump());
      if (const auto m = schema.find("maximum"); m != schema.end() && v > m->get<double>()) fail(at, "above maximum " + m->dump());
    }
    if (doc.is_array()) {
      if (const auto m = schema.find("minItems"); m != schema.end() && doc.size() < m->get<std::size_t>()) {
        fail(at, "fewer than " + m->dump() + " items");
      }
      if (const auto m = schema.find("maxItems"); m != schema.end() && doc.size() > m->get<std::size_t>()) {
        fail(at, "more than " + m->dump() + " items");
      }
      if (const auto items = schema.find("items"); items != schema.end()) {
        for (std::size_t i = 0; i < doc.size(); ++i) check(*items, doc[i], at + "/" + std::to_string(i));
      }
    }
    if (doc.is_object()) {
      const auto props = schema.find("properties");
      if (const auto req = schema.find("required"); req != schema.end()) {
        for (const auto& k : *req) {
          if (!doc.contains(k.get<std::string>())) fail(at, "missing required property " + k.dump());
        }
      }
      const auto extra = schema.find("additionalProperties");
      for (const auto& [k, v] : doc.items()) {
        if (props != schema.end() && props->contains(k)) {
          check((*props)[k], v, at + "/" + k);
        } else if (extra != schema.end()) {
          if (extra->is_boolean() && !extra->get<bool>()) {
            fail(at, "unexpected property \"" + k + "\"");
          } else if (extra->is_object()) {
            check(*extra, v, at + "/" + k);
          }
        }
      }
    }
  }

  std::vector<std::string> errors;

 private:
  static bool type_ok(const json& t, const json& doc) {
    if (t.is_array()) {
      for (const auto& one : t) {
        if (type_ok(one, doc)) return true;
      }
      return false;
    }
    const std::string name = t.get<std::string>();
    if (name == "object") return doc.is_object();
    if (name == "array") return doc.is_array();
    if (name == "string") return doc.is_string();
    if (name == "boolean") return doc.is_boolean();
    if (name == "null") return doc.is_null();
    if (name == "number") return doc.is_number();
    if (name == "integer") {
      return doc.is_number_integer() || (doc.is_number_float() && doc.get<double>() == static_cast<double>(static_cast<std::int64_t>(doc.get<double>())));
    }
    throw Error("unsupported schema type " + name, "report");
  }

  const json& resolve(const std::string& ref) const {
    if (ref.rfind("#/", 0) != 0) throw Error("only local $ref is supported: " + ref, "report");
    return root_.at(json::json_pointer(ref.substr(1)));
  }

  void fail(const std::string& at, const std::string& what) { errors.push_back((at.empty() ? "/" : at) + ": " + what); }

  const json& root_;
};

}  // namespace

std::vector<std::string> validate_schema(const json& schema, const json& doc) {
  Validator v(schema);
  v.check(schema, doc, "");
  return v.errors;
}

json load_report_schema(const std::filesystem::path& path) {
  const std::filesystem::path p = path.empty() ? std::filesystem::path(CONVO_SCHEMA_DIR) / "run_report.schema.json" : path;
  std::ifstream in(p);
  if (!in) throw Error("cannot read report schema " + p.string(), "report");
  return json::parse(in);
}

}  // namespace convo
