#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include <gwrw/harness.hpp>

namespace gwrw::harness {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

namespace {
std::string params_string(const Row& r) {
  std::string s;
  for (const auto& [k, v] : r.params) {
    if (!s.empty()) s += ';';
    s += k + '=' + format_double(v);
  }
  return s;
}

nlohmann::ordered_json number(double x) {
  if (std::isfinite(x)) return x;
  return format_double(x);
}
}  // namespace

std::string ResultTable::csv() const {
  std::ostringstream os;
  os << "# schema_version=" << kSchemaVersion << " suite=" << suite << '\n';
  os << "suite,name,params,value,lo,hi\n";
  for (const auto& r : rows)
    os << suite << ',' << r.name << ',' << params_string(r) << ',' << format_double(r.value) << ','
       << format_double(r.lo) << ',' << format_double(r.hi) << '\n';
  return os.str();
}

std::string ResultTable::json() const {
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["suite"] = suite;
  j["citation"] = citation;
  j["metadata"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : metadata) j["metadata"][k] = v;
  j["checks"] = nlohmann::ordered_json::array();
  for (const auto& c : checks) j["checks"].push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json p = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.params) p[k] = number(v);
    j["rows"].push_back({{"name", r.name}, {"params", p}, {"value", number(r.value)}, {"lo", number(r.lo)},
                         {"hi", number(r.hi)}});
  }
  return j.dump(2) + '\n';
}

void write_outputs(const ResultTable& t, const std::string& prefix) {
  for (const auto& [ext, body] : {std::pair{".csv", t.csv()}, std::pair{".json", t.json()}}) {
    std::ofstream out(prefix + ext, std::ios::binary);
    if (!out) throw Error(ErrorCode::Config, "cannot write '" + prefix + ext + "'");
    out << body;
  }
}

}  // namespace gwrw::harness
