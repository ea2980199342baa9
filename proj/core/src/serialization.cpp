#include "qasync/serialization.hpp"

#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qasync/errors.hpp"

namespace qasync {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

Delay parse_delay(const std::string& field, std::size_t line) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(field, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != field.size())
    throw ConfigurationError("delays csv line " + std::to_string(line) + ": not an integer: '" +
                             field + "'");
  return static_cast<Delay>(v);
}

}  // namespace

void write_delays_csv(std::ostream& out, const DelaySequence& seq) {
  out << "d_t\n";
  for (Delay d : seq.values()) out << d << '\n';
}

DelaySequence read_delays_csv(std::istream& in) {
  std::string line;
  std::vector<Delay> values;
  std::size_t n = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++n;
    const std::string field = trim(line);
    if (field.empty()) continue;
    if (!header_seen) {
      header_seen = true;
      if (field == "d_t") continue;
    }
    values.push_back(parse_delay(field, n));
  }
  return DelaySequence(std::move(values));
}

std::string delays_to_json(const DelaySequence& seq) { return json(seq.values()).dump(); }

DelaySequence delays_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigurationError(std::string("delays json: ") + e.what());
  }
  if (!j.is_array()) throw ConfigurationError("delays json must be an array");
  std::vector<Delay> values;
  values.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number_integer()) throw ConfigurationError("delays json: non-integer entry");
    values.push_back(v.get<Delay>());
  }
  return DelaySequence(std::move(values));
}

DelaySequence load_delays(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const std::string head = trim(text.substr(0, 64));
  if (!head.empty() && head.front() == '[') return delays_from_json(text);
  std::istringstream is(text);
  return read_delays_csv(is);
}

void save_delays(const std::string& path, const DelaySequence& seq) {
  std::ofstream out(path);
  if (!out) throw ConfigurationError("cannot write " + path);
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json")
    out << delays_to_json(seq) << '\n';
  else
    write_delays_csv(out, seq);
}

std::string stats_to_json(const DelayStats& stats, int indent) {
  json j;
  j["T"] = stats.horizon();
  j["tau_avg"] = stats.tau_avg();
  j["tau_med"] = stats.tau_med();
  j["tau_max"] = stats.tau_max();
  return j.dump(indent);
}

std::string bound_report_to_json(const BoundReport& r, int indent) {
  json j;
  j["setting"] = to_string(r.setting);
  j["formula_id"] = r.formula_id;
  j["inputs"] = r.inputs;
  j["terms"] = r.terms;
  j["value"] = r.value;
  j["source"] = r.source;
  return j.dump(indent);
}

std::string diagnostics_to_json(const MiniBatchDiagnostics& d, int indent) {
  json j{{"K_target", d.K_target},
         {"K_dispatched", d.K_dispatched},
         {"used", d.used},
         {"discarded", d.discarded}};
  return j.dump(indent);
}

}  // namespace qasync
